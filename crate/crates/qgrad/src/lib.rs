//! Gradient methods whose descent direction is quantized to a finite set of
//! unit vectors before being applied.
//!
//! The crate is organized around four pieces:
//!
//! - [`quantization`]: construction and analysis of finite direction sets
//!   `D ⊆ S^{N-1}` — the sign set, the minimal (N+1)-element set, circular
//!   sets in the plane, the signed normal basis, and custom sets loaded from
//!   text files. Includes the cover-angle computation (`cos θ*`), the
//!   positive-spanning properness test, and the per-iteration bit cost.
//! - [`optimizer`]: the projected iteration `x ← [x − γ d]_X` with `d` drawn
//!   from a quantization set, step-size schedules, stopping rules, and CSV
//!   trace recording.
//! - [`bounds`]: closed-form step-size rules and iteration-count bounds for
//!   the constant-step and strongly convex regimes, usable both to plan runs
//!   and to validate recorded traces.
//! - [`problems`]: objective oracles — analytic test functions plus the
//!   three dual-decomposition families (TCP flow control, optimal network
//!   flow, task allocation) with closed-form primal subproblems.
//!
//! All randomness flows from caller-provided 64-bit seeds through ChaCha8, a
//! counter-based generator, so every run is bit-reproducible across
//! platforms.

pub mod bounds;
pub mod optimizer;
pub mod problems;
pub mod quantization;
pub mod rng;

pub(crate) mod linalg;

pub use optimizer::{Domain, RunSpec, RunTrace, StepSchedule, StoppingRule};
pub use problems::ObjectiveOracle;
pub use quantization::{CoverAnalysis, Direction, QuantizationSet, SetKind};
