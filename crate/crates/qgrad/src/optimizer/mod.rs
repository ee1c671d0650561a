//! Iteration engines for the quantized-direction recursion
//! `x(t+1) = [x(t) − γ(t) d(t)]_X` and the componentwise sign variant on the
//! nonnegative orthant, plus the step/stopping machinery around them.

mod engine;
mod schedule;
mod stopping;
mod trace;

pub use engine::{run, sweep_constant, RunError, RunSpec, SweepMember};
pub use schedule::{ScheduleError, StepSchedule};
pub use stopping::{StoppingError, StoppingRule};
pub use trace::{StopReason, TraceRow, RunTrace};

use crate::linalg::norm;
use crate::quantization::{QuantizationError, QuantizationSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Feasible region of the iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Unconstrained,
    NonnegativeOrthant,
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("box bounds must be finite with lower <= upper componentwise")]
    InvalidBox,
    #[error("expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

impl Domain {
    pub fn validate(&self) -> Result<(), DomainError> {
        if let Domain::Box { lower, upper } = self {
            let ok = lower.len() == upper.len()
                && lower
                    .iter()
                    .zip(upper)
                    .all(|(l, u)| l.is_finite() && u.is_finite() && l <= u);
            if !ok {
                return Err(DomainError::InvalidBox);
            }
        }
        Ok(())
    }

    /// Euclidean projection, in place. Componentwise clamp for the orthant
    /// and box cases, identity when unconstrained.
    pub fn project_in_place(&self, x: &mut [f64]) {
        match self {
            Domain::Unconstrained => {}
            Domain::NonnegativeOrthant => {
                for v in x.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            Domain::Box { lower, upper } => {
                for ((v, l), u) in x.iter_mut().zip(lower).zip(upper) {
                    *v = v.clamp(*l, *u);
                }
            }
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            Domain::Unconstrained => true,
            Domain::NonnegativeOrthant => x.iter().all(|&v| v >= -tol),
            Domain::Box { lower, upper } => x
                .iter()
                .zip(lower)
                .zip(upper)
                .all(|((&v, &l), &u)| v >= l - tol && v <= u + tol),
        }
    }
}

/// Euclidean projection onto a domain.
pub fn project(x: &[f64], domain: &Domain) -> Vec<f64> {
    let mut out = x.to_vec();
    domain.project_in_place(&mut out);
    out
}

#[derive(Debug, Error)]
pub enum StepError {
    #[error("expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("iterate must lie in the nonnegative orthant (component {index} = {value})")]
    NegativeEntry { index: usize, value: f64 },
    #[error(transparent)]
    Quantization(#[from] QuantizationError),
}

/// One step of the quantized recursion: project `x − γ·quantize(g, D)`.
/// A zero gradient (hold rule) leaves `x` unchanged.
pub fn qgm_step(
    x: &[f64],
    gradient: &[f64],
    set: &QuantizationSet,
    gamma: f64,
    domain: &Domain,
) -> Result<Vec<f64>, StepError> {
    debug_assert!(gamma >= 0.0, "step sizes are nonnegative");
    if x.len() != gradient.len() {
        return Err(StepError::DimensionMismatch {
            expected: x.len(),
            got: gradient.len(),
        });
    }
    let mut d = vec![0.0; x.len()];
    if !set.quantize_into(gradient, &mut d)? {
        return Ok(x.to_vec());
    }
    let mut next: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi - gamma * di).collect();
    domain.project_in_place(&mut next);
    Ok(next)
}

/// The sign recursion on the orthant, computed componentwise in O(N):
/// `x ← ⌈x − (γ/√N)·sign(g)⌉⁺` with sign(0) = +1.
///
/// Unlike [`qgm_step`] this applies no hold rule: an exactly zero gradient
/// still moves every coordinate by −γ/√N (and is then clamped). The two
/// agree wherever ‖g‖ exceeds the zero tolerance.
pub fn sign_projected_step(x: &[f64], gradient: &[f64], gamma: f64) -> Result<Vec<f64>, StepError> {
    debug_assert!(gamma >= 0.0, "step sizes are nonnegative");
    if x.len() != gradient.len() {
        return Err(StepError::DimensionMismatch {
            expected: x.len(),
            got: gradient.len(),
        });
    }
    if let Some((i, &v)) = x.iter().enumerate().find(|(_, &v)| v < 0.0) {
        return Err(StepError::NegativeEntry { index: i, value: v });
    }
    let scale = gamma / (x.len() as f64).sqrt();
    Ok(x.iter()
        .zip(gradient)
        .map(|(&xi, &gi)| {
            let s = if gi < 0.0 { -1.0 } else { 1.0 };
            (xi - scale * s).max(0.0)
        })
        .collect())
}

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("alpha must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// The orthant optimality measure `L_α(x) = ‖x − ⌈x − α∇f(x)⌉⁺‖`.
/// Zero exactly at the constrained optima of a convex objective on R₊^N.
pub fn measure_l_alpha(x: &[f64], gradient: &[f64], alpha: f64) -> Result<f64, MeasureError> {
    if alpha <= 0.0 {
        return Err(MeasureError::NonPositiveAlpha(alpha));
    }
    if x.len() != gradient.len() {
        return Err(MeasureError::DimensionMismatch {
            expected: x.len(),
            got: gradient.len(),
        });
    }
    let sq: f64 = x
        .iter()
        .zip(gradient)
        .map(|(&xi, &gi)| {
            let proj = (xi - alpha * gi).max(0.0);
            (xi - proj) * (xi - proj)
        })
        .sum();
    Ok(sq.sqrt())
}

/// One side-by-side evaluation of a scalar projection inequality.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MarginCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl MarginCheck {
    fn of(lhs: f64, rhs: f64) -> Self {
        let slack = 1e-12 * lhs.abs().max(rhs.abs()).max(1.0);
        MarginCheck { lhs, rhs, holds: lhs <= rhs + slack }
    }
}

/// The three scalar projection inequalities, for β in \[0,1\], z ∈ R and
/// x, α₁ ≤ α₂ in R₊:
///
/// 1. β·|x − ⌈x − z⌉⁺|  ≤  |x − ⌈x − βz⌉⁺|
/// 2. |x − ⌈x − α₁z⌉⁺|  ≤  |x − ⌈x − α₂z⌉⁺|
/// 3. 0  ≤  z·(x − ⌈x − α₁z⌉⁺)
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProjectionMargins {
    pub scaling: MarginCheck,
    pub monotonicity: MarginCheck,
    pub sign: MarginCheck,
}

impl ProjectionMargins {
    pub fn all_hold(&self) -> bool {
        self.scaling.holds && self.monotonicity.holds && self.sign.holds
    }
}

#[derive(Debug, Error)]
pub enum MarginError {
    #[error("beta must lie in [0, 1], got {0}")]
    BetaOutOfRange(f64),
    #[error("x and both alphas must be nonnegative with alpha1 <= alpha2")]
    BadParameters,
}

/// Evaluates both sides of each of the three scalar projection inequalities.
/// Comparisons carry 1e-12 relative slack against rounding; mathematically
/// all three always hold on the admissible parameter range.
pub fn scalar_projection_margins(
    x: f64,
    z: f64,
    alpha1: f64,
    alpha2: f64,
    beta: f64,
) -> Result<ProjectionMargins, MarginError> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(MarginError::BetaOutOfRange(beta));
    }
    if x < 0.0 || alpha1 < 0.0 || alpha2 < 0.0 || alpha1 > alpha2 {
        return Err(MarginError::BadParameters);
    }
    let resid = |step: f64| (x - (x - step).max(0.0)).abs();
    let scaling = MarginCheck::of(beta * resid(z), resid(beta * z));
    let monotonicity = MarginCheck::of(resid(alpha1 * z), resid(alpha2 * z));
    let sign_rhs = z * (x - (x - alpha1 * z).max(0.0));
    let sign = MarginCheck::of(0.0, sign_rhs);
    Ok(ProjectionMargins { scaling, monotonicity, sign })
}

/// Euclidean norm of a gradient; exposed next to the step functions since
/// stopping rules quote it.
pub fn gradient_norm(gradient: &[f64]) -> f64 {
    norm(gradient)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn qgm_step_unconstrained() {
        let d = QuantizationSet::sign(2).unwrap();
        let x = qgm_step(&[1.0, 1.0], &[1.0, 1.0], &d, 0.1, &Domain::Unconstrained).unwrap();
        let want = 1.0 - 0.1 * FRAC_1_SQRT_2;
        assert!(close(&x, &[want, want], 1e-12));
        assert!((want - 0.92929).abs() < 1e-5);
    }

    #[test]
    fn qgm_step_clamps_at_orthant() {
        let d = QuantizationSet::sign(2).unwrap();
        let x = qgm_step(&[0.1, 0.0], &[1.0, -1.0], &d, 1.0, &Domain::NonnegativeOrthant).unwrap();
        assert!(close(&x, &[0.0, FRAC_1_SQRT_2], 1e-12));
    }

    #[test]
    fn qgm_step_holds_on_zero_gradient() {
        let d = QuantizationSet::sign(2).unwrap();
        let x = qgm_step(&[0.3, 0.7], &[0.0, 0.0], &d, 1.0, &Domain::Unconstrained).unwrap();
        assert!(close(&x, &[0.3, 0.7], 0.0));
    }

    #[test]
    fn sign_step_values() {
        let x = sign_projected_step(&[0.0, 2.0], &[-3.0, 1.0], 0.5).unwrap();
        assert!(close(&x, &[0.35355, 1.64645], 1e-5));

        let x = sign_projected_step(&[0.0, 0.0], &[1.0, 1.0], 1.0).unwrap();
        assert!(close(&x, &[0.0, 0.0], 0.0));

        // sign(0) = +1 still steps
        let x = sign_projected_step(&[5.0], &[0.0], 1.0).unwrap();
        assert!(close(&x, &[4.0], 1e-15));
    }

    #[test]
    fn sign_step_rejects_negative_iterate() {
        assert!(matches!(
            sign_projected_step(&[-0.1], &[1.0], 0.5),
            Err(StepError::NegativeEntry { index: 0, .. })
        ));
    }

    #[test]
    fn projection_cases() {
        assert_eq!(project(&[-1.0, 2.0], &Domain::NonnegativeOrthant), vec![0.0, 2.0]);
        let b = Domain::Box { lower: vec![0.0], upper: vec![1.0] };
        assert_eq!(project(&[0.5], &b), vec![0.5]);
        // nonexpansiveness spot value
        let u = project(&[-1.0, 2.0], &Domain::NonnegativeOrthant);
        let v = project(&[1.0, 2.0], &Domain::NonnegativeOrthant);
        assert!(crate::linalg::dist(&u, &v) <= crate::linalg::dist(&[-1.0, 2.0], &[1.0, 2.0]));
    }

    #[test]
    fn l_alpha_values() {
        assert!((measure_l_alpha(&[0.0], &[-1.0], 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(measure_l_alpha(&[1.0], &[0.0], 1.0).unwrap() == 0.0);
        // boundary optimum: positive gradient at x = 0
        assert!(measure_l_alpha(&[0.0], &[2.0], 0.5).unwrap() == 0.0);
        assert!(measure_l_alpha(&[1.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn margin_examples() {
        let m = scalar_projection_margins(2.0, 3.0, 0.0, 0.0, 0.5).unwrap();
        assert!((m.scaling.lhs - 1.0).abs() < 1e-15 && (m.scaling.rhs - 1.5).abs() < 1e-15);
        assert!(m.all_hold());

        let m = scalar_projection_margins(1.0, -2.0, 0.1, 1.0, 0.0).unwrap();
        assert!((m.monotonicity.lhs - 0.2).abs() < 1e-15);
        assert!((m.monotonicity.rhs - 2.0).abs() < 1e-15);
        assert!(m.all_hold());

        let m = scalar_projection_margins(0.5, -1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((m.sign.rhs - 1.0).abs() < 1e-15);
        assert!(m.all_hold());

        assert!(scalar_projection_margins(1.0, 1.0, 0.5, 0.2, 0.5).is_err());
        assert!(scalar_projection_margins(1.0, 1.0, 0.1, 0.2, 1.5).is_err());
    }
}
