//! Stopping rules. Type-1 rules bound a first-order optimality measure
//! (gradient norm unconstrained, L_α on the orthant); the Type-2 rule bounds
//! the objective gap and needs a known optimal value.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StoppingRule {
    /// Type-1, unconstrained: ‖∇f(x)‖ ≤ ε.
    GradNorm { epsilon: f64 },
    /// Type-1, orthant: L_α(x) ≤ ε.
    LAlpha { epsilon: f64, alpha: f64 },
    /// Type-2: f(x) − f* ≤ ε. Requires the oracle to know f*.
    Gap { epsilon: f64 },
    /// Plain iteration cap.
    MaxIter { iters: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum StoppingError {
    #[error("stopping tolerance must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("alpha must be positive, got {0}")]
    NonPositiveAlpha(f64),
}

impl StoppingRule {
    pub fn validate(&self) -> Result<(), StoppingError> {
        match *self {
            StoppingRule::GradNorm { epsilon } | StoppingRule::Gap { epsilon } => {
                if epsilon <= 0.0 {
                    return Err(StoppingError::NonPositiveEpsilon(epsilon));
                }
            }
            StoppingRule::LAlpha { epsilon, alpha } => {
                if epsilon <= 0.0 {
                    return Err(StoppingError::NonPositiveEpsilon(epsilon));
                }
                if alpha <= 0.0 {
                    return Err(StoppingError::NonPositiveAlpha(alpha));
                }
            }
            StoppingRule::MaxIter { .. } => {}
        }
        Ok(())
    }
}
