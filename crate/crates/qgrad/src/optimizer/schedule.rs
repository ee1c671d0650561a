//! Step-size schedules. The diminishing family must be non-summable and
//! converge to zero for the asymptotic convergence guarantee; `Power`
//! realizes that as γ(t) = γ₀/(1+t)^p with p ∈ (0, 1].

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSchedule {
    Constant { gamma: f64 },
    Power { gamma0: f64, p: f64 },
}

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("step size must be positive and finite, got {0}")]
    NonPositive(f64),
    #[error("summable schedule: p = {0} > 1 makes Σ γ(t) finite, so the iterates can stall short of the optimum")]
    Summable(f64),
    #[error("non-diminishing schedule: p = {0} <= 0 keeps γ(t) from converging to zero")]
    NotDiminishing(f64),
}

impl StepSchedule {
    pub fn constant(gamma: f64) -> Result<Self, ScheduleError> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(ScheduleError::NonPositive(gamma));
        }
        Ok(StepSchedule::Constant { gamma })
    }

    pub fn power(gamma0: f64, p: f64) -> Result<Self, ScheduleError> {
        if !(gamma0 > 0.0 && gamma0.is_finite()) {
            return Err(ScheduleError::NonPositive(gamma0));
        }
        if p > 1.0 {
            return Err(ScheduleError::Summable(p));
        }
        if p <= 0.0 {
            return Err(ScheduleError::NotDiminishing(p));
        }
        Ok(StepSchedule::Power { gamma0, p })
    }

    /// Validates an already-deserialized schedule.
    pub fn validated(self) -> Result<Self, ScheduleError> {
        match self {
            StepSchedule::Constant { gamma } => Self::constant(gamma),
            StepSchedule::Power { gamma0, p } => Self::power(gamma0, p),
        }
    }

    /// γ(t).
    pub fn gamma(&self, t: usize) -> f64 {
        match *self {
            StepSchedule::Constant { gamma } => gamma,
            StepSchedule::Power { gamma0, p } => gamma0 / (1.0 + t as f64).powf(p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_is_constant() {
        let s = StepSchedule::constant(0.1).unwrap();
        assert_eq!(s.gamma(7), 0.1);
    }

    #[test]
    fn power_values() {
        let s = StepSchedule::power(1.0, 0.6).unwrap();
        assert!((s.gamma(5) - 1.0 / 6f64.powf(0.6)).abs() < 1e-15);
        assert!((s.gamma(5) - 0.34128).abs() < 1e-5);
        assert_eq!(s.gamma(0), 1.0);
    }

    #[test]
    fn invalid_schedules_rejected() {
        assert_eq!(StepSchedule::power(1.0, 1.5), Err(ScheduleError::Summable(1.5)));
        assert_eq!(StepSchedule::power(1.0, 0.0), Err(ScheduleError::NotDiminishing(0.0)));
        assert!(StepSchedule::constant(0.0).is_err());
        assert!(StepSchedule::constant(f64::NAN).is_err());
    }
}
