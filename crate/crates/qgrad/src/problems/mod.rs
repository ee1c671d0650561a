//! Objective oracles.
//!
//! Each oracle evaluates a convex, differentiable f with L-Lipschitz
//! gradient, exposes the constants the bound calculators need, and — for the
//! dual-decomposition families — recovers the primal subproblem solutions
//! behind the dual gradient (the gradient is always the primal constraint
//! residual).

mod fd;
mod netflow;
mod quadratic;
mod scalar;
mod task;
mod tcp;

pub use fd::{fd_gradient_check, FdCheckError};
pub use netflow::{generate_flow_network, FlowDualOracle, FlowNetwork, NetflowError};
pub use quadratic::QuadraticOracle;
pub use scalar::ScalarBenchmarkOracle;
pub use task::{generate_task_allocation, solve_machine_qp, TaskAllocation, TaskDualOracle};
pub use tcp::{generate_tcp, TcpDualOracle, TcpError, TcpNetwork};

use crate::optimizer::Domain;
use serde::{Deserialize, Serialize};

/// Contract every objective implements.
///
/// `grad` must be the true gradient of `eval` wherever f is differentiable
/// (finite-difference checkable via [`fd_gradient_check`]), and `lipschitz`
/// must upper-bound every gradient difference quotient.
pub trait ObjectiveOracle: Send + Sync {
    fn dims(&self) -> usize;
    fn eval(&self, x: &[f64]) -> f64;
    fn grad(&self, x: &[f64]) -> Vec<f64>;
    /// Reported Lipschitz constant of the gradient.
    fn lipschitz(&self) -> f64;
    /// Bound on ‖∇f‖ over the domain, when one exists.
    fn grad_bound(&self) -> Option<f64> {
        None
    }
    fn strong_convexity(&self) -> Option<f64> {
        None
    }
    fn f_star(&self) -> Option<f64> {
        None
    }
    fn x_star(&self) -> Option<Vec<f64>> {
        None
    }
    fn domain(&self) -> Domain;
    /// Identifier of the smooth piece containing x (active sets of primal
    /// subproblems, branch of a piecewise definition). `None` means globally
    /// smooth. The finite-difference checker refuses points whose piece
    /// changes within its stencil.
    fn branch_signature(&self, _x: &[f64]) -> Option<u64> {
        None
    }
}

/// Distance from x to the oracle's optimizer set, when the optimizer is
/// known (all our known-optimum oracles have a unique one).
pub fn distance_to_optimum(oracle: &dyn ObjectiveOracle, x: &[f64]) -> Option<f64> {
    oracle.x_star().map(|xs| crate::linalg::dist(x, &xs))
}

/// Quadratic instance with a seeded random center in [-2, 2]^N.
pub fn generate_quadratic(seed: u64, dims: usize, scale: f64, domain: Domain) -> ProblemInstance {
    use rand::Rng;
    let mut rng = crate::rng::substream(seed, 0x04AD);
    let center: Vec<f64> = (0..dims).map(|_| rng.random_range(-2.0..2.0)).collect();
    ProblemInstance::Quadratic { center, scale, domain }
}

/// A replayable problem instance: everything needed to rebuild the oracle,
/// with matrices stored row-major and generator seeds recorded.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProblemInstance {
    Tcp(TcpNetwork),
    NetworkFlow(FlowNetwork),
    TaskAllocation(TaskAllocation),
    Quadratic {
        center: Vec<f64>,
        scale: f64,
        domain: Domain,
    },
    ScalarBenchmark,
}

#[derive(Debug, thiserror::Error)]
pub enum InstanceError {
    #[error("instance JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("instance file: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Tcp(#[from] TcpError),
    #[error(transparent)]
    Netflow(#[from] NetflowError),
    #[error("quadratic scale must be positive, got {0}")]
    NonPositiveScale(f64),
}

impl ProblemInstance {
    pub fn to_json(&self) -> Result<String, InstanceError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), InstanceError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, InstanceError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Builds the oracle this instance describes.
    pub fn build_oracle(&self) -> Result<Box<dyn ObjectiveOracle>, InstanceError> {
        Ok(match self {
            ProblemInstance::Tcp(net) => Box::new(TcpDualOracle::new(net.clone())?),
            ProblemInstance::NetworkFlow(net) => Box::new(FlowDualOracle::new(net.clone())?),
            ProblemInstance::TaskAllocation(prob) => Box::new(TaskDualOracle::new(prob.clone())),
            ProblemInstance::Quadratic { center, scale, domain } => {
                if *scale <= 0.0 {
                    return Err(InstanceError::NonPositiveScale(*scale));
                }
                Box::new(QuadraticOracle::new(center.clone(), *scale, domain.clone()))
            }
            ProblemInstance::ScalarBenchmark => Box::new(ScalarBenchmarkOracle),
        })
    }

    pub fn dims(&self) -> usize {
        match self {
            ProblemInstance::Tcp(net) => net.links,
            ProblemInstance::NetworkFlow(net) => net.nodes - 1,
            ProblemInstance::TaskAllocation(prob) => prob.tasks,
            ProblemInstance::Quadratic { center, .. } => center.len(),
            ProblemInstance::ScalarBenchmark => 1,
        }
    }
}
