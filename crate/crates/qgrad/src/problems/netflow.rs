//! Optimal network flow dual.
//!
//! Primal: maximize Σ_e −C_e(v_e) with quadratic edge costs C_e(v) = ½ρ_e v²
//! subject to flow balance A·v = c (node-edge incidence A, injections c with
//! Σc = 0). The dual is unconstrained and the per-edge subproblem is closed
//! form: v_e = −(Aᵀx)_e / ρ_e. Since 𝟙ᵀA = 0 the lifted dual gradient sums
//! to zero and the dual optimum is an affine line; the oracle works in the
//! reduced space with one reference node pinned to zero so the optimizer set
//! is a point.

use super::ObjectiveOracle;
use crate::optimizer::Domain;
use crate::rng;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Directed graph with quadratic edge costs. `edges[e] = (tail, head)` means
/// edge e leaves `tail` and enters `head`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowNetwork {
    pub nodes: usize,
    pub edges: Vec<(usize, usize)>,
    /// Injections (positive) / consumptions (negative), summing to zero.
    pub injections: Vec<f64>,
    /// ρ_e in C_e(v) = ½ρ_e v².
    pub edge_cost: Vec<f64>,
    /// Node whose dual variable is pinned to zero.
    pub reference: usize,
    pub seed: Option<u64>,
}

#[derive(Debug, Error)]
pub enum NetflowError {
    #[error("need at least two nodes and one edge")]
    Degenerate,
    #[error("edge {0} touches a node outside 0..{1} or is a self-loop")]
    BadEdge(usize, usize),
    #[error("injections must sum to zero (got {0:.3e})")]
    UnbalancedInjections(f64),
    #[error("edge cost coefficients must be positive")]
    NonPositiveCost,
    #[error("reference node {0} out of range")]
    BadReference(usize),
    #[error("shape mismatch between edges, costs, and injections")]
    Shape,
}

impl FlowNetwork {
    pub fn validate(&self) -> Result<(), NetflowError> {
        if self.nodes < 2 || self.edges.is_empty() {
            return Err(NetflowError::Degenerate);
        }
        if self.injections.len() != self.nodes || self.edge_cost.len() != self.edges.len() {
            return Err(NetflowError::Shape);
        }
        for (e, &(tail, head)) in self.edges.iter().enumerate() {
            if tail >= self.nodes || head >= self.nodes || tail == head {
                return Err(NetflowError::BadEdge(e, self.nodes));
            }
        }
        let total: f64 = self.injections.iter().sum();
        if total.abs() > 1e-9 {
            return Err(NetflowError::UnbalancedInjections(total));
        }
        if self.edge_cost.iter().any(|&r| r <= 0.0) {
            return Err(NetflowError::NonPositiveCost);
        }
        if self.reference >= self.nodes {
            return Err(NetflowError::BadReference(self.reference));
        }
        Ok(())
    }
}

/// Connected random instance: a random spanning tree plus `extra_edges`
/// uniform chords, ρ_e uniform in `rho_range`, injections uniform and
/// re-centered to sum exactly to zero. Deterministic in `seed`.
pub fn generate_flow_network(
    seed: u64,
    nodes: usize,
    extra_edges: usize,
    rho_range: (f64, f64),
    injection_scale: f64,
) -> Result<FlowNetwork, NetflowError> {
    if nodes < 2 {
        return Err(NetflowError::Degenerate);
    }
    let mut rng = rng::substream(seed, 0xF10);
    let mut edges: Vec<(usize, usize)> = (1..nodes)
        .map(|i| (rng.random_range(0..i), i))
        .collect();
    for _ in 0..extra_edges {
        loop {
            let a = rng.random_range(0..nodes);
            let b = rng.random_range(0..nodes);
            if a != b && !edges.contains(&(a, b)) && !edges.contains(&(b, a)) {
                edges.push((a, b));
                break;
            }
        }
    }
    let edge_cost: Vec<f64> = (0..edges.len())
        .map(|_| rng.random_range(rho_range.0..rho_range.1))
        .collect();
    let mut injections: Vec<f64> =
        (0..nodes).map(|_| (rng.random::<f64>() * 2.0 - 1.0) * injection_scale).collect();
    let mean = injections.iter().sum::<f64>() / nodes as f64;
    for c in injections.iter_mut() {
        *c -= mean;
    }
    let tail_sum: f64 = injections[..nodes - 1].iter().sum();
    injections[nodes - 1] = -tail_sum;
    let net = FlowNetwork {
        nodes,
        edges,
        injections,
        edge_cost,
        reference: nodes - 1,
        seed: Some(seed),
    };
    net.validate()?;
    Ok(net)
}

/// Dual oracle in the reduced space R^{N−1} (reference node pinned to zero).
/// The reduced objective is the convex quadratic
/// f(x) = ½ xᵀH x + c_rᵀ x with H = A_r diag(1/ρ) A_rᵀ.
#[derive(Debug, Clone)]
pub struct FlowDualOracle {
    net: FlowNetwork,
    /// Indices of the non-reference nodes, in node order.
    reduced_nodes: Vec<usize>,
    hessian: DMatrix<f64>,
    reduced_injections: DVector<f64>,
    lipschitz: f64,
    strong_convexity: Option<f64>,
    x_star: Option<Vec<f64>>,
    f_star: Option<f64>,
}

impl FlowDualOracle {
    pub fn new(net: FlowNetwork) -> Result<Self, NetflowError> {
        net.validate()?;
        let n = net.nodes;
        let reduced_nodes: Vec<usize> = (0..n).filter(|&i| i != net.reference).collect();
        let dims = n - 1;
        // H = Σ_e (1/ρ_e)(a_e a_eᵀ) restricted to non-reference rows/cols,
        // where a_e = e_tail − e_head.
        let mut h = DMatrix::<f64>::zeros(dims, dims);
        let pos: Vec<Option<usize>> = (0..n)
            .map(|i| reduced_nodes.iter().position(|&r| r == i))
            .collect();
        for (e, &(tail, head)) in net.edges.iter().enumerate() {
            let w = 1.0 / net.edge_cost[e];
            if let Some(ti) = pos[tail] {
                h[(ti, ti)] += w;
            }
            if let Some(hi) = pos[head] {
                h[(hi, hi)] += w;
            }
            if let (Some(ti), Some(hi)) = (pos[tail], pos[head]) {
                h[(ti, hi)] -= w;
                h[(hi, ti)] -= w;
            }
        }
        let reduced_injections =
            DVector::from_iterator(dims, reduced_nodes.iter().map(|&i| net.injections[i]));
        let eig = nalgebra::SymmetricEigen::new(h.clone());
        let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let lmin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let strong_convexity = (lmin > 1e-10 * lmax.max(1.0)).then_some(lmin);
        let (x_star, f_star) = if strong_convexity.is_some() {
            let sol = h.clone().lu().solve(&(-&reduced_injections));
            match sol {
                Some(xs) => {
                    let f = 0.5 * (xs.transpose() * &h * &xs)[(0, 0)]
                        + reduced_injections.dot(&xs);
                    (Some(xs.iter().cloned().collect()), Some(f))
                }
                None => (None, None),
            }
        } else {
            (None, None)
        };
        Ok(FlowDualOracle {
            net,
            reduced_nodes,
            hessian: h,
            reduced_injections,
            lipschitz: lmax,
            strong_convexity,
            x_star,
            f_star,
        })
    }

    pub fn network(&self) -> &FlowNetwork {
        &self.net
    }

    /// Lifts a reduced dual vector to all nodes (reference gets zero).
    pub fn lift(&self, x: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.net.nodes];
        for (r, &node) in self.reduced_nodes.iter().enumerate() {
            full[node] = x[r];
        }
        full
    }

    /// Primal recovery: v_e(x) = −(x_tail − x_head)/ρ_e.
    pub fn flows(&self, x: &[f64]) -> Vec<f64> {
        let full = self.lift(x);
        self.net
            .edges
            .iter()
            .zip(&self.net.edge_cost)
            .map(|(&(tail, head), &rho)| -(full[tail] - full[head]) / rho)
            .collect()
    }

    /// Gradient in the full node space: c − A·v(x). Its components always
    /// sum to zero because 𝟙ᵀA = 0.
    pub fn lifted_gradient(&self, x: &[f64]) -> Vec<f64> {
        let v = self.flows(x);
        let mut g = self.net.injections.clone();
        for (e, &(tail, head)) in self.net.edges.iter().enumerate() {
            g[tail] -= v[e];
            g[head] += v[e];
        }
        g
    }

    /// ‖A·v(x) − c‖: primal feasibility residual of the recovered flow.
    pub fn flow_residual(&self, x: &[f64]) -> f64 {
        crate::linalg::norm(&self.lifted_gradient(x))
    }
}

impl ObjectiveOracle for FlowDualOracle {
    fn dims(&self) -> usize {
        self.net.nodes - 1
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let xv = DVector::from_column_slice(x);
        0.5 * (xv.transpose() * &self.hessian * &xv)[(0, 0)] + self.reduced_injections.dot(&xv)
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let xv = DVector::from_column_slice(x);
        let g = &self.hessian * xv + &self.reduced_injections;
        g.iter().cloned().collect()
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn strong_convexity(&self) -> Option<f64> {
        self.strong_convexity
    }

    fn f_star(&self) -> Option<f64> {
        self.f_star
    }

    fn x_star(&self) -> Option<Vec<f64>> {
        self.x_star.clone()
    }

    fn domain(&self) -> Domain {
        Domain::Unconstrained
    }
}
