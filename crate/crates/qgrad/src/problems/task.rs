//! Task allocation dual.
//!
//! Primal: split N continuous tasks across K machines, maximize
//! Σ_k −C_k(w_k) with per-machine diagonal quadratic costs
//! C_k(w) = Σ_j a_{k,j} w_j², subject to Σ_k w_k = c and the machine-local
//! region {w ≥ 0, Σ_j w_j ≤ cap}. The equality constraint makes the dual
//! unconstrained; each machine's subproblem is a tiny QP solved exactly by
//! active-set enumeration, and the dual gradient is the demand residual
//! c − Σ_k w_k(x).

use super::ObjectiveOracle;
use crate::optimizer::Domain;
use crate::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskAllocation {
    pub machines: usize,
    pub tasks: usize,
    /// Row-major K×N cost coefficients a_{k,j}, all ≥ some μ > 0.
    pub coefficients: Vec<f64>,
    /// Total amount of each task that must be completed.
    pub demand: Vec<f64>,
    /// Per-machine budget: Σ_j w_j ≤ cap.
    pub cap: f64,
    pub seed: Option<u64>,
}

impl TaskAllocation {
    pub fn validate(&self) {
        assert!(self.machines >= 1 && self.tasks >= 1, "need machines and tasks");
        assert_eq!(self.coefficients.len(), self.machines * self.tasks);
        assert_eq!(self.demand.len(), self.tasks);
        assert!(self.cap > 0.0, "cap must be positive");
        assert!(
            self.coefficients.iter().all(|&a| a > 0.0),
            "cost coefficients must be positive"
        );
        assert!(self.tasks <= 16, "active-set enumeration is for desk-scale task counts");
    }

    fn coeff(&self, machine: usize, task: usize) -> f64 {
        self.coefficients[machine * self.tasks + task]
    }

    /// min_k min_j a_{k,j}: the strong-concavity modulus the reported
    /// Lipschitz constant K/μ quotes.
    pub fn mu(&self) -> f64 {
        self.coefficients.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Four-machine experiment shape: K machines, N tasks, coefficients uniform in
/// `coeff_range`, budget `cap`, fixed `demand`. Deterministic in `seed`.
pub fn generate_task_allocation(
    seed: u64,
    machines: usize,
    tasks: usize,
    coeff_range: (f64, f64),
    cap: f64,
    demand: Vec<f64>,
) -> TaskAllocation {
    let mut rng = rng::substream(seed, 0x7A5);
    let coefficients: Vec<f64> = (0..machines * tasks)
        .map(|_| rng.random_range(coeff_range.0..coeff_range.1))
        .collect();
    let prob = TaskAllocation { machines, tasks, coefficients, demand, cap, seed: Some(seed) };
    prob.validate();
    prob
}

/// Exact solver for one machine subproblem:
///   minimize Σ_j a_j w_j² + x_j w_j   over {w ≥ 0, Σ w ≤ cap}.
///
/// Enumerates every active set (each subset of tasks pinned to zero, budget
/// constraint on or off), solves the equality-constrained stationarity
/// system in closed form, and keeps the feasible candidate with the lowest
/// objective. Exact for this strictly convex QP.
pub fn solve_machine_qp(a: &[f64], x: &[f64], cap: f64) -> (Vec<f64>, u64) {
    let n = a.len();
    debug_assert_eq!(x.len(), n);
    let tol = 1e-12;
    let mut best_w = vec![0.0; n];
    let mut best_obj = f64::INFINITY;
    let mut best_case: u64 = 0;
    for zero_mask in 0..(1u32 << n) {
        let free: Vec<usize> = (0..n).filter(|&j| (zero_mask >> j) & 1 == 0).collect();
        for cap_active in [false, true] {
            if cap_active && free.is_empty() {
                continue;
            }
            let mut w = vec![0.0; n];
            if cap_active {
                // Stationarity with multiplier ν on Σw = cap:
                //   2 a_j w_j + x_j + ν = 0  →  w_j = −(x_j + ν)/(2 a_j)
                let inv_sum: f64 = free.iter().map(|&j| 1.0 / (2.0 * a[j])).sum();
                let x_term: f64 = free.iter().map(|&j| x[j] / (2.0 * a[j])).sum();
                let nu = -(cap + x_term) / inv_sum;
                for &j in &free {
                    w[j] = -(x[j] + nu) / (2.0 * a[j]);
                }
            } else {
                for &j in &free {
                    w[j] = -x[j] / (2.0 * a[j]);
                }
            }
            let feasible = free.iter().all(|&j| w[j] >= -tol)
                && (cap_active || w.iter().sum::<f64>() <= cap + tol);
            if !feasible {
                continue;
            }
            for v in w.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            let obj: f64 = (0..n).map(|j| a[j] * w[j] * w[j] + x[j] * w[j]).sum();
            if obj < best_obj - 1e-15 {
                best_obj = obj;
                best_w = w;
                best_case = (zero_mask as u64) << 1 | u64::from(cap_active);
            }
        }
    }
    (best_w, best_case)
}

/// Dual oracle of the allocation problem, on an unconstrained domain.
#[derive(Debug, Clone)]
pub struct TaskDualOracle {
    prob: TaskAllocation,
}

impl TaskDualOracle {
    pub fn new(prob: TaskAllocation) -> Self {
        prob.validate();
        TaskDualOracle { prob }
    }

    pub fn problem(&self) -> &TaskAllocation {
        &self.prob
    }

    /// Per-machine allocations w_k(x).
    pub fn allocations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        (0..self.prob.machines)
            .map(|k| {
                let a: Vec<f64> =
                    (0..self.prob.tasks).map(|j| self.prob.coeff(k, j)).collect();
                solve_machine_qp(&a, x, self.prob.cap).0
            })
            .collect()
    }

    /// Σ_k w_k(x).
    pub fn total_allocation(&self, x: &[f64]) -> Vec<f64> {
        let mut total = vec![0.0; self.prob.tasks];
        for w in self.allocations(x) {
            for (t, v) in total.iter_mut().zip(&w) {
                *t += v;
            }
        }
        total
    }

    /// ‖Σ_k w_k(x) − c‖: primal feasibility residual of the recovery.
    pub fn demand_residual(&self, x: &[f64]) -> f64 {
        let total = self.total_allocation(x);
        crate::linalg::dist(&total, &self.prob.demand)
    }
}

impl ObjectiveOracle for TaskDualOracle {
    fn dims(&self) -> usize {
        self.prob.tasks
    }

    fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.prob.tasks);
        // f(x) = Σ_k max_w [−C_k(w) − xᵀw] + xᵀc
        let mut value = crate::linalg::dot(x, &self.prob.demand);
        for k in 0..self.prob.machines {
            let a: Vec<f64> = (0..self.prob.tasks).map(|j| self.prob.coeff(k, j)).collect();
            let (w, _) = solve_machine_qp(&a, x, self.prob.cap);
            let inner: f64 = (0..self.prob.tasks)
                .map(|j| a[j] * w[j] * w[j] + x[j] * w[j])
                .sum();
            value -= inner;
        }
        value
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.prob.tasks);
        let total = self.total_allocation(x);
        self.prob.demand.iter().zip(&total).map(|(c, t)| c - t).collect()
    }

    fn lipschitz(&self) -> f64 {
        // K/μ (= 4/μ for the four-machine shape).
        self.prob.machines as f64 / self.prob.mu()
    }

    fn domain(&self) -> Domain {
        Domain::Unconstrained
    }

    fn branch_signature(&self, x: &[f64]) -> Option<u64> {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for k in 0..self.prob.machines {
            let a: Vec<f64> = (0..self.prob.tasks).map(|j| self.prob.coeff(k, j)).collect();
            let (_, case) = solve_machine_qp(&a, x, self.prob.cap);
            h = (h ^ case).wrapping_mul(0x1000_0000_01b3);
        }
        Some(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_machine() -> (Vec<f64>, f64) {
        (vec![1.0, 1.0], 3.0)
    }

    #[test]
    fn free_prices_give_zero_work() {
        let (a, cap) = unit_machine();
        let (w, _) = solve_machine_qp(&a, &[0.0, 0.0], cap);
        assert_eq!(w, vec![0.0, 0.0]);
    }

    #[test]
    fn negative_price_pulls_interior_solution() {
        let (a, cap) = unit_machine();
        let (w, _) = solve_machine_qp(&a, &[-4.0, 0.0], cap);
        assert!((w[0] - 2.0).abs() < 1e-12 && w[1].abs() < 1e-12);
    }

    #[test]
    fn budget_binds_symmetrically() {
        let (a, cap) = unit_machine();
        let (w, _) = solve_machine_qp(&a, &[-8.0, -8.0], cap);
        assert!((w[0] - 1.5).abs() < 1e-12 && (w[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn gradient_is_demand_residual() {
        let prob = TaskAllocation {
            machines: 2,
            tasks: 2,
            coefficients: vec![1.0, 2.0, 3.0, 1.0],
            demand: vec![1.0, 1.0],
            cap: 3.0,
            seed: None,
        };
        let oracle = TaskDualOracle::new(prob);
        let g = oracle.grad(&[0.0, 0.0]);
        // zero prices → zero allocations → gradient = demand
        assert_eq!(g, vec![1.0, 1.0]);
    }

    #[test]
    fn qp_matches_dense_grid_probe() {
        // coarse sanity sweep; the full grid comparison lives in the
        // integration suite
        let mut rng = rng::seeded(99);
        for _ in 0..50 {
            let a = vec![rng.random_range(1.0..5.0), rng.random_range(1.0..5.0)];
            let x = vec![rng.random_range(-12.0..4.0), rng.random_range(-12.0..4.0)];
            let cap = 3.0;
            let (w, _) = solve_machine_qp(&a, &x, cap);
            let obj = |w0: f64, w1: f64| a[0] * w0 * w0 + x[0] * w0 + a[1] * w1 * w1 + x[1] * w1;
            let best = obj(w[0], w[1]);
            let step = 0.01;
            let mut grid_best = f64::INFINITY;
            let mut w0 = 0.0;
            while w0 <= cap {
                let mut w1 = 0.0;
                while w0 + w1 <= cap {
                    grid_best = grid_best.min(obj(w0, w1));
                    w1 += step;
                }
                w0 += step;
            }
            assert!(best <= grid_best + 1e-9, "QP {best} vs grid {grid_best}");
            assert!(w[0] >= 0.0 && w[1] >= 0.0 && w[0] + w[1] <= cap + 1e-9);
        }
    }
}
