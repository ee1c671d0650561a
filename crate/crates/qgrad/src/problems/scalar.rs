//! Scalar benchmark with bounded gradient: the Huber-type function around 1.
//!
//! f(x) = ½(x−1)² for |x−1| ≤ 1 and |x−1| − ½ otherwise, so ∇f(x) = x−1
//! inside and sign(x−1) outside. Unique optimizer x* = 1, f* = 0, L = 1,
//! ‖∇f‖ ≤ 1. With any constant step-size γ the iterates of the sign
//! recursion end up hopping a fixed lattice around x* and cannot converge —
//! the function witnesses that diminishing, non-summable steps are necessary
//! and not just sufficient.

use super::ObjectiveOracle;
use crate::optimizer::Domain;

#[derive(Debug, Clone, Copy, Default)]
pub struct ScalarBenchmarkOracle;

impl ObjectiveOracle for ScalarBenchmarkOracle {
    fn dims(&self) -> usize {
        1
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let r = x[0] - 1.0;
        if r.abs() <= 1.0 {
            0.5 * r * r
        } else {
            r.abs() - 0.5
        }
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let r = x[0] - 1.0;
        vec![if r.abs() <= 1.0 { r } else { r.signum() }]
    }

    fn lipschitz(&self) -> f64 {
        1.0
    }

    fn grad_bound(&self) -> Option<f64> {
        Some(1.0)
    }

    fn f_star(&self) -> Option<f64> {
        Some(0.0)
    }

    fn x_star(&self) -> Option<Vec<f64>> {
        Some(vec![1.0])
    }

    fn domain(&self) -> Domain {
        Domain::NonnegativeOrthant
    }

    fn branch_signature(&self, x: &[f64]) -> Option<u64> {
        let r = x[0] - 1.0;
        Some(if r < -1.0 {
            0
        } else if r <= 1.0 {
            1
        } else {
            2
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branch_values() {
        let f = ScalarBenchmarkOracle;
        assert_eq!(f.eval(&[1.5]), 0.125);
        assert_eq!(f.grad(&[1.5]), vec![0.5]);
        assert_eq!(f.grad(&[0.5]), vec![-0.5]);
        assert_eq!(f.eval(&[3.0]), 1.5);
        assert_eq!(f.grad(&[3.0]), vec![1.0]);
        assert_eq!(f.eval(&[1.0]), 0.0);
    }

    #[test]
    fn c1_at_the_seams() {
        let f = ScalarBenchmarkOracle;
        for seam in [0.0, 2.0] {
            let lo = f.grad(&[seam - 1e-12])[0];
            let hi = f.grad(&[seam + 1e-12])[0];
            assert!((lo - hi).abs() < 1e-9);
            let vlo = f.eval(&[seam - 1e-12]);
            let vhi = f.eval(&[seam + 1e-12]);
            assert!((vlo - vhi).abs() < 1e-9);
        }
    }
}
