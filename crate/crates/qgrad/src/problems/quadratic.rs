//! Isotropic quadratic test objective f(x) = (s/2)‖x − c‖².

use super::ObjectiveOracle;
use crate::optimizer::Domain;

/// f(x) = (scale/2)·‖x − center‖² on a configurable domain. L = μ = scale;
/// the optimizer is the projection of `center` onto the domain.
#[derive(Debug, Clone)]
pub struct QuadraticOracle {
    center: Vec<f64>,
    scale: f64,
    domain: Domain,
    x_star: Vec<f64>,
    f_star: f64,
}

impl QuadraticOracle {
    pub fn new(center: Vec<f64>, scale: f64, domain: Domain) -> Self {
        assert!(scale > 0.0, "scale must be positive");
        domain.validate().expect("valid domain");
        let x_star = crate::optimizer::project(&center, &domain);
        let f_star = 0.5
            * scale
            * x_star
                .iter()
                .zip(&center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        QuadraticOracle { center, scale, domain, x_star, f_star }
    }

    pub fn unconstrained(center: Vec<f64>, scale: f64) -> Self {
        Self::new(center, scale, Domain::Unconstrained)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }
}

impl ObjectiveOracle for QuadraticOracle {
    fn dims(&self) -> usize {
        self.center.len()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        0.5 * self.scale
            * x.iter()
                .zip(&self.center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.center).map(|(a, b)| self.scale * (a - b)).collect()
    }

    fn lipschitz(&self) -> f64 {
        self.scale
    }

    fn strong_convexity(&self) -> Option<f64> {
        Some(self.scale)
    }

    fn f_star(&self) -> Option<f64> {
        Some(self.f_star)
    }

    fn x_star(&self) -> Option<Vec<f64>> {
        Some(self.x_star.clone())
    }

    fn domain(&self) -> Domain {
        self.domain.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_and_gradient() {
        let q = QuadraticOracle::unconstrained(vec![1.0, 1.0], 1.0);
        assert_eq!(q.grad(&[0.0, 0.0]), vec![-1.0, -1.0]);
        assert_eq!(q.eval(&[1.0, 1.0]), 0.0);
        assert_eq!(q.f_star(), Some(0.0));
    }

    #[test]
    fn orthant_optimum_is_clamped_center() {
        let q = QuadraticOracle::new(vec![-1.0, 2.0], 2.0, Domain::NonnegativeOrthant);
        assert_eq!(q.x_star(), Some(vec![0.0, 2.0]));
        // f* = (2/2)·(0-(-1))² = 1
        assert_eq!(q.f_star(), Some(1.0));
    }
}
