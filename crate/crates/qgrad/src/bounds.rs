//! Closed-form step-size rules, iteration bounds, and rate plans for the
//! constant-step quantized recursions.
//!
//! Conventions shared by every calculator:
//! - upper iteration bounds apply their ceilings exactly as stated; the
//!   lower bound is floored (its integrality is otherwise left implicit);
//! - an inadmissible supplied γ is an error, never silently clamped —
//!   clamping would fake applicability of the bound;
//! - when both the exact initial gap and an upper bound K on it are known,
//!   the gap is used (it is tighter) and K is the fallback.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Constants describing a problem/run pair for the calculators.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemConstants {
    /// Lipschitz constant of the gradient (L > 0).
    pub lipschitz: f64,
    /// Dimension N.
    pub dims: usize,
    /// Cover cosine of the quantizer, in (0, 1].
    pub cos_theta: f64,
    /// Target accuracy ε > 0.
    pub epsilon: f64,
    /// Optimality-measure parameter α > 0 (orthant bounds).
    pub alpha: f64,
    /// Gradient bound B (orthant bounds).
    pub grad_bound: Option<f64>,
    /// Strong-convexity modulus μ.
    pub strong_convexity: Option<f64>,
    /// Exact initial gap f(x0) − f*.
    pub gap: Option<f64>,
    /// Upper bound K ≥ f(x0) − f*.
    pub gap_upper: Option<f64>,
    /// ‖∇f(x0)‖ (lower bound on T).
    pub grad0_norm: Option<f64>,
}

impl ProblemConstants {
    pub fn new(lipschitz: f64, dims: usize, cos_theta: f64, epsilon: f64) -> Self {
        ProblemConstants {
            lipschitz,
            dims,
            cos_theta,
            epsilon,
            alpha: 1.0,
            grad_bound: None,
            strong_convexity: None,
            gap: None,
            gap_upper: None,
            grad0_norm: None,
        }
    }

    pub fn with_gap(mut self, gap: f64) -> Self {
        self.gap = Some(gap);
        self
    }

    pub fn with_grad_bound(mut self, b: f64) -> Self {
        self.grad_bound = Some(b);
        self
    }

    pub fn with_strong_convexity(mut self, mu: f64) -> Self {
        self.strong_convexity = Some(mu);
        self
    }

    pub fn with_grad0_norm(mut self, g0: f64) -> Self {
        self.grad0_norm = Some(g0);
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<(), BoundsError> {
        let positives = [
            ("lipschitz", self.lipschitz),
            ("cos_theta", self.cos_theta),
            ("epsilon", self.epsilon),
            ("alpha", self.alpha),
        ];
        for (name, v) in positives {
            if !(v > 0.0 && v.is_finite()) {
                return Err(BoundsError::InvalidConstant { name, value: v });
            }
        }
        if self.cos_theta > 1.0 {
            return Err(BoundsError::InvalidConstant { name: "cos_theta", value: self.cos_theta });
        }
        if self.dims == 0 {
            return Err(BoundsError::InvalidConstant { name: "dims", value: 0.0 });
        }
        for (name, v) in [
            ("grad_bound", self.grad_bound),
            ("strong_convexity", self.strong_convexity),
            ("gap", self.gap),
            ("gap_upper", self.gap_upper),
            ("grad0_norm", self.grad0_norm),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(BoundsError::InvalidConstant { name, value: v });
                }
            }
        }
        Ok(())
    }

    fn effective_gap(&self) -> Option<f64> {
        self.gap.or(self.gap_upper)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum BoundsError {
    #[error("constant {name} must be positive and finite (cos_theta also <= 1), got {value}")]
    InvalidConstant { name: &'static str, value: f64 },
    #[error("missing constant: {0}")]
    Missing(&'static str),
    #[error("step size {gamma} outside the admissible open interval (0, {max})")]
    GammaOutOfRange { gamma: f64, max: f64 },
    #[error("step size must be nonnegative, got {0}")]
    NegativeGamma(f64),
    #[error("iteration count must be at least 1")]
    ZeroIterations,
}

/// Which statement produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaId {
    Type1Unconstrained,
    Type1Orthant,
    RateFromGap,
    RateFromGapBound,
    StronglyConvex,
    DescentMargins,
}

/// Evaluated bound outputs, together with the step-size data that produced
/// them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub formula: FormulaId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_upper: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_lower: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_star: Option<f64>,
    /// Admissible open interval for γ.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_range: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_used: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_star: Option<f64>,
    /// Objective-gap bound ε²/(2μ) at gradient level ε (strongly convex).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_bound: Option<f64>,
}

impl BoundReport {
    fn empty(formula: FormulaId) -> Self {
        BoundReport {
            formula,
            t_upper: None,
            t_lower: None,
            gamma_star: None,
            gamma_range: None,
            gamma_used: None,
            epsilon_star: None,
            kappa_star: None,
            gap_bound: None,
        }
    }
}

impl std::fmt::Display for BoundReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:<12} = {:?}", "formula", self.formula)?;
        if let Some((lo, hi)) = self.gamma_range {
            writeln!(f, "{:<12} = ({lo}, {hi})", "gamma_range")?;
        }
        let fields = [
            ("gamma_star", self.gamma_star),
            ("gamma_used", self.gamma_used),
            ("epsilon_star", self.epsilon_star),
            ("kappa_star", self.kappa_star),
            ("gap_bound", self.gap_bound),
        ];
        for (name, value) in fields {
            if let Some(v) = value {
                writeln!(f, "{name:<12} = {v}")?;
            }
        }
        for (name, value) in [("t_upper", self.t_upper), ("t_lower", self.t_lower)] {
            if let Some(v) = value {
                writeln!(f, "{name:<12} = {v}")?;
            }
        }
        Ok(())
    }
}

/// Guaranteed per-step decreases outside the target set.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DescentMargins {
    /// Cover margin δ = (2·cosθ·ε/L − γ)·(L/2)·γ; positive iff
    /// γ ∈ (0, 2·cosθ·ε/L).
    pub delta: f64,
    /// Sign-method margin δ̄ = (2ε²/(L·α²·B·N^{3/2}) − γ)·(L/2)·γ; present
    /// only when the gradient bound B is known.
    pub delta_bar: Option<f64>,
}

/// Evaluates both descent margins at step size γ. The signs of the results
/// tell whether γ is inside the respective admissible ranges.
pub fn descent_margins(c: &ProblemConstants, gamma: f64) -> Result<DescentMargins, BoundsError> {
    c.validate()?;
    if gamma < 0.0 {
        return Err(BoundsError::NegativeGamma(gamma));
    }
    let delta = (2.0 * c.cos_theta * c.epsilon / c.lipschitz - gamma) * 0.5 * c.lipschitz * gamma;
    let delta_bar = c
        .grad_bound
        .map(|b| (sign_gamma_max(c, b) - gamma) * 0.5 * c.lipschitz * gamma);
    Ok(DescentMargins { delta, delta_bar })
}

/// δ̄ alone; errors when the gradient bound is missing.
pub fn sign_descent_margin(c: &ProblemConstants, gamma: f64) -> Result<f64, BoundsError> {
    descent_margins(c, gamma)?
        .delta_bar
        .ok_or(BoundsError::Missing("grad_bound"))
}

/// 2ε²/(L·α²·B·N^{3/2}) — the right end of the admissible γ interval for the
/// sign method on the orthant.
fn sign_gamma_max(c: &ProblemConstants, b: f64) -> f64 {
    2.0 * c.epsilon * c.epsilon
        / (c.lipschitz * c.alpha * c.alpha * b * (c.dims as f64).powf(1.5))
}

/// Variant selector for [`type1_plan`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Type1Variant {
    /// θ-cover method, unconstrained: stop when ‖∇f‖ ≤ ε.
    Unconstrained,
    /// Sign method on the orthant: stop when L_α ≤ ε. Needs B.
    Orthant,
}

/// Iteration plan for the Type-1 stopping condition with constant step size.
///
/// Unconstrained: γ ∈ (0, 2·cosθ·ε/L), optimum γ* = cosθ·ε/L,
///   T ≤ ⌈2·gap / (γ(2·cosθ·ε − Lγ))⌉, and (given ‖∇f(x0)‖) the lower bound
///   T ≥ (‖∇f(x0)‖ − ε)/(γL).
/// Orthant: γ ∈ (0, 2ε²/(L·α²·B·N^{3/2})), optimum γ* = ε²/(L·α²·B·N^{3/2}),
///   T ≤ ⌈2·gap·α²·B·N^{3/2} / (γ(2ε² − Lγ·α²·B·N^{3/2}))⌉.
///
/// Passing `gamma: None` plans at γ*.
pub fn type1_plan(
    c: &ProblemConstants,
    gamma: Option<f64>,
    variant: Type1Variant,
) -> Result<BoundReport, BoundsError> {
    c.validate()?;
    let mut report = BoundReport::empty(match variant {
        Type1Variant::Unconstrained => FormulaId::Type1Unconstrained,
        Type1Variant::Orthant => FormulaId::Type1Orthant,
    });
    let (gamma_max, gamma_star) = match variant {
        Type1Variant::Unconstrained => {
            let m = 2.0 * c.cos_theta * c.epsilon / c.lipschitz;
            (m, m / 2.0)
        }
        Type1Variant::Orthant => {
            let b = c.grad_bound.ok_or(BoundsError::Missing("grad_bound"))?;
            let m = sign_gamma_max(c, b);
            (m, m / 2.0)
        }
    };
    let g = gamma.unwrap_or(gamma_star);
    if !(g > 0.0 && g < gamma_max) {
        return Err(BoundsError::GammaOutOfRange { gamma: g, max: gamma_max });
    }
    report.gamma_range = Some((0.0, gamma_max));
    report.gamma_star = Some(gamma_star);
    report.gamma_used = Some(g);

    if let Some(gap) = c.effective_gap() {
        let n32 = (c.dims as f64).powf(1.5);
        let (numer, denom) = match variant {
            Type1Variant::Unconstrained => (
                2.0 * gap,
                g * (2.0 * c.cos_theta * c.epsilon - c.lipschitz * g),
            ),
            Type1Variant::Orthant => {
                let b = c.grad_bound.expect("checked above");
                let scale = c.alpha * c.alpha * b * n32;
                (
                    2.0 * gap * scale,
                    g * (2.0 * c.epsilon * c.epsilon - c.lipschitz * g * scale),
                )
            }
        };
        report.t_upper = Some((numer / denom).ceil() as u64);
    }
    if variant == Type1Variant::Unconstrained {
        if let Some(g0) = c.grad0_norm {
            let lower = (g0 - c.epsilon) / (g * c.lipschitz);
            report.t_lower = Some(lower.max(0.0).floor() as u64);
        }
    }
    if report.t_upper.is_none() && report.t_lower.is_none() {
        return Err(BoundsError::Missing("gap (or grad0_norm for the lower bound)"));
    }
    Ok(report)
}

/// Best guaranteed accuracy after T iterations, and the step size achieving
/// it:
///   ε* = √(2L·gap)/(cosθ·√T),  γ* = √(2·gap/(L·T)),
///   κ* = √(L·gap)/(cosθ·√(2T)),
/// with the identity κ* + γ*·L/(2cosθ) = ε*. With only an upper bound K on
/// the gap: γ = 2K/(LT) and ε* = √(2LK)/(cosθ·√T).
pub fn optimal_rate_plan(t: u64, c: &ProblemConstants) -> Result<BoundReport, BoundsError> {
    c.validate()?;
    if t == 0 {
        return Err(BoundsError::ZeroIterations);
    }
    let tf = t as f64;
    if let Some(gap) = c.gap {
        let mut report = BoundReport::empty(FormulaId::RateFromGap);
        let eps = (2.0 * c.lipschitz * gap).sqrt() / (c.cos_theta * tf.sqrt());
        let gamma = (2.0 * gap / (c.lipschitz * tf)).sqrt();
        let kappa = (c.lipschitz * gap).sqrt() / (c.cos_theta * (2.0 * tf).sqrt());
        report.epsilon_star = Some(eps);
        report.gamma_star = Some(gamma);
        report.gamma_used = Some(gamma);
        report.kappa_star = Some(kappa);
        debug_assert!(
            (kappa + gamma * c.lipschitz / (2.0 * c.cos_theta) - eps).abs()
                <= 1e-12 * eps.max(1.0)
        );
        Ok(report)
    } else if let Some(k) = c.gap_upper {
        let mut report = BoundReport::empty(FormulaId::RateFromGapBound);
        let gamma = 2.0 * k / (c.lipschitz * tf);
        let eps = (2.0 * c.lipschitz * k).sqrt() / (c.cos_theta * tf.sqrt());
        report.gamma_star = Some(gamma);
        report.gamma_used = Some(gamma);
        report.epsilon_star = Some(eps);
        report.kappa_star = Some(eps - gamma * c.lipschitz / (2.0 * c.cos_theta));
        Ok(report)
    } else {
        Err(BoundsError::Missing("gap or gap_upper"))
    }
}

/// Strongly convex Type-2 plan: admissible
/// γ̄ = min{2·cosθ·√(με)/L, √(ε/L)}, iteration bound
/// T ≤ ⌈2·gap/(γ(2·cosθ·√(με) − Lγ))⌉ for a supplied γ ∈ (0, γ̄), plus the
/// objective-gap bound ε²/(2μ) at gradient level ε.
pub fn strongly_convex_plan(
    c: &ProblemConstants,
    gamma: Option<f64>,
) -> Result<BoundReport, BoundsError> {
    c.validate()?;
    let mu = c.strong_convexity.ok_or(BoundsError::Missing("strong_convexity"))?;
    let mut report = BoundReport::empty(FormulaId::StronglyConvex);
    let root_mu_eps = (mu * c.epsilon).sqrt();
    let gamma_bar =
        (2.0 * c.cos_theta * root_mu_eps / c.lipschitz).min((c.epsilon / c.lipschitz).sqrt());
    report.gamma_range = Some((0.0, gamma_bar));
    report.gap_bound = Some(c.epsilon * c.epsilon / (2.0 * mu));
    if let Some(g) = gamma {
        if !(g > 0.0 && g < gamma_bar) {
            return Err(BoundsError::GammaOutOfRange { gamma: g, max: gamma_bar });
        }
        report.gamma_used = Some(g);
        if let Some(gap) = c.effective_gap() {
            let denom = g * (2.0 * c.cos_theta * root_mu_eps - c.lipschitz * g);
            report.t_upper = Some((2.0 * gap / denom).ceil() as u64);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts(l: f64, cos_theta: f64, eps: f64) -> ProblemConstants {
        ProblemConstants::new(l, 1, cos_theta, eps)
    }

    #[test]
    fn margin_values() {
        let c = consts(1.0, 1.0, 1.0).with_grad_bound(1.0);
        let m = descent_margins(&c, 0.5).unwrap();
        assert!((m.delta - 0.375).abs() < 1e-15);
        assert!((m.delta_bar.unwrap() - 0.375).abs() < 1e-15);
        // boundary of the admissible range: zero margin
        let m = descent_margins(&c, 2.0).unwrap();
        assert!(m.delta.abs() < 1e-15);
        assert!(sign_descent_margin(&consts(1.0, 1.0, 1.0), 0.5).is_err());
    }

    #[test]
    fn type1_unconstrained_examples() {
        let c = consts(1.0, 1.0, 0.2).with_gap(2.0).with_grad0_norm(2.0);
        let r = type1_plan(&c, Some(0.2), Type1Variant::Unconstrained).unwrap();
        assert_eq!(r.t_upper, Some(100));
        assert_eq!(r.t_lower, Some(9));
        assert_eq!(r.gamma_star, Some(0.2));
        let r2 = type1_plan(&c, None, Type1Variant::Unconstrained).unwrap();
        assert_eq!(r2.t_upper, Some(100));
    }

    #[test]
    fn type1_orthant_example() {
        let c = consts(1.0, 1.0, 0.1).with_grad_bound(1.0).with_gap(1.0);
        let r = type1_plan(&c, None, Type1Variant::Orthant).unwrap();
        assert!((r.gamma_star.unwrap() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn inadmissible_gamma_is_an_error() {
        let c = consts(1.0, 1.0, 0.2).with_gap(2.0);
        let e = type1_plan(&c, Some(0.5), Type1Variant::Unconstrained).unwrap_err();
        assert!(matches!(e, BoundsError::GammaOutOfRange { .. }));
    }

    #[test]
    fn rate_plan_examples() {
        let c = consts(1.0, 1.0, 0.2).with_gap(2.0);
        let r = optimal_rate_plan(100, &c).unwrap();
        assert!((r.epsilon_star.unwrap() - 0.2).abs() < 1e-15);
        assert!((r.gamma_star.unwrap() - 0.2).abs() < 1e-15);
        assert!((r.kappa_star.unwrap() - 0.1).abs() < 1e-15);

        // K fallback
        let mut c2 = consts(1.0, 1.0, 0.2);
        c2.gap_upper = Some(2.0);
        let r2 = optimal_rate_plan(100, &c2).unwrap();
        assert!((r2.gamma_star.unwrap() - 0.04).abs() < 1e-15);
        assert!((r2.epsilon_star.unwrap() - 0.2).abs() < 1e-15);

        // halving cosθ doubles ε*, leaves γ* unchanged
        let c3 = consts(1.0, 0.5, 0.2).with_gap(2.0);
        let r3 = optimal_rate_plan(100, &c3).unwrap();
        assert!((r3.epsilon_star.unwrap() - 0.4).abs() < 1e-15);
        assert!((r3.gamma_star.unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn strongly_convex_examples() {
        let c = consts(1.0, 1.0, 0.01).with_strong_convexity(1.0).with_gap(2.0);
        let r = strongly_convex_plan(&c, Some(0.05)).unwrap();
        let (_, bar) = r.gamma_range.unwrap();
        assert!((bar - 0.1).abs() < 1e-15);
        assert_eq!(r.t_upper, Some(534));

        let c2 = consts(1.0, 1.0, 0.2).with_strong_convexity(2.0);
        let r2 = strongly_convex_plan(&c2, None).unwrap();
        assert!((r2.gap_bound.unwrap() - 0.01).abs() < 1e-15);

        assert!(strongly_convex_plan(&c, Some(0.2)).is_err());
        assert!(strongly_convex_plan(&consts(1.0, 1.0, 0.01), None).is_err());
    }

    #[test]
    fn t_upper_monotone_in_epsilon_and_cos() {
        let mut prev = u64::MAX;
        for eps in [0.05, 0.1, 0.2, 0.4] {
            let c = consts(2.0, 0.5, eps).with_gap(3.0);
            let t = type1_plan(&c, None, Type1Variant::Unconstrained).unwrap().t_upper.unwrap();
            assert!(t <= prev);
            prev = t;
        }
        let mut prev = u64::MAX;
        for cos in [0.2, 0.4, 0.8, 1.0] {
            let c = consts(2.0, cos, 0.1).with_gap(3.0);
            let t = type1_plan(&c, None, Type1Variant::Unconstrained).unwrap().t_upper.unwrap();
            assert!(t <= prev);
            prev = t;
        }
    }
}
