//! Properness test: does the set positively span R^N?
//!
//! A set D is a proper quantization exactly when no unit vector a satisfies
//! ⟨a, d⟩ ≤ 0 for every d ∈ D — equivalently, the origin lies in the
//! interior of conv(D). The decision here is a linear feasibility test,
//! independent of the minimax cover computation:
//!
//!   maximize δ  s.t.  Σ λ_i d_i = 0,  Σ λ_i = 1,  λ_i ≥ δ.
//!
//! D positively spans iff rank(D) = N and the optimum δ* is strictly
//! positive. Sets with |D| ≤ N are never proper; for those the separating
//! witness comes straight from the rank structure: a normal to span(D) when
//! the rank is deficient, and a = −D⁻¹𝟙 for a full-rank square set (each
//! ⟨d_i, a⟩ = −1).

use super::{CoverMethod, Direction, QuantizationError, QuantizationSet, SetKind};
use crate::linalg::{dot, normalize};
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Strictness margin on the LP optimum below which a set counts as improper.
const PROPER_TOL: f64 = 1e-9;

/// Outcome of the positive-spanning test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropernessCertificate {
    pub proper: bool,
    /// Unit direction with ⟨witness, d⟩ ≤ 0 for all d; present iff improper.
    pub witness: Option<Direction>,
    /// max_d ⟨witness, d⟩ for the returned witness.
    pub max_inner: Option<f64>,
    /// Barycentric slack δ* of the feasibility program, when it was solved.
    pub min_weight: Option<f64>,
    pub method: CoverMethod,
}

/// Tests whether the set positively spans R^N and certifies the answer.
///
/// Compact sign sets are proper by construction (they are θ-covers with
/// cos θ = 1/√N) and short-circuit.
pub fn is_proper_quantization(
    set: &QuantizationSet,
) -> Result<PropernessCertificate, QuantizationError> {
    if !set.is_enumerated() {
        debug_assert_eq!(set.kind(), SetKind::Sign);
        return Ok(PropernessCertificate {
            proper: true,
            witness: None,
            max_inner: None,
            min_weight: None,
            method: CoverMethod::LinearProgram,
        });
    }
    let dirs: Vec<&[f64]> = set.elements().iter().map(|d| d.coords()).collect();
    if dirs.is_empty() {
        return Err(QuantizationError::Empty);
    }
    let dims = set.dims();
    let m = dirs.len();

    // Rank first: a rank-deficient set has a free normal direction, which is
    // simultaneously the cheapest witness.
    let matrix = DMatrix::from_fn(m, dims, |r, c| dirs[r][c]);
    if let Some(normal) = null_direction(&matrix) {
        return Ok(improper(&dirs, normal));
    }
    // Full rank with m == N: rows are invertible, so a = -D^{-1}·1 separates
    if m <= dims {
        debug_assert_eq!(m, dims);
        let rhs = nalgebra::DVector::from_element(dims, -1.0);
        let a = matrix
            .clone()
            .lu()
            .solve(&rhs)
            .map(|v| v.iter().cloned().collect::<Vec<f64>>())
            .unwrap_or_else(|| vec![1.0; dims]);
        return Ok(improper(&dirs, a));
    }

    // Full rank, m > N: strict positive combination of zero decides.
    let delta = barycentric_slack(&dirs, dims);
    match delta {
        Some(d) if d > PROPER_TOL => Ok(PropernessCertificate {
            proper: true,
            witness: None,
            max_inner: None,
            min_weight: Some(d),
            method: CoverMethod::LinearProgram,
        }),
        other => {
            let witness = separating_direction(&dirs, dims)
                .expect("improper full-rank set must admit a separating direction");
            let mut cert = improper(&dirs, witness);
            cert.min_weight = other;
            Ok(cert)
        }
    }
}

fn improper(dirs: &[&[f64]], mut a: Vec<f64>) -> PropernessCertificate {
    normalize(&mut a);
    let max_inner = dirs
        .iter()
        .map(|d| dot(d, &a))
        .fold(f64::NEG_INFINITY, f64::max);
    PropernessCertificate {
        proper: false,
        witness: Some(Direction::normalized(a).expect("witness is nonzero")),
        max_inner: Some(max_inner),
        min_weight: None,
        method: CoverMethod::LinearProgram,
    }
}

/// A unit vector orthogonal to all rows of `matrix`, if the rows do not span.
fn null_direction(matrix: &DMatrix<f64>) -> Option<Vec<f64>> {
    let dims = matrix.ncols();
    let gram = matrix.transpose() * matrix;
    let eig = nalgebra::SymmetricEigen::new(gram);
    let emax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let tol = emax.max(1.0) * 1e-12;
    let col = (0..dims).find(|&i| eig.eigenvalues[i] <= tol)?;
    Some((0..dims).map(|r| eig.eigenvectors[(r, col)]).collect())
}

/// max δ s.t. Dᵀλ = 0, Σλ = 1, λ ≥ δ. None when the program is infeasible
/// (origin outside the affine hull), which also means improper.
fn barycentric_slack(dirs: &[&[f64]], dims: usize) -> Option<f64> {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let free = (f64::NEG_INFINITY, f64::INFINITY);
    let delta = lp.add_var(1.0, free);
    let lams: Vec<_> = dirs.iter().map(|_| lp.add_var(0.0, free)).collect();
    for c in 0..dims {
        let terms: Vec<_> = lams.iter().zip(dirs).map(|(&l, d)| (l, d[c])).collect();
        lp.add_constraint(&terms, ComparisonOp::Eq, 0.0);
    }
    let ones: Vec<_> = lams.iter().map(|&l| (l, 1.0)).collect();
    lp.add_constraint(&ones, ComparisonOp::Eq, 1.0);
    for &l in &lams {
        lp.add_constraint([(l, 1.0), (delta, -1.0)], ComparisonOp::Ge, 0.0);
    }
    lp.solve().ok().map(|s| s.objective())
}

/// Searches for a with ⟨a, d⟩ ≤ 0 for all d via margin LPs over the box
/// ‖a‖_∞ ≤ 1: first maximizing a uniform margin, then (for boundary cases
/// where the best margin is 0 and the free LP collapses to a = 0) with one
/// coordinate pinned to ±1.
fn separating_direction(dirs: &[&[f64]], dims: usize) -> Option<Vec<f64>> {
    let candidates = std::iter::once(None).chain((0..dims).flat_map(|j| {
        [Some((j, 1.0)), Some((j, -1.0))]
    }));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for pin in candidates {
        if let Some((margin, a)) = margin_lp(dirs, dims, pin) {
            let scale = a.iter().cloned().fold(0.0f64, |acc, x| acc.max(x.abs()));
            if scale <= 1e-12 {
                continue;
            }
            let worst = dirs.iter().map(|d| dot(d, &a)).fold(f64::NEG_INFINITY, f64::max);
            if worst <= 1e-9 && best.as_ref().is_none_or(|(m, _)| margin > *m) {
                best = Some((margin, a));
            }
        }
        if best.as_ref().is_some_and(|(m, _)| *m > 1e-9) {
            break;
        }
    }
    best.map(|(_, a)| a)
}

fn margin_lp(dirs: &[&[f64]], dims: usize, pin: Option<(usize, f64)>) -> Option<(f64, Vec<f64>)> {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let margin = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    let avars: Vec<_> = (0..dims)
        .map(|j| {
            let bounds = match pin {
                Some((pj, s)) if pj == j => (s, s),
                _ => (-1.0, 1.0),
            };
            lp.add_var(0.0, bounds)
        })
        .collect();
    for d in dirs {
        let mut terms: Vec<_> = avars.iter().zip(*d).map(|(&v, &c)| (v, c)).collect();
        terms.push((margin, 1.0));
        lp.add_constraint(&terms, ComparisonOp::Le, 0.0);
    }
    let sol = lp.solve().ok()?;
    Some((sol.objective(), avars.iter().map(|&v| sol[v]).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_set_is_proper() {
        let cert = is_proper_quantization(&QuantizationSet::minimal(5).unwrap()).unwrap();
        assert!(cert.proper);
        assert!(cert.min_weight.unwrap() > 0.0);
    }

    #[test]
    fn normal_basis_is_proper() {
        let cert = is_proper_quantization(&QuantizationSet::normal_basis(3).unwrap()).unwrap();
        assert!(cert.proper);
    }

    #[test]
    fn plain_basis_is_improper_with_diagonal_witness() {
        let dims = 4;
        let elements: Vec<Direction> = (0..dims)
            .map(|i| {
                let mut c = vec![0.0; dims];
                c[i] = 1.0;
                Direction::new(c).unwrap()
            })
            .collect();
        let set = QuantizationSet::custom(elements).unwrap();
        let cert = is_proper_quantization(&set).unwrap();
        assert!(!cert.proper);
        let w = cert.witness.unwrap();
        // a = -D^{-1} 1 normalized = -(1,1,1,1)/2
        for &c in w.coords() {
            assert!((c + 0.5).abs() < 1e-9, "witness {:?}", w.coords());
        }
        assert!(cert.max_inner.unwrap() <= 1e-9);
    }

    #[test]
    fn small_sets_never_proper() {
        // |D| <= N must always fail (size bound), whatever the geometry.
        let set = QuantizationSet::custom(vec![
            Direction::new(vec![1.0, 0.0]).unwrap(),
            Direction::new(vec![0.0, 1.0]).unwrap(),
        ])
        .unwrap();
        let cert = is_proper_quantization(&set).unwrap();
        assert!(!cert.proper);
        assert!(cert.max_inner.unwrap() <= 1e-9);
    }

    #[test]
    fn boundary_improper_set_gets_witness() {
        // {e1, -e1, e2}: only separators live on the e2 = -1 boundary.
        let set = QuantizationSet::custom(vec![
            Direction::new(vec![1.0, 0.0]).unwrap(),
            Direction::new(vec![-1.0, 0.0]).unwrap(),
            Direction::new(vec![0.0, 1.0]).unwrap(),
        ])
        .unwrap();
        let cert = is_proper_quantization(&set).unwrap();
        assert!(!cert.proper);
        let w = cert.witness.unwrap();
        assert!((w.coords()[1] + 1.0).abs() < 1e-9);
        assert!(cert.max_inner.unwrap() <= 1e-9);
    }

    #[test]
    fn compact_sign_short_circuits() {
        let cert =
            is_proper_quantization(&QuantizationSet::sign_compact(100).unwrap()).unwrap();
        assert!(cert.proper);
    }
}
