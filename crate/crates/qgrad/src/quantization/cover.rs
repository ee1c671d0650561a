//! Cover-angle analysis: `cos θ*(D) = min_{‖g‖=1} max_{d∈D} ⟨g, d⟩`.
//!
//! A set is a θ-cover for some θ < π/2 exactly when this minimax is
//! positive, which is also the properness criterion for the quantized
//! recursion. Built-in kinds report their closed forms; custom sets are
//! solved exactly in the plane (sorted angular gaps) and numerically in
//! higher dimensions (seeded multistart subgradient descent, a zooming
//! pattern-search refinement at the best witness, then an active-set solve
//! that snaps the witness onto the equal-inner-product subspace).

use super::{minimal_set_cos_theta, Direction, QuantizationError, QuantizationSet, SetKind};
use crate::linalg::{dot, norm, normalize};
use crate::rng;
use serde::{Deserialize, Serialize};

/// How a cover analysis was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoverMethod {
    /// Closed form for a built-in kind.
    Analytic,
    /// Sorted angular gaps in the plane (exact).
    Exact2D,
    /// Seeded multistart descent with grid refinement and active-set polish.
    GridMultistart,
    /// Linear feasibility test (properness certificates).
    LinearProgram,
}

/// Result of the minimax cover computation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverAnalysis {
    /// min over unit g of max over d of ⟨g, d⟩, in [-1, 1].
    pub cos_star: f64,
    /// arccos(cos_star), present exactly when cos_star > 0.
    pub theta_star: Option<f64>,
    /// A unit vector achieving (numerically) the minimax.
    pub witness: Direction,
    /// Whether the set is a proper quantization (cos_star > 0).
    pub proper: bool,
    pub method: CoverMethod,
}

impl CoverAnalysis {
    fn from_parts(cos_star: f64, witness: Direction, method: CoverMethod) -> Self {
        CoverAnalysis {
            cos_star,
            theta_star: (cos_star > 0.0).then(|| cos_star.clamp(-1.0, 1.0).acos()),
            proper: cos_star > 0.0,
            witness,
            method,
        }
    }
}

/// Computes the cover cosine of a set.
///
/// Built-in kinds take the analytic route; custom sets go through the exact
/// planar method (N = 2) or the seeded multistart solver (N ≥ 3, N = 1 is
/// evaluated directly). Accuracy of the numeric routes is 1e-6 on the
/// families with known formulas.
pub fn covering_cosine(set: &QuantizationSet) -> Result<CoverAnalysis, QuantizationError> {
    if set.is_enumerated() && set.elements().is_empty() {
        return Err(QuantizationError::Empty);
    }
    if let Some(cos) = set.analytic_cos_theta() {
        let witness = analytic_witness(set);
        if set.is_enumerated() {
            debug_assert!(
                (max_inner(set.elements(), witness.coords()).0 - cos).abs() < 1e-9,
                "analytic witness must attain the closed-form cover cosine"
            );
        }
        return Ok(CoverAnalysis::from_parts(cos, witness, CoverMethod::Analytic));
    }
    covering_cosine_numeric(set)
}

/// Forces the numeric route even for kinds with closed forms; used to
/// cross-check the analytic values. Compact sign sets cannot take it.
pub fn covering_cosine_numeric(set: &QuantizationSet) -> Result<CoverAnalysis, QuantizationError> {
    if !set.is_enumerated() {
        return Err(QuantizationError::CompactSet(set.dims()));
    }
    if set.elements().is_empty() {
        return Err(QuantizationError::Empty);
    }
    let dirs: Vec<&[f64]> = set.elements().iter().map(|d| d.coords()).collect();
    match set.dims() {
        1 => {
            let h_plus = dirs.iter().map(|d| d[0]).fold(f64::NEG_INFINITY, f64::max);
            let h_minus = dirs.iter().map(|d| -d[0]).fold(f64::NEG_INFINITY, f64::max);
            let (cos, w) = if h_plus <= h_minus { (h_plus, 1.0) } else { (h_minus, -1.0) };
            Ok(CoverAnalysis::from_parts(
                cos,
                Direction::new(vec![w]).unwrap(),
                CoverMethod::GridMultistart,
            ))
        }
        2 => Ok(exact_2d(&dirs)),
        _ => Ok(grid_multistart(&dirs, set.dims())),
    }
}

fn analytic_witness(set: &QuantizationSet) -> Direction {
    let n = set.dims();
    match set.kind() {
        // Deep hole of the sign set: any coordinate axis.
        SetKind::Sign => {
            let mut w = vec![0.0; n];
            w[0] = 1.0;
            Direction::new(w).unwrap()
        }
        // Deep hole of the minimal set: N-1 coordinates at cos θ*, the last
        // one negative on the unit sphere.
        SetKind::Minimal => {
            let c = minimal_set_cos_theta(n);
            let mut w = vec![c; n];
            w[n - 1] = -(1.0 - (n as f64 - 1.0) * c * c).sqrt();
            Direction::normalized(w).unwrap()
        }
        // Midpoint between two adjacent circle points.
        SetKind::Circular(count) => {
            let a = std::f64::consts::PI / count as f64;
            Direction::normalized(vec![a.cos(), a.sin()]).unwrap()
        }
        // Deep hole of the signed basis: the diagonal.
        SetKind::NormalBasis => {
            Direction::normalized(vec![1.0; n]).unwrap()
        }
        SetKind::Custom => unreachable!("custom sets have no analytic cover cosine"),
    }
}

/// Max inner product over the set and its argmax index.
fn max_inner(elements: &[Direction], g: &[f64]) -> (f64, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for (i, d) in elements.iter().enumerate() {
        let ip = dot(g, d.coords());
        if ip > best {
            best = ip;
            arg = i;
        }
    }
    (best, arg)
}

fn h_eval(dirs: &[&[f64]], g: &[f64]) -> (f64, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for (i, d) in dirs.iter().enumerate() {
        let ip = dot(g, d);
        if ip > best {
            best = ip;
            arg = i;
        }
    }
    (best, arg)
}

/// Exact planar minimax: the deepest hole sits at the midpoint of the
/// largest angular gap between consecutive directions, at half-gap angle.
fn exact_2d(dirs: &[&[f64]]) -> CoverAnalysis {
    let mut angles: Vec<f64> = dirs.iter().map(|d| d[1].atan2(d[0])).collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let two_pi = 2.0 * std::f64::consts::PI;
    let m = angles.len();
    let mut gap_best = f64::NEG_INFINITY;
    let mut mid_best = 0.0;
    for i in 0..m {
        let next = if i + 1 == m { angles[0] + two_pi } else { angles[i + 1] };
        let gap = next - angles[i];
        if gap > gap_best {
            gap_best = gap;
            mid_best = angles[i] + gap / 2.0;
        }
    }
    if m == 1 {
        gap_best = two_pi;
        mid_best = angles[0] + std::f64::consts::PI;
    }
    let witness = Direction::normalized(vec![mid_best.cos(), mid_best.sin()]).unwrap();
    let cos_star = (gap_best / 2.0).cos();
    debug_assert!((h_eval(dirs, witness.coords()).0 - cos_star).abs() < 1e-9);
    CoverAnalysis::from_parts(cos_star, witness, CoverMethod::Exact2D)
}

/// Internal seed for the multistart; fixed so analyses are deterministic.
const MULTISTART_SEED: u64 = 0x5EED_C0FE;
const MULTISTART_STARTS: usize = 64;

fn grid_multistart(dirs: &[&[f64]], dims: usize) -> CoverAnalysis {
    let mut starts: Vec<Vec<f64>> = Vec::new();
    let mut rng = rng::seeded(MULTISTART_SEED);
    for _ in 0..MULTISTART_STARTS {
        starts.push(rng::unit_vector(&mut rng, dims));
    }
    for i in 0..dims {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; dims];
            v[i] = s;
            starts.push(v);
        }
    }
    if dirs.len() <= 128 {
        for d in dirs {
            starts.push(d.iter().map(|x| -x).collect());
        }
    }

    let mut best_g: Vec<f64> = starts[0].clone();
    let mut best_h = f64::INFINITY;
    for start in &starts {
        let (h, g) = subgradient_descent(dirs, start.clone());
        if h < best_h {
            best_h = h;
            best_g = g;
        }
    }

    let (h, g) = pattern_refine(dirs, best_g, best_h);
    best_h = h;
    best_g = g;

    if let Some((h, g)) = active_set_polish(dirs, dims, &best_g, best_h) {
        best_h = h;
        best_g = g;
    }

    let witness = Direction::normalized(best_g).unwrap();
    CoverAnalysis::from_parts(best_h, witness, CoverMethod::GridMultistart)
}

/// Projected subgradient descent for g ↦ max_d ⟨d, g⟩ on the sphere. The
/// subgradient at g is the argmax direction; only its tangential component
/// moves g. Returns the best point seen along the path.
fn subgradient_descent(dirs: &[&[f64]], mut g: Vec<f64>) -> (f64, Vec<f64>) {
    let mut best = g.clone();
    let mut best_h = h_eval(dirs, &g).0;
    for k in 0..300 {
        let (h, arg) = h_eval(dirs, &g);
        if h < best_h {
            best_h = h;
            best.copy_from_slice(&g);
        }
        let d = dirs[arg];
        let radial = dot(d, &g);
        let step = 0.8 / (1.0 + k as f64).powf(0.75);
        for i in 0..g.len() {
            g[i] -= step * (d[i] - radial * g[i]);
        }
        if normalize(&mut g) <= 1e-12 {
            break;
        }
    }
    let h = h_eval(dirs, &g).0;
    if h < best_h {
        (h, g)
    } else {
        (best_h, best)
    }
}

/// Shrinking pattern search in the tangent space of the current witness.
fn pattern_refine(dirs: &[&[f64]], mut g: Vec<f64>, mut h: f64) -> (f64, Vec<f64>) {
    let dims = g.len();
    let mut radius = 0.1;
    for _ in 0..60 {
        let basis = tangent_basis(&g);
        let mut improved = false;
        let probe = |offsets: &[f64], g: &[f64], h_best: &mut f64, g_best: &mut Vec<f64>| {
            let mut cand = g.to_vec();
            for (b, &w) in basis.iter().zip(offsets) {
                for i in 0..dims {
                    cand[i] += w * b[i];
                }
            }
            if normalize(&mut cand) > 1e-12 {
                let hc = h_eval(dirs, &cand).0;
                if hc < *h_best {
                    *h_best = hc;
                    *g_best = cand;
                    return true;
                }
            }
            false
        };
        let mut g_next = g.clone();
        let mut h_next = h;
        for j in 0..basis.len() {
            for s in [radius, -radius] {
                let mut offs = vec![0.0; basis.len()];
                offs[j] = s;
                improved |= probe(&offs, &g, &mut h_next, &mut g_next);
            }
        }
        if basis.len() <= 8 {
            let corner = radius / (basis.len() as f64).sqrt();
            for mask in 0..(1usize << basis.len()) {
                let offs: Vec<f64> = (0..basis.len())
                    .map(|j| if (mask >> j) & 1 == 0 { corner } else { -corner })
                    .collect();
                improved |= probe(&offs, &g, &mut h_next, &mut g_next);
            }
        }
        if improved {
            g = g_next;
            h = h_next;
        } else {
            radius *= 0.55;
            if radius < 1e-9 {
                break;
            }
        }
    }
    (h, g)
}

/// Orthonormal basis of the tangent space g⊥ from the Householder reflector
/// mapping e_k → g, with k the largest-magnitude coordinate of g.
fn tangent_basis(g: &[f64]) -> Vec<Vec<f64>> {
    let dims = g.len();
    let k = g
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.abs().partial_cmp(&b.abs()).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut v = g.to_vec();
    v[k] += if g[k] >= 0.0 { 1.0 } else { -1.0 };
    let vn = norm(&v);
    if vn <= 1e-12 {
        // g is (numerically) ±e_k; the other axes are the tangent basis.
        return (0..dims)
            .filter(|&i| i != k)
            .map(|i| {
                let mut b = vec![0.0; dims];
                b[i] = 1.0;
                b
            })
            .collect();
    }
    for x in v.iter_mut() {
        *x /= vn;
    }
    // Columns i ≠ k of H = I − 2vvᵀ span g⊥ (H maps ±e_k to g up to sign).
    (0..dims)
        .filter(|&i| i != k)
        .map(|i| {
            let mut b = vec![0.0; dims];
            b[i] = 1.0;
            for j in 0..dims {
                b[j] -= 2.0 * v[j] * v[i];
            }
            b
        })
        .collect()
}

/// Snap the witness onto the subspace where all (numerically) active
/// directions share one inner product. A locally unique deep hole has an
/// active set whose pairwise differences span g⊥, so the null space is a
/// line; solving it removes the pattern-search localization error.
fn active_set_polish(
    dirs: &[&[f64]],
    dims: usize,
    g: &[f64],
    h: f64,
) -> Option<(f64, Vec<f64>)> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for delta in [3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5] {
        let active: Vec<usize> = (0..dirs.len())
            .filter(|&i| dot(dirs[i], g) >= h - delta)
            .collect();
        if active.len() < 2 {
            continue;
        }
        let base = dirs[active[0]];
        let rows = active.len() - 1;
        let mut m = nalgebra::DMatrix::<f64>::zeros(rows, dims);
        for (r, &i) in active[1..].iter().enumerate() {
            for c in 0..dims {
                m[(r, c)] = dirs[i][c] - base[c];
            }
        }
        // Null space of M from the spectrum of MᵀM; a locally unique deep
        // hole leaves exactly one (near-)zero eigenvalue.
        let gram = m.transpose() * &m;
        let eig = nalgebra::SymmetricEigen::new(gram);
        let emax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let tol = emax.max(1.0) * 1e-10;
        let null_idx: Vec<usize> = (0..dims)
            .filter(|&i| eig.eigenvalues[i] <= tol)
            .collect();
        if null_idx.len() != 1 {
            continue;
        }
        let col = null_idx[0];
        let mut cand: Vec<f64> = (0..dims).map(|r| eig.eigenvectors[(r, col)]).collect();
        if dot(&cand, g) < 0.0 {
            for x in cand.iter_mut() {
                *x = -*x;
            }
        }
        if normalize(&mut cand) <= 1e-12 {
            continue;
        }
        let hc = h_eval(dirs, &cand).0;
        if hc <= h + 1e-12 && best.as_ref().is_none_or(|(hb, _)| hc < *hb) {
            best = Some((hc, cand));
        }
    }
    best
}
