//! Finite direction sets `D ⊆ S^{N-1}` used to quantize gradient directions.
//!
//! Four built-in families are provided, each with a closed-form cover cosine:
//!
//! | kind          | size   | cos θ*                       |
//! |---------------|--------|------------------------------|
//! | `Sign`        | 2^N    | 1/√N                         |
//! | `Minimal`     | N+1    | 1/√(N² + 2√N(N−1))           |
//! | `Circular(n)` | n      | cos(π/n)  (N = 2, n ≥ 3)     |
//! | `NormalBasis` | 2N     | 1/√N                         |
//!
//! The minimal set `{e_1, …, e_N, −𝟙/√N}` is the smallest set that can steer
//! the quantized recursion to the optimizer set of every admissible
//! objective; no set of size ≤ N can (see [`is_proper_quantization`]).

mod cover;
mod proper;

pub use cover::{covering_cosine, covering_cosine_numeric, CoverAnalysis, CoverMethod};
pub use proper::{is_proper_quantization, PropernessCertificate};

use crate::linalg::{dot, norm};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sign sets are materialized only up to this dimension (|D| = 2^N).
/// Beyond it, construct with [`QuantizationSet::sign_compact`]: quantization
/// runs through the O(N) componentwise path and the cover cosine is the
/// closed form 1/√N.
pub const SIGN_ENUMERATION_CAP: usize = 16;

/// Two directions closer than this (max coordinate difference) count as
/// duplicates at construction time.
const DUPLICATE_TOL: f64 = 1e-12;

/// Gradients with norm at or below this hold the iterate in place.
pub const ZERO_GRADIENT_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum QuantizationError {
    #[error("direction has norm {norm} but must be unit within 1e-12")]
    NotUnit { norm: f64 },
    #[error("dimension must be at least 1")]
    ZeroDims,
    #[error("sign set in dimension {dims} exceeds the enumeration cap {cap} (|D| = 2^{dims}); use sign_compact")]
    SignCapExceeded { dims: usize, cap: usize },
    #[error("circular sets require n >= 3, got {0}")]
    CircularTooSmall(usize),
    #[error("set contains duplicate directions (elements {0} and {1})")]
    Duplicate(usize, usize),
    #[error("set must contain at least one direction")]
    Empty,
    #[error("bits per iteration is undefined for singleton sets")]
    Singleton,
    #[error("expected vectors of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operation requires enumerated elements; this sign set is compact (N = {0})")]
    CompactSet(usize),
    #[error("set file: {0}")]
    Parse(String),
    #[error("row {row} has norm {norm}; rows must be unit within 1e-6")]
    RowNotUnit { row: usize, norm: f64 },
}

/// A unit vector in R^N. Norm is checked to 1e-12 at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Direction(Vec<f64>);

impl Direction {
    pub fn new(coords: Vec<f64>) -> Result<Self, QuantizationError> {
        let n = norm(&coords);
        if (n - 1.0).abs() > 1e-12 {
            return Err(QuantizationError::NotUnit { norm: n });
        }
        Ok(Direction(coords))
    }

    /// Normalizes `coords` and wraps it. Fails on (near-)zero vectors.
    pub fn normalized(mut coords: Vec<f64>) -> Result<Self, QuantizationError> {
        let n = crate::linalg::normalize(&mut coords);
        if n <= 1e-12 {
            return Err(QuantizationError::NotUnit { norm: n });
        }
        Ok(Direction(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }
}

/// Which family a set belongs to. `Custom` covers file-loaded and ad-hoc sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SetKind {
    Sign,
    Minimal,
    Circular(usize),
    NormalBasis,
    Custom,
}

/// A finite set of quantized gradient directions.
///
/// Elements are stored in a fixed order; ties in [`QuantizationSet::quantize`]
/// break toward the lowest index so runs are reproducible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantizationSet {
    dims: usize,
    kind: SetKind,
    /// Empty only for compact sign sets (dims beyond the enumeration cap).
    elements: Vec<Direction>,
    enumerated: bool,
    analytic_cos_theta: Option<f64>,
}

/// Closed-form cover cosine of the minimal (N+1)-element set.
pub fn minimal_set_cos_theta(dims: usize) -> f64 {
    let n = dims as f64;
    1.0 / (n * n + 2.0 * n.sqrt() * (n - 1.0)).sqrt()
}

impl QuantizationSet {
    /// The 2^N sign set: every coordinate of every element is ±1/√N.
    ///
    /// Element `k` carries sign +1 in coordinate `i` when bit `i` of `k` is
    /// clear, so the all-plus element has index 0 and argmax tie-breaking by
    /// lowest index agrees with the componentwise sign(0) = +1 convention.
    pub fn sign(dims: usize) -> Result<Self, QuantizationError> {
        if dims == 0 {
            return Err(QuantizationError::ZeroDims);
        }
        if dims > SIGN_ENUMERATION_CAP {
            return Err(QuantizationError::SignCapExceeded {
                dims,
                cap: SIGN_ENUMERATION_CAP,
            });
        }
        let scale = 1.0 / (dims as f64).sqrt();
        let mut elements = Vec::with_capacity(1usize << dims);
        for k in 0..(1usize << dims) {
            let coords = (0..dims)
                .map(|i| if (k >> i) & 1 == 0 { scale } else { -scale })
                .collect();
            elements.push(Direction(coords));
        }
        Ok(QuantizationSet {
            dims,
            kind: SetKind::Sign,
            elements,
            enumerated: true,
            analytic_cos_theta: Some(scale),
        })
    }

    /// Sign set without materialized elements, for large N. Quantization uses
    /// the componentwise path; the cover cosine is the closed form 1/√N.
    pub fn sign_compact(dims: usize) -> Result<Self, QuantizationError> {
        if dims == 0 {
            return Err(QuantizationError::ZeroDims);
        }
        Ok(QuantizationSet {
            dims,
            kind: SetKind::Sign,
            elements: Vec::new(),
            enumerated: false,
            analytic_cos_theta: Some(1.0 / (dims as f64).sqrt()),
        })
    }

    /// The minimal proper set `{e_1, …, e_N, −𝟙/√N}` of size N+1.
    pub fn minimal(dims: usize) -> Result<Self, QuantizationError> {
        if dims == 0 {
            return Err(QuantizationError::ZeroDims);
        }
        let mut elements = Vec::with_capacity(dims + 1);
        for i in 0..dims {
            let mut coords = vec![0.0; dims];
            coords[i] = 1.0;
            elements.push(Direction(coords));
        }
        let scale = -1.0 / (dims as f64).sqrt();
        elements.push(Direction(vec![scale; dims]));
        let set = QuantizationSet {
            dims,
            kind: SetKind::Minimal,
            elements,
            enumerated: true,
            analytic_cos_theta: Some(minimal_set_cos_theta(dims)),
        };
        set.check_duplicates()?;
        Ok(set)
    }

    /// The n evenly spaced directions (cos 2πk/n, sin 2πk/n) in the plane.
    pub fn circular(n: usize) -> Result<Self, QuantizationError> {
        if n < 3 {
            return Err(QuantizationError::CircularTooSmall(n));
        }
        let elements = (0..n)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Direction(vec![a.cos(), a.sin()])
            })
            .collect();
        Ok(QuantizationSet {
            dims: 2,
            kind: SetKind::Circular(n),
            elements,
            enumerated: true,
            analytic_cos_theta: Some((std::f64::consts::PI / n as f64).cos()),
        })
    }

    /// The signed basis `{±e_1, …, ±e_N}` of size 2N.
    pub fn normal_basis(dims: usize) -> Result<Self, QuantizationError> {
        if dims == 0 {
            return Err(QuantizationError::ZeroDims);
        }
        let mut elements = Vec::with_capacity(2 * dims);
        for i in 0..dims {
            for sign in [1.0, -1.0] {
                let mut coords = vec![0.0; dims];
                coords[i] = sign;
                elements.push(Direction(coords));
            }
        }
        Ok(QuantizationSet {
            dims,
            kind: SetKind::NormalBasis,
            elements,
            enumerated: true,
            analytic_cos_theta: Some(1.0 / (dims as f64).sqrt()),
        })
    }

    /// An arbitrary set of unit directions. Duplicates are rejected.
    pub fn custom(elements: Vec<Direction>) -> Result<Self, QuantizationError> {
        let dims = match elements.first() {
            Some(d) => d.dims(),
            None => return Err(QuantizationError::Empty),
        };
        for d in &elements {
            if d.dims() != dims {
                return Err(QuantizationError::DimensionMismatch {
                    expected: dims,
                    got: d.dims(),
                });
            }
        }
        let set = QuantizationSet {
            dims,
            kind: SetKind::Custom,
            elements,
            enumerated: true,
            analytic_cos_theta: None,
        };
        set.check_duplicates()?;
        Ok(set)
    }

    /// Parses the plain-text set format: first line N, then one direction per
    /// line as whitespace-separated decimals. Rows whose norm deviates from 1
    /// by at most 1e-6 are normalized; anything further off is rejected.
    pub fn parse_custom(text: &str) -> Result<Self, QuantizationError> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let dims: usize = lines
            .next()
            .ok_or_else(|| QuantizationError::Parse("empty file".into()))?
            .parse()
            .map_err(|e| QuantizationError::Parse(format!("first line must be N: {e}")))?;
        if dims == 0 {
            return Err(QuantizationError::ZeroDims);
        }
        let mut elements = Vec::new();
        for (row, line) in lines.enumerate() {
            let coords: Vec<f64> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>()
                        .map_err(|e| QuantizationError::Parse(format!("row {}: {e}", row + 1)))
                })
                .collect::<Result<_, _>>()?;
            if coords.len() != dims {
                return Err(QuantizationError::DimensionMismatch {
                    expected: dims,
                    got: coords.len(),
                });
            }
            let n = norm(&coords);
            if (n - 1.0).abs() > 1e-6 {
                return Err(QuantizationError::RowNotUnit { row: row + 1, norm: n });
            }
            elements.push(Direction::normalized(coords)?);
        }
        Self::custom(elements)
    }

    /// Loads a custom set from a file in the [`parse_custom`] format.
    ///
    /// [`parse_custom`]: QuantizationSet::parse_custom
    pub fn from_file(path: &std::path::Path) -> Result<Self, QuantizationError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| QuantizationError::Parse(format!("{}: {e}", path.display())))?;
        Self::parse_custom(&text)
    }

    fn check_duplicates(&self) -> Result<(), QuantizationError> {
        for i in 0..self.elements.len() {
            for j in (i + 1)..self.elements.len() {
                let close = self.elements[i]
                    .coords()
                    .iter()
                    .zip(self.elements[j].coords())
                    .all(|(a, b)| (a - b).abs() <= DUPLICATE_TOL);
                if close {
                    return Err(QuantizationError::Duplicate(i, j));
                }
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn kind(&self) -> SetKind {
        self.kind
    }

    /// Enumerated elements; empty for compact sign sets.
    pub fn elements(&self) -> &[Direction] {
        &self.elements
    }

    pub fn is_enumerated(&self) -> bool {
        self.enumerated
    }

    pub fn analytic_cos_theta(&self) -> Option<f64> {
        self.analytic_cos_theta
    }

    /// |D|, computed without enumeration for compact sign sets.
    pub fn cardinality(&self) -> u128 {
        match (self.kind, self.enumerated) {
            (SetKind::Sign, false) => 1u128 << self.dims,
            _ => self.elements.len() as u128,
        }
    }

    /// ⌈log2 |D|⌉ — the bits needed to code one direction per iteration.
    pub fn bits_per_iteration(&self) -> Result<u32, QuantizationError> {
        let card = self.cardinality();
        if card < 2 {
            return Err(QuantizationError::Singleton);
        }
        Ok(128 - (card - 1).leading_zeros())
    }

    /// Maps a gradient to the set element with the largest inner product
    /// against `g/‖g‖`. Returns `None` (hold the iterate) when ‖g‖ is at or
    /// below [`ZERO_GRADIENT_TOL`]. Ties break toward the lowest element
    /// index; for sign sets the winner is computed componentwise in O(N) with
    /// sign(0) mapped to +1.
    pub fn quantize(&self, g: &[f64]) -> Result<Option<Vec<f64>>, QuantizationError> {
        let mut out = vec![0.0; self.dims];
        Ok(if self.quantize_into(g, &mut out)? {
            Some(out)
        } else {
            None
        })
    }

    /// Allocation-free form of [`quantize`]; returns false on hold.
    ///
    /// [`quantize`]: QuantizationSet::quantize
    pub fn quantize_into(&self, g: &[f64], out: &mut [f64]) -> Result<bool, QuantizationError> {
        if g.len() != self.dims || out.len() != self.dims {
            return Err(QuantizationError::DimensionMismatch {
                expected: self.dims,
                got: if g.len() != self.dims { g.len() } else { out.len() },
            });
        }
        if norm(g) <= ZERO_GRADIENT_TOL {
            return Ok(false);
        }
        if self.kind == SetKind::Sign {
            let scale = 1.0 / (self.dims as f64).sqrt();
            for (o, &gi) in out.iter_mut().zip(g) {
                *o = if gi < 0.0 { -scale } else { scale };
            }
            return Ok(true);
        }
        let mut best = 0;
        let mut best_ip = f64::NEG_INFINITY;
        for (i, d) in self.elements.iter().enumerate() {
            let ip = dot(g, d.coords());
            if ip > best_ip {
                best_ip = ip;
                best = i;
            }
        }
        out.copy_from_slice(self.elements[best].coords());
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn sign_set_shape() {
        let d = QuantizationSet::sign(3).unwrap();
        assert_eq!(d.cardinality(), 8);
        let s = 1.0 / 3f64.sqrt();
        for e in d.elements() {
            for &c in e.coords() {
                assert!((c.abs() - s).abs() < 1e-15);
            }
        }
        assert!((d.analytic_cos_theta().unwrap() - s).abs() < 1e-15);
        assert!(QuantizationSet::sign(17).is_err());
        assert_eq!(QuantizationSet::sign_compact(100).unwrap().cardinality(), 1u128 << 100);
    }

    #[test]
    fn minimal_set_shape() {
        let d = QuantizationSet::minimal(2).unwrap();
        assert_eq!(d.cardinality(), 3);
        assert_eq!(d.elements()[0].coords(), &[1.0, 0.0]);
        assert_eq!(d.elements()[1].coords(), &[0.0, 1.0]);
        let m = -FRAC_1_SQRT_2;
        assert!(d.elements()[2].coords().iter().all(|&c| (c - m).abs() < 1e-15));
        // Example-2 closed form: 1/sqrt(4 + 2*sqrt(2))
        let expect = 1.0 / (4.0 + 2.0 * 2f64.sqrt()).sqrt();
        assert!((d.analytic_cos_theta().unwrap() - expect).abs() < 1e-15);
        assert!((expect - 0.382683).abs() < 1e-6);
    }

    #[test]
    fn circular_set_shape() {
        let d = QuantizationSet::circular(4).unwrap();
        let got: Vec<Vec<f64>> = d.elements().iter().map(|e| e.coords().to_vec()).collect();
        let want = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (g, w) in got.iter().zip(want) {
            for (a, b) in g.iter().zip(w) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert!((d.analytic_cos_theta().unwrap() - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(QuantizationSet::circular(2).is_err());
    }

    #[test]
    fn normal_basis_shape() {
        let d = QuantizationSet::normal_basis(3).unwrap();
        assert_eq!(d.cardinality(), 6);
        assert!((d.analytic_cos_theta().unwrap() - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn quantize_sign_componentwise() {
        let d = QuantizationSet::sign(2).unwrap();
        let q = d.quantize(&[0.6, -0.8]).unwrap().unwrap();
        assert!((q[0] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((q[1] + FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn quantize_circular_nearest_and_tie() {
        let d = QuantizationSet::circular(4).unwrap();
        assert_eq!(d.quantize(&[1.0, 0.1]).unwrap().unwrap(), vec![1.0, 0.0]);
        // symmetric tie between k=0 and k=1 goes to the lowest index
        assert_eq!(d.quantize(&[1.0, 1.0]).unwrap().unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn quantize_zero_gradient_holds() {
        let d = QuantizationSet::sign(2).unwrap();
        assert!(d.quantize(&[0.0, 0.0]).unwrap().is_none());
        assert!(d.quantize(&[0.0, 1e-13]).unwrap().is_none());
    }

    #[test]
    fn sign_zero_coordinate_maps_to_plus() {
        let d = QuantizationSet::sign(2).unwrap();
        let q = d.quantize(&[0.0, -1.0]).unwrap().unwrap();
        assert!(q[0] > 0.0 && q[1] < 0.0);
    }

    #[test]
    fn bits_per_iteration_values() {
        assert_eq!(QuantizationSet::sign_compact(100).unwrap().bits_per_iteration().unwrap(), 100);
        assert_eq!(QuantizationSet::minimal(3).unwrap().bits_per_iteration().unwrap(), 2);
        assert_eq!(QuantizationSet::circular(8).unwrap().bits_per_iteration().unwrap(), 3);
        assert_eq!(QuantizationSet::circular(16).unwrap().bits_per_iteration().unwrap(), 4);
        let singleton = QuantizationSet {
            dims: 1,
            kind: SetKind::Custom,
            elements: vec![Direction(vec![1.0])],
            enumerated: true,
            analytic_cos_theta: None,
        };
        assert!(singleton.bits_per_iteration().is_err());
    }

    #[test]
    fn duplicates_rejected() {
        let e = Direction::new(vec![1.0, 0.0]).unwrap();
        let err = QuantizationSet::custom(vec![e.clone(), e]).unwrap_err();
        assert!(matches!(err, QuantizationError::Duplicate(0, 1)));
    }

    #[test]
    fn parse_custom_normalizes_and_rejects() {
        let ok = "2\n1 0\n0.9999999 0.0000001\n";
        let set = QuantizationSet::parse_custom(ok).unwrap();
        assert_eq!(set.cardinality(), 2);
        assert!((norm(set.elements()[1].coords()) - 1.0).abs() < 1e-15);

        let bad = "2\n0.9 0\n";
        assert!(matches!(
            QuantizationSet::parse_custom(bad).unwrap_err(),
            QuantizationError::RowNotUnit { .. }
        ));
    }

    #[test]
    fn quantize_dimension_mismatch() {
        let d = QuantizationSet::sign(2).unwrap();
        assert!(d.quantize(&[1.0]).is_err());
    }
}
