//! TCP flow control dual.
//!
//! Primal: maximize Σ_s U_s(q_s) over rates q_s ∈ [m_s, M_s] subject to the
//! per-link capacity Σ_{s∈S_l} q_s ≤ c_l, with U_s(q) = u_s·log(1+q). The
//! dual variable x prices the links; each source solves its own subproblem
//! in closed form and the dual gradient is the capacity slack c − A·q(x),
//! measurable per link as "capacity minus traffic".

use super::ObjectiveOracle;
use crate::linalg::norm;
use crate::optimizer::Domain;
use crate::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Routing/instance data. `routing` is the N×S link-source incidence stored
/// row-major: entry (l, s) is 1 when source s crosses link l.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TcpNetwork {
    pub sources: usize,
    pub links: usize,
    pub routing: Vec<u8>,
    pub capacities: Vec<f64>,
    pub utility_scale: Vec<f64>,
    pub rate_min: Vec<f64>,
    pub rate_max: Vec<f64>,
    /// Generator seed, recorded so instances replay byte-for-byte.
    pub seed: Option<u64>,
}

#[derive(Debug, Error)]
pub enum TcpError {
    #[error("network needs at least one source and one link")]
    Degenerate,
    #[error("routing matrix must be {links}x{sources} = {expected} entries, got {got}")]
    RoutingShape { links: usize, sources: usize, expected: usize, got: usize },
    #[error("per-link capacities must be positive")]
    NonPositiveCapacity,
    #[error("rate bounds need 0 <= min < max per source")]
    BadRateBounds,
    #[error("link {0} serves no source (drop it or resample)")]
    EmptyLink(usize),
    #[error("source {0} uses no link")]
    EmptySource(usize),
    #[error("density must lie in (0, 1]")]
    BadDensity,
}

impl TcpNetwork {
    pub fn validate(&self) -> Result<(), TcpError> {
        if self.sources == 0 || self.links == 0 {
            return Err(TcpError::Degenerate);
        }
        let expected = self.sources * self.links;
        if self.routing.len() != expected {
            return Err(TcpError::RoutingShape {
                links: self.links,
                sources: self.sources,
                expected,
                got: self.routing.len(),
            });
        }
        if self.capacities.len() != self.links || self.capacities.iter().any(|&c| c <= 0.0) {
            return Err(TcpError::NonPositiveCapacity);
        }
        let per_source = [&self.utility_scale, &self.rate_min, &self.rate_max];
        if per_source.iter().any(|v| v.len() != self.sources) {
            return Err(TcpError::BadRateBounds);
        }
        for s in 0..self.sources {
            if !(self.rate_min[s] >= 0.0 && self.rate_min[s] < self.rate_max[s]) {
                return Err(TcpError::BadRateBounds);
            }
        }
        for l in 0..self.links {
            if (0..self.sources).all(|s| self.routing[l * self.sources + s] == 0) {
                return Err(TcpError::EmptyLink(l));
            }
        }
        for s in 0..self.sources {
            if (0..self.links).all(|l| self.routing[l * self.sources + s] == 0) {
                return Err(TcpError::EmptySource(s));
            }
        }
        Ok(())
    }

    fn uses(&self, link: usize, source: usize) -> bool {
        self.routing[link * self.sources + source] != 0
    }

    /// Max number of sources sharing one link.
    pub fn max_link_degree(&self) -> usize {
        (0..self.links)
            .map(|l| (0..self.sources).filter(|&s| self.uses(l, s)).count())
            .max()
            .unwrap_or(0)
    }

    /// Max number of links on one source's path.
    pub fn max_path_length(&self) -> usize {
        (0..self.sources)
            .map(|s| (0..self.links).filter(|&l| self.uses(l, s)).count())
            .max()
            .unwrap_or(0)
    }

    pub fn ones_count(&self) -> usize {
        self.routing.iter().filter(|&&e| e != 0).count()
    }
}

/// Draws a random network: each routing entry is 1 with probability
/// `density`; empty rows and columns are resampled until none remain, so the
/// instance always validates. Deterministic in `seed`.
pub fn generate_tcp(
    seed: u64,
    sources: usize,
    links: usize,
    density: f64,
    u_scale: f64,
    c_value: f64,
    bounds: (f64, f64),
) -> Result<TcpNetwork, TcpError> {
    if sources == 0 || links == 0 {
        return Err(TcpError::Degenerate);
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(TcpError::BadDensity);
    }
    if c_value <= 0.0 {
        return Err(TcpError::NonPositiveCapacity);
    }
    if !(bounds.0 >= 0.0 && bounds.0 < bounds.1) {
        return Err(TcpError::BadRateBounds);
    }
    let mut rng = rng::substream(seed, 0x7C9);
    let mut routing = vec![0u8; sources * links];
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| u8::from(rng.random::<f64>() < density);
    for e in routing.iter_mut() {
        *e = draw(&mut rng);
    }
    // Resample empty rows, then empty columns, until both are clean. Column
    // resampling can empty a row again, hence the loop.
    loop {
        let mut dirty = false;
        for l in 0..links {
            while (0..sources).all(|s| routing[l * sources + s] == 0) {
                dirty = true;
                for s in 0..sources {
                    routing[l * sources + s] = draw(&mut rng);
                }
            }
        }
        for s in 0..sources {
            while (0..links).all(|l| routing[l * sources + s] == 0) {
                dirty = true;
                for l in 0..links {
                    routing[l * sources + s] = draw(&mut rng);
                }
            }
        }
        if !dirty {
            break;
        }
    }
    let net = TcpNetwork {
        sources,
        links,
        routing,
        capacities: vec![c_value; links],
        utility_scale: vec![u_scale; sources],
        rate_min: vec![bounds.0; sources],
        rate_max: vec![bounds.1; sources],
        seed: Some(seed),
    };
    net.validate()?;
    Ok(net)
}

/// Dual oracle of the TCP problem, on the nonnegative orthant.
///
/// Evaluation points are link-price vectors and must stay in the orthant:
/// entries below -1e-9 panic (the projected iteration never produces them),
/// anything between -1e-9 and 0 is treated as 0.
#[derive(Debug, Clone)]
pub struct TcpDualOracle {
    net: TcpNetwork,
    grad_bound: f64,
    lipschitz_literal: f64,
}

/// Path prices below this are treated as zero: the source transmits at max.
const PRICE_TOL: f64 = 1e-12;
/// Negative link prices beyond this violate the orthant precondition.
const ORTHANT_TOL: f64 = 1e-9;

impl TcpDualOracle {
    pub fn new(net: TcpNetwork) -> Result<Self, TcpError> {
        net.validate()?;
        // B = ‖c‖ + ‖A·M‖ from the compact rate region.
        let a_max: Vec<f64> = (0..net.links)
            .map(|l| {
                (0..net.sources)
                    .filter(|&s| net.uses(l, s))
                    .map(|s| net.rate_max[s])
                    .sum()
            })
            .collect();
        let grad_bound = norm(&net.capacities) + norm(&a_max);
        // Reported constant μ·N̄·L̄ with μ the strong-concavity modulus of the
        // utilities on their rate interval (min |U''| = u/(1+M)²). This is
        // loose — see `empirical_lipschitz` for a data-driven estimate.
        let mu = (0..net.sources)
            .map(|s| net.utility_scale[s] / (1.0 + net.rate_max[s]).powi(2))
            .fold(f64::INFINITY, f64::min);
        let lipschitz_literal =
            mu * net.max_link_degree() as f64 * net.max_path_length() as f64;
        Ok(TcpDualOracle { net, grad_bound, lipschitz_literal })
    }

    pub fn network(&self) -> &TcpNetwork {
        &self.net
    }

    fn path_price(&self, x: &[f64], source: usize) -> f64 {
        (0..self.net.links)
            .filter(|&l| self.net.uses(l, source))
            .map(|l| x[l].max(0.0))
            .sum()
    }

    fn checked<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        assert_eq!(x.len(), self.net.links, "price vector has wrong dimension");
        assert!(
            x.iter().all(|&v| v >= -ORTHANT_TOL),
            "link prices must lie in the nonnegative orthant"
        );
        x
    }

    /// Closed-form source subproblem: q = clamp(u/λ − 1, m, M), with λ ≤ 0
    /// mapping to M (price-free sources transmit at max).
    pub fn rates(&self, x: &[f64]) -> Vec<f64> {
        let x = self.checked(x);
        (0..self.net.sources)
            .map(|s| {
                let lambda = self.path_price(x, s);
                if lambda <= PRICE_TOL {
                    self.net.rate_max[s]
                } else {
                    (self.net.utility_scale[s] / lambda - 1.0)
                        .clamp(self.net.rate_min[s], self.net.rate_max[s])
                }
            })
            .collect()
    }

    fn traffic(&self, rates: &[f64]) -> Vec<f64> {
        (0..self.net.links)
            .map(|l| {
                (0..self.net.sources)
                    .filter(|&s| self.net.uses(l, s))
                    .map(|s| rates[s])
                    .sum()
            })
            .collect()
    }

    /// Max sampled gradient difference quotient × 1.1 over pairs drawn from
    /// the relevant price box (a data-driven stand-in for the loose reported
    /// constant).
    pub fn empirical_lipschitz(&self, seed: u64, pairs: usize) -> f64 {
        let hi = self
            .net
            .utility_scale
            .iter()
            .cloned()
            .fold(0.0f64, f64::max);
        let mut rng = rng::substream(seed, 0x11b);
        let mut worst: f64 = 0.0;
        for _ in 0..pairs {
            let a: Vec<f64> = (0..self.net.links).map(|_| rng.random::<f64>() * hi).collect();
            let b: Vec<f64> = (0..self.net.links).map(|_| rng.random::<f64>() * hi).collect();
            let d = crate::linalg::dist(&a, &b);
            if d > 1e-9 {
                let q = crate::linalg::dist(&self.grad(&a), &self.grad(&b)) / d;
                worst = worst.max(q);
            }
        }
        worst * 1.1
    }
}

impl ObjectiveOracle for TcpDualOracle {
    fn dims(&self) -> usize {
        self.net.links
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let x = self.checked(x);
        let q = self.rates(x);
        let utility: f64 = (0..self.net.sources)
            .map(|s| self.net.utility_scale[s] * (1.0 + q[s]).ln())
            .sum();
        let traffic = self.traffic(&q);
        let priced: f64 = (0..self.net.links)
            .map(|l| x[l] * (traffic[l] - self.net.capacities[l]))
            .sum();
        utility - priced
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let x = self.checked(x);
        let q = self.rates(x);
        let traffic = self.traffic(&q);
        (0..self.net.links)
            .map(|l| self.net.capacities[l] - traffic[l])
            .collect()
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz_literal
    }

    fn grad_bound(&self) -> Option<f64> {
        Some(self.grad_bound)
    }

    fn domain(&self) -> Domain {
        Domain::NonnegativeOrthant
    }

    fn branch_signature(&self, x: &[f64]) -> Option<u64> {
        let x = self.checked(x);
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for s in 0..self.net.sources {
            let lambda = self.path_price(x, s);
            let state: u64 = if lambda <= PRICE_TOL {
                3
            } else {
                let raw = self.net.utility_scale[s] / lambda - 1.0;
                if raw <= self.net.rate_min[s] {
                    0
                } else if raw >= self.net.rate_max[s] {
                    2
                } else {
                    1
                }
            };
            h = (h ^ state).wrapping_mul(0x1000_0000_01b3);
        }
        Some(h)
    }
}
