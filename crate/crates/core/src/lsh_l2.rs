//! L2 hashing of square-root embedded distributions.
//!
//! `h(P) = ceil((a . sqrt(P) + b) / r)` with `a ~ N(0, I)` and `b ~ U[0, r)`.
//! Because `|sqrt(P) - sqrt(Q)|^2 = 2 H^2(P, Q)`, this is an LSH family for
//! the squared Hellinger distance and, through the ratio bounds in
//! [`crate::bounds`], for GJS and triangular discrimination.

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;

use crate::band::{Band, ProjectionHash};
use crate::bounds::{lower_l, upper_u, Sensitivity};
use crate::error::{Error, Result};
use crate::numeric::dot;
use crate::prob::SqrtVec;
use crate::rng::{stream_rng, Stream};

/// Default bucket width on square-root embedded data (pairwise distances lie in `[0, sqrt 2]`).
pub const DEFAULT_BUCKET_WIDTH: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct L2Hash {
    a: Vec<f64>,
    b: f64,
    r: f64,
}

impl L2Hash {
    pub fn new(a: Vec<f64>, b: f64, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::param("r", format!("bucket width must be positive, got {r}")));
        }
        if !(0.0..r).contains(&b) {
            return Err(Error::param("b", format!("offset must lie in [0, r), got {b}")));
        }
        if a.is_empty() {
            return Err(Error::param("a", "empty projection"));
        }
        Ok(L2Hash { a, b, r })
    }

    /// Draws `a ~ N(0, I_d)` then `b ~ U[0, r)` from `rng`.
    pub fn sample(d: usize, r: f64, rng: &mut impl Rng) -> Self {
        let a = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let b = rng.gen_range(0.0..r);
        L2Hash { a, b, r }
    }

    pub fn projection(&self) -> &[f64] {
        &self.a
    }

    pub fn offset(&self) -> f64 {
        self.b
    }

    pub fn width(&self) -> f64 {
        self.r
    }

    pub fn hash_value(&self, s: &SqrtVec) -> Result<i64> {
        if s.dim() != self.a.len() {
            return Err(Error::DimensionMismatch {
                left: s.dim(),
                right: self.a.len(),
            });
        }
        Ok(self.hash(s.values()))
    }
}

impl ProjectionHash for L2Hash {
    fn dim(&self) -> usize {
        self.a.len()
    }

    fn hash(&self, v: &[f64]) -> i64 {
        ((dot(&self.a, v) + self.b) / self.r).ceil() as i64
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Probability that one hash collides on two points at L2 distance `u`:
/// `1 - 2 Phi(-r/u) - 2u / (sqrt(2 pi) r) (1 - exp(-r^2 / (2 u^2)))`.
pub fn collision_prob(u: f64, r: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::param("u", format!("distance must be positive, got {u}")));
    }
    if !(r > 0.0) {
        return Err(Error::param("r", format!("bucket width must be positive, got {r}")));
    }
    let ratio = r / u;
    let tail = 2.0 * normal_cdf(-ratio);
    let ramp = 2.0 / ((2.0 * std::f64::consts::PI).sqrt() * ratio) * (-(ratio * ratio) / 2.0).exp_m1().abs();
    Ok((1.0 - tail - ramp).clamp(0.0, 1.0))
}

/// Sensitivity of the family for `GJS_lambda` at radius `R` and approximation `c`:
/// `(R, c^2 U/L R, p(1), p(c))`.
///
/// Distances are in units of `R1 = sqrt(2R / L(lambda))`, the Hellinger-side
/// radius that GJS radius `R` maps to; `r` is the bucket width in the same units.
pub fn sensitivity_gjs(lambda: f64, radius: f64, c: f64, r: f64) -> Result<Sensitivity> {
    check_radius(radius, c)?;
    let (lower, upper) = (lower_l(lambda)?, upper_u(lambda)?);
    Ok(Sensitivity {
        r1: radius,
        r2: c * c * upper / lower * radius,
        p1: collision_prob(1.0, r)?,
        p2: collision_prob(c, r)?,
    })
}

/// Sensitivity for triangular discrimination, `(R, 2 c^2 R, p(1), p(c))`.
///
/// Since `|sqrt(P) - sqrt(Q)|^2 <= Delta(P, Q) <= 2 |sqrt(P) - sqrt(Q)|^2`,
/// distances are in units of `R1 = sqrt(R)`.
pub fn sensitivity_td(radius: f64, c: f64, r: f64) -> Result<Sensitivity> {
    check_radius(radius, c)?;
    Ok(Sensitivity {
        r1: radius,
        r2: 2.0 * c * c * radius,
        p1: collision_prob(1.0, r)?,
        p2: collision_prob(c, r)?,
    })
}

fn check_radius(radius: f64, c: f64) -> Result<()> {
    if !(radius > 0.0) {
        return Err(Error::param("R", format!("radius must be positive, got {radius}")));
    }
    if !(c > 1.0) {
        return Err(Error::param(
            "c",
            format!("approximation factor must exceed 1, got {c}"),
        ));
    }
    Ok(())
}

/// `L` tables of `K` concatenated L2 hashes.
pub type HashBand = Band<L2Hash>;

/// Hash `i` of table `j` is drawn from a stream keyed by `(seed, j, i)`.
pub fn build_band(d: usize, k: usize, l: usize, r: f64, seed: u64) -> Result<HashBand> {
    if d == 0 {
        return Err(Error::param("d", "dimension must be positive"));
    }
    if k == 0 || l == 0 {
        return Err(Error::param(
            "K",
            format!("K and L must be at least 1, got K = {k}, L = {l}"),
        ));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::param("r", format!("bucket width must be positive, got {r}")));
    }
    let compounds = (0..l)
        .map(|j| {
            (0..k)
                .map(|i| L2Hash::sample(d, r, &mut stream_rng(seed, Stream::L2Hash, j as u64, i as u64)))
                .collect()
        })
        .collect();
    Band::new(compounds)
}

pub fn insert(band: &mut HashBand, id: usize, s: &SqrtVec) -> Result<()> {
    band.insert(id, s.values())
}

pub fn probe(band: &HashBand, s: &SqrtVec) -> Result<BTreeSet<usize>> {
    band.probe(s.values())
}
