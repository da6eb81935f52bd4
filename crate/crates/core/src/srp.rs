//! Sign random projections over padded Kreĭn transforms.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::band::{Band, ProjectionHash};
use crate::error::{Error, Result};
use crate::krein::{approx_mil, eta_pair, krein_transform, KreinParams, MipsVec, Side};
use crate::numeric::dot;
use crate::prob::FeatureColumn;
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct SrpHash {
    a: Vec<f64>,
}

impl SrpHash {
    pub fn new(a: Vec<f64>) -> Self {
        SrpHash { a }
    }

    pub fn sample(d: usize, rng: &mut impl Rng) -> Self {
        SrpHash {
            a: (0..d).map(|_| rng.sample(StandardNormal)).collect(),
        }
    }

    /// `sign(a . v)` as a bit; `sign(0) = +1` maps to `true`.
    pub fn srp_bit(&self, v: &MipsVec) -> Result<bool> {
        if v.dim() != self.a.len() {
            return Err(Error::DimensionMismatch {
                left: v.dim(),
                right: self.a.len(),
            });
        }
        Ok(dot(&self.a, v.values()) >= 0.0)
    }
}

impl ProjectionHash for SrpHash {
    fn dim(&self) -> usize {
        self.a.len()
    }

    fn hash(&self, v: &[f64]) -> i64 {
        i64::from(dot(&self.a, v) >= 0.0)
    }
}

/// `1 - arccos(cos_sim) / pi`.
pub fn srp_collision_prob(cos_sim: f64) -> Result<f64> {
    if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&cos_sim) {
        return Err(Error::param("cos_sim", format!("must lie in [-1, 1], got {cos_sim}")));
    }
    Ok(1.0 - cos_sim.clamp(-1.0, 1.0).acos() / std::f64::consts::PI)
}

/// Which way collision probability moves with the kernel value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    /// Larger MIL collides more often (plain MIPS reduction).
    MaxInnerProduct,
    /// Smaller MIL collides more often; queries hash `-T2`.
    #[default]
    MinDivergence,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::MaxInnerProduct => 1.0,
            Direction::MinDivergence => -1.0,
        }
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max-inner-product" | "mips" => Ok(Direction::MaxInnerProduct),
            "min-divergence" | "nn" => Ok(Direction::MinDivergence),
            other => Err(Error::param("direction", format!("unknown direction {other:?}"))),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::MaxInnerProduct => "max-inner-product",
            Direction::MinDivergence => "min-divergence",
        })
    }
}

/// `(T1(x, M), T2(y, M))`; their inner product is the approximate MIL.
pub fn asymmetric_pair(
    x: &FeatureColumn,
    y: &FeatureColumn,
    bound: f64,
    params: &KreinParams,
) -> Result<(MipsVec, MipsVec)> {
    let left = krein_transform(&eta_pair(x, params)?, bound, Side::Left)?;
    let right = krein_transform(&eta_pair(y, params)?, bound, Side::Right)?;
    Ok((left, right))
}

/// Single-bit collision probability for data column `x` against query column `y`.
pub fn mil_collision_prob(
    x: &FeatureColumn,
    y: &FeatureColumn,
    bound: f64,
    params: &KreinParams,
    direction: Direction,
) -> Result<f64> {
    let mil = approx_mil(x, y, params)?;
    srp_collision_prob(direction.sign() * mil / bound)
}

/// `L` tables of `K` sign bits, with a direction flag that decides how queries are hashed.
#[derive(Debug, Clone)]
pub struct SrpBand {
    band: Band<SrpHash>,
    direction: Direction,
}

impl SrpBand {
    /// Hash `i` of table `j` is drawn from a stream keyed by `(seed, j, i)`.
    pub fn build(d: usize, k: usize, l: usize, seed: u64, direction: Direction) -> Result<Self> {
        if d == 0 {
            return Err(Error::param("d", "dimension must be positive"));
        }
        if k == 0 || l == 0 {
            return Err(Error::param(
                "K",
                format!("K and L must be at least 1, got K = {k}, L = {l}"),
            ));
        }
        let compounds = (0..l)
            .map(|j| {
                (0..k)
                    .map(|i| SrpHash::sample(d, &mut stream_rng(seed, Stream::SrpHash, j as u64, i as u64)))
                    .collect()
            })
            .collect();
        Ok(SrpBand {
            band: Band::new(compounds)?,
            direction,
        })
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn band(&self) -> &Band<SrpHash> {
        &self.band
    }

    /// Keys of a data-side vector `T1(x, M)`.
    pub fn data_keys(&self, left: &MipsVec) -> Result<Vec<Vec<i64>>> {
        self.band.keys(left.values())
    }

    /// Keys of a query-side vector `T2(y, M)`, negated in min-divergence mode.
    pub fn query_keys(&self, right: &MipsVec) -> Result<Vec<Vec<i64>>> {
        match self.direction {
            Direction::MaxInnerProduct => self.band.keys(right.values()),
            Direction::MinDivergence => self.band.keys(right.negated().values()),
        }
    }

    pub fn insert(&mut self, id: usize, left: &MipsVec) -> Result<()> {
        let keys = self.data_keys(left)?;
        self.band.insert_keys(id, keys)
    }

    pub fn probe(&self, right: &MipsVec) -> Result<BTreeSet<usize>> {
        Ok(self.band.probe_keys(&self.query_keys(right)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krein::select_params;
    use crate::prob::dirichlet_joint;

    fn sample_vec() -> MipsVec {
        let p = select_params(1.0, 1).unwrap();
        let emb = eta_pair(&FeatureColumn::new(vec![0.5]).unwrap(), &p).unwrap();
        krein_transform(&emb, emb.norm_sq() + 1.0, Side::Left).unwrap()
    }

    #[test]
    fn bit_conventions() {
        let v = sample_vec();
        let a: Vec<f64> = (0..v.dim()).map(|i| if i % 3 == 0 { 1.0 } else { -0.4 }).collect();
        let h = SrpHash::new(a);
        let b = h.srp_bit(&v).unwrap();
        assert_eq!(b, h.srp_bit(&v).unwrap());
        assert_ne!(b, h.srp_bit(&v.negated()).unwrap());
        let zero = SrpHash::new(vec![0.0; v.dim()]);
        assert!(zero.srp_bit(&v).unwrap());
        assert!(SrpHash::new(vec![1.0]).srp_bit(&v).is_err());
    }

    #[test]
    fn collision_law_examples() {
        assert_eq!(srp_collision_prob(1.0).unwrap(), 1.0);
        assert_eq!(srp_collision_prob(0.0).unwrap(), 0.5);
        assert_eq!(srp_collision_prob(-1.0).unwrap(), 0.0);
        assert!(srp_collision_prob(1.5).is_err());
    }

    #[test]
    fn asymmetric_pair_reproduces_approx_mil() {
        let joint = dirichlet_joint(1.0, 3, 5, 4).unwrap();
        let p = select_params(0.2, 3).unwrap();
        let cols = joint.columns();
        let bound = cols
            .iter()
            .map(|c| eta_pair(c, &p).unwrap().norm_sq())
            .fold(0.0, f64::max);
        for x in 0..5 {
            for y in 0..5 {
                let (l, r) = asymmetric_pair(&cols[x], &cols[y], bound, &p).unwrap();
                let mil = approx_mil(&cols[x], &cols[y], &p).unwrap();
                assert!((l.inner(&r) - mil).abs() <= 1e-12);
                let cos = l.inner(&r) / (l.inner(&l).sqrt() * r.inner(&r).sqrt());
                assert!((cos - mil / bound).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn mil_collision_prob_directions() {
        let joint = crate::prob::JointDist::from_rows(&[vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        let p = select_params(0.05, 2).unwrap();
        let (x, y) = (joint.column(0), joint.column(1));
        let bound = eta_pair(&x, &p).unwrap().norm_sq();
        for dir in [Direction::MaxInnerProduct, Direction::MinDivergence] {
            let v = mil_collision_prob(&x, &y, bound, &p, dir).unwrap();
            assert!((v - 0.5).abs() < p.mil_error_bound() / bound);
        }
        // min-divergence: smaller MIL -> strictly larger probability
        let mils = [0.0, 0.01, 0.05, 0.1, 0.3];
        let probs: Vec<f64> = mils.iter().map(|m| srp_collision_prob(-m / 1.0).unwrap()).collect();
        assert!(probs.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn band_build_is_reproducible() {
        let a = SrpBand::build(10, 2, 3, 7, Direction::MinDivergence).unwrap();
        let b = SrpBand::build(10, 2, 3, 7, Direction::MinDivergence).unwrap();
        assert_eq!(a.band().compounds(), b.band().compounds());
        assert!(SrpBand::build(10, 0, 3, 7, Direction::MinDivergence).is_err());
        assert_eq!("mips".parse::<Direction>().unwrap(), Direction::MaxInnerProduct);
        assert_eq!(Direction::MinDivergence.to_string(), "min-divergence");
    }
}
