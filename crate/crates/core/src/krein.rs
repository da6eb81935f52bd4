//! Finite-dimensional Kreĭn transforms for mutual-information loss.
//!
//! MIL of merging two feature values is `K1(x, y) - K2(x, y)` where
//! `K1(x, y) = k(p(x), p(y))`, `K2(x, y) = sum_c k(p(c,x), p(c,y))` and
//! `k(a, b) = a ln((a+b)/a) + b ln((a+b)/b)` is a homogeneous positive
//! definite kernel on `[0, 1]`. Its feature map is
//! `Phi_w(x) = exp(-i w ln x) sqrt(x rho(w))` with
//! `rho(w) = 2 sech(pi w) / (1 + 4 w^2)`, so
//! `k(x, y) = int_R conj(Phi_w(x)) Phi_w(y) dw`.
//!
//! Truncating that integral to `[-J Delta, J Delta]` and replacing each
//! segment of width `Delta` by its midpoint yields 2-vectors `tau(x, j)`.
//! Stacking the blocks for `p(x)` and each `p(c, x)`, with the label blocks
//! negated on the right side, gives `eta1`, `eta2` with
//! `<eta1(x), eta2(y)> ~ MIL(x, y)`. The per-scalar error is at most
//! `4 exp(-J Delta) + 2 Delta`.
//!
//! Padding to a common squared norm `M` turns the pair into vectors on a
//! sphere, where sign random projections (see [`crate::srp`]) hash by angle.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{norm_sq, pairwise_sum, pairwise_sum_by};
use crate::prob::FeatureColumn;
use crate::quadrature::integrate;

/// Absolute tolerance for each `int rho` segment.
pub const SEGMENT_TOLERANCE: f64 = 1e-12;

/// `k(a, b) = a ln((a+b)/a) + b ln((a+b)/b)`, with `k(a, 0) = k(0, b) = 0`.
pub fn kernel_k(a: f64, b: f64) -> f64 {
    let s = a + b;
    let term = |x: f64| if x > 0.0 { x * (s / x).ln() } else { 0.0 };
    term(a) + term(b)
}

/// `rho(w) = 2 sech(pi w) / (1 + 4 w^2)`, the spectral density of `k`.
pub fn rho(w: f64) -> f64 {
    2.0 / (PI * w).cosh() / (1.0 + 4.0 * w * w)
}

/// `int_{(j-1) Delta}^{j Delta} rho(w) dw` for `j >= 1`.
pub fn rho_segment(j: usize, delta: f64) -> f64 {
    let (lo, hi) = ((j - 1) as f64 * delta, j as f64 * delta);
    integrate(rho, lo, hi, SEGMENT_TOLERANCE)
}

/// Discretization of the feature map: `J` segments of width `Delta` on each half-line.
#[derive(Debug, Clone, PartialEq)]
pub struct KreinParams {
    delta: f64,
    j_count: usize,
    epsilon: f64,
    num_labels: usize,
    /// `int rho` over segment `j`, for `j = 1..=J`.
    segments: Vec<f64>,
}

impl KreinParams {
    pub fn new(delta: f64, j_count: usize, num_labels: usize, epsilon: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::param("delta", format!("must be positive, got {delta}")));
        }
        if j_count == 0 {
            return Err(Error::param("J", "need at least one segment"));
        }
        if num_labels == 0 {
            return Err(Error::param("num_labels", "need at least one label"));
        }
        let segments = (1..=j_count).into_par_iter().map(|j| rho_segment(j, delta)).collect();
        Ok(KreinParams {
            delta,
            j_count,
            epsilon,
            num_labels,
            segments,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn j_count(&self) -> usize {
        self.j_count
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    /// Truncation radius `J Delta`.
    pub fn radius(&self) -> f64 {
        self.delta * self.j_count as f64
    }

    /// Midpoint `w_j = (j - 1/2) Delta`, `j >= 1`.
    pub fn node(&self, j: usize) -> f64 {
        (j as f64 - 0.5) * self.delta
    }

    pub fn segment(&self, j: usize) -> f64 {
        self.segments[j - 1]
    }

    /// Length of `eta1` / `eta2`: `2 J (1 + |C|)`.
    pub fn embedding_dim(&self) -> usize {
        2 * self.j_count * (1 + self.num_labels)
    }

    /// Worst-case error of one scalar kernel, `4 exp(-J Delta) + 2 Delta`.
    pub fn scalar_error_bound(&self) -> f64 {
        4.0 * (-self.radius()).exp() + 2.0 * self.delta
    }

    /// Worst-case error of an approximate MIL value, `(1 + |C|)` scalar budgets.
    pub fn mil_error_bound(&self) -> f64 {
        (1 + self.num_labels) as f64 * self.scalar_error_bound()
    }

    /// `tau(x, w_j, j)` using the precomputed segment integral.
    pub fn tau(&self, x: f64, j: usize) -> [f64; 2] {
        atomic(x, self.node(j), self.segment(j))
    }

    fn push_blocks(&self, x: f64, sign: f64, out: &mut Vec<f64>) {
        for j in 1..=self.j_count {
            let [c, s] = self.tau(x, j);
            out.push(sign * c);
            out.push(sign * s);
        }
    }
}

/// Chooses `Delta = eps / (4 (1 + |C|))` and
/// `J = ceil(4 (1 + |C|) / eps * ln(8 (1 + |C|) / eps))`, which keeps the
/// total MIL approximation error at most `eps`.
pub fn select_params(epsilon: f64, num_labels: usize) -> Result<KreinParams> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::param("epsilon", format!("must be positive, got {epsilon}")));
    }
    if num_labels == 0 {
        return Err(Error::param("num_labels", "need at least one label"));
    }
    let blocks = (1 + num_labels) as f64;
    let delta = epsilon / (4.0 * blocks);
    let j_count = (4.0 * blocks / epsilon * (8.0 * blocks / epsilon).ln()).ceil() as usize;
    KreinParams::new(delta, j_count.max(1), num_labels, epsilon)
}

fn atomic(x: f64, w: f64, segment: f64) -> [f64; 2] {
    if x <= 0.0 {
        return [0.0, 0.0];
    }
    let amplitude = (2.0 * x * segment).sqrt();
    let (sin, cos) = (w * x.ln()).sin_cos();
    [cos * amplitude, sin * amplitude]
}

/// The atomic transform for segment `j` of width `delta`, integrating `rho` afresh.
pub fn tau(x: f64, j: usize, delta: f64) -> [f64; 2] {
    atomic(x, (j as f64 - 0.5) * delta, rho_segment(j, delta))
}

/// `<(+)_j tau(x, j), (+)_j tau(y, j)>`, the discretized `k(x, y)`.
pub fn approx_scalar_kernel(x: f64, y: f64, params: &KreinParams) -> f64 {
    pairwise_sum_by(params.j_count, |i| {
        let [a0, a1] = params.tau(x, i + 1);
        let [b0, b1] = params.tau(y, i + 1);
        a0 * b0 + a1 * b1
    })
}

/// Left and right basic transforms of one feature column.
#[derive(Debug, Clone, PartialEq)]
pub struct KreinEmbedding {
    left: Vec<f64>,
    right: Vec<f64>,
    norm_sq: f64,
}

impl KreinEmbedding {
    pub fn left(&self) -> &[f64] {
        &self.left
    }

    pub fn right(&self) -> &[f64] {
        &self.right
    }

    /// `|eta1|^2 = |eta2|^2`.
    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }
}

/// `eta1(x) = (+)_j tau(p(x), j) (+) (+)_j (+)_c tau(p(c,x), j)`; `eta2` negates the label blocks.
pub fn eta_pair(col: &FeatureColumn, params: &KreinParams) -> Result<KreinEmbedding> {
    if col.mass() <= 0.0 {
        return Err(Error::UnsupportedFeature("column with zero mass".into()));
    }
    if col.num_labels() != params.num_labels {
        return Err(Error::DimensionMismatch {
            left: col.num_labels(),
            right: params.num_labels,
        });
    }
    let dim = params.embedding_dim();
    let mut left = Vec::with_capacity(dim);
    params.push_blocks(col.mass(), 1.0, &mut left);
    let head = left.len();
    for j in 1..=params.j_count {
        for &p in col.values() {
            let [c, s] = params.tau(p, j);
            left.push(c);
            left.push(s);
        }
    }
    let mut right = left.clone();
    right[head..].iter_mut().for_each(|v| *v = -*v);
    let norm_sq = norm_sq(&left);
    Ok(KreinEmbedding { left, right, norm_sq })
}

/// Which Kreĭn transform to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `T1(x, M) = [eta1, sqrt(M - |eta1|^2), 0]`
    Left,
    /// `T2(y, M) = [eta2, 0, sqrt(M - |eta2|^2)]`
    Right,
}

/// A transformed vector of squared norm `bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct MipsVec {
    values: Vec<f64>,
    bound: f64,
}

impl MipsVec {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn inner(&self, other: &MipsVec) -> f64 {
        crate::numeric::dot(&self.values, &other.values)
    }

    pub fn negated(&self) -> MipsVec {
        MipsVec {
            values: self.values.iter().map(|v| -v).collect(),
            bound: self.bound,
        }
    }
}

pub fn krein_transform(emb: &KreinEmbedding, bound: f64, side: Side) -> Result<MipsVec> {
    if !(bound >= emb.norm_sq) {
        return Err(Error::NormBound {
            bound,
            norm_sq: emb.norm_sq,
        });
    }
    let pad = (bound - emb.norm_sq).sqrt();
    let (body, tail) = match side {
        Side::Left => (&emb.left, [pad, 0.0]),
        Side::Right => (&emb.right, [0.0, pad]),
    };
    let mut values = Vec::with_capacity(body.len() + 2);
    values.extend_from_slice(body);
    values.extend_from_slice(&tail);
    Ok(MipsVec { values, bound })
}

/// `<eta1(x), eta2(y)>`, the discretized MIL of merging `x` and `y`.
pub fn approx_mil(x: &FeatureColumn, y: &FeatureColumn, params: &KreinParams) -> Result<f64> {
    Ok(approx_mil_embedded(&eta_pair(x, params)?, &eta_pair(y, params)?))
}

/// [`approx_mil`] from precomputed embeddings.
pub fn approx_mil_embedded(x: &KreinEmbedding, y: &KreinEmbedding) -> f64 {
    crate::numeric::dot(x.left(), y.right())
}

/// The same quantity summed kernel by kernel, without materializing the embeddings.
pub fn approx_mil_by_kernels(x: &FeatureColumn, y: &FeatureColumn, params: &KreinParams) -> f64 {
    let labels: Vec<f64> = x
        .values()
        .iter()
        .zip(y.values())
        .map(|(&a, &b)| approx_scalar_kernel(a, b, params))
        .collect();
    approx_scalar_kernel(x.mass(), y.mass(), params) - pairwise_sum(&labels)
}

/// Per-point embeddings, filled at most once and then read concurrently.
#[derive(Debug)]
pub struct EmbeddingCache {
    params: KreinParams,
    columns: Vec<FeatureColumn>,
    slots: Vec<OnceLock<KreinEmbedding>>,
}

impl EmbeddingCache {
    pub fn new(params: KreinParams, columns: Vec<FeatureColumn>) -> Self {
        let slots = (0..columns.len()).map(|_| OnceLock::new()).collect();
        EmbeddingCache { params, columns, slots }
    }

    pub fn params(&self) -> &KreinParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn get(&self, i: usize) -> Result<&KreinEmbedding> {
        if let Some(e) = self.slots[i].get() {
            return Ok(e);
        }
        let e = eta_pair(&self.columns[i], &self.params)?;
        Ok(self.slots[i].get_or_init(|| e))
    }

    /// `max_i |eta1(x_i)|^2`, the tightest common padding bound.
    pub fn max_norm_sq(&self) -> Result<f64> {
        let norms = (0..self.len())
            .into_par_iter()
            .map(|i| self.get(i).map(KreinEmbedding::norm_sq))
            .collect::<Result<Vec<_>>>()?;
        Ok(norms.into_iter().fold(0.0, f64::max))
    }
}
