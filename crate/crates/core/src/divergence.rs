//! Exact divergences between discrete distributions.
//!
//! These are the ground truth that every approximation and every index in
//! the crate is checked against. Natural logarithms throughout, with the
//! conventions `0 ln 0 = 0` and `0 ln(0/0) = 0`.

use std::fmt;
use std::str::FromStr;

use crate::bounds::{check_lambda, m_lambda};
use crate::error::{Error, Result};
use crate::krein::kernel_k;
use crate::numeric::{eta, pairwise_sum, pairwise_sum_by};
use crate::prob::{FeatureColumn, JointDist, ProbVec};

fn same_dim(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(())
}

/// `sum_i p_i ln(p_i / q_i)`. Requires `q_i = 0 => p_i = 0`.
pub fn kl(p: &ProbVec, q: &ProbVec) -> Result<f64> {
    kl_slices(p.values(), q.values())
}

fn kl_slices(p: &[f64], q: &[f64]) -> Result<f64> {
    same_dim(p, q)?;
    if let Some(index) = (0..p.len()).find(|&i| p[i] > 0.0 && q[i] <= 0.0) {
        return Err(Error::SupportViolation { index, p: p[index] });
    }
    Ok(pairwise_sum_by(p.len(), |i| {
        if p[i] > 0.0 {
            p[i] * (p[i] / q[i]).ln()
        } else {
            0.0
        }
    }))
}

/// Squared Hellinger distance, `1/2 |sqrt(P) - sqrt(Q)|^2`.
pub fn hellinger_sq(p: &ProbVec, q: &ProbVec) -> Result<f64> {
    let (p, q) = (p.values(), q.values());
    same_dim(p, q)?;
    Ok(0.5
        * pairwise_sum_by(p.len(), |i| {
            let d = p[i].sqrt() - q[i].sqrt();
            d * d
        }))
}

/// Generalized Jensen-Shannon divergence,
/// `lambda KL(P || M) + (1 - lambda) KL(Q || M)` with `M = lambda P + (1 - lambda) Q`.
pub fn gjs(lambda: f64, p: &ProbVec, q: &ProbVec) -> Result<f64> {
    check_lambda(lambda)?;
    let (p, q) = (p.values(), q.values());
    same_dim(p, q)?;
    let mix = |i: usize| lambda * p[i] + (1.0 - lambda) * q[i];
    let kl_to_mix =
        |x: &[f64]| pairwise_sum_by(x.len(), |i| if x[i] > 0.0 { x[i] * (x[i] / mix(i)).ln() } else { 0.0 });
    Ok(lambda * kl_to_mix(p) + (1.0 - lambda) * kl_to_mix(q))
}

fn entropy(p: &[f64]) -> f64 {
    pairwise_sum_by(p.len(), |i| eta(p[i]))
}

/// The same quantity as [`gjs`], computed as `H(M) - lambda H(P) - (1 - lambda) H(Q)`.
pub fn gjs_entropy_form(lambda: f64, p: &ProbVec, q: &ProbVec) -> Result<f64> {
    check_lambda(lambda)?;
    let (p, q) = (p.values(), q.values());
    same_dim(p, q)?;
    let mix: Vec<f64> = p.iter().zip(q).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
    Ok(entropy(&mix) - lambda * entropy(p) - (1.0 - lambda) * entropy(q))
}

/// Jensen-Shannon divergence (GJS at `lambda = 1/2`).
pub fn js(p: &ProbVec, q: &ProbVec) -> Result<f64> {
    gjs(0.5, p, q)
}

/// Triangular discrimination `sum_i (p_i - q_i)^2 / (p_i + q_i)`.
pub fn triangular(p: &ProbVec, q: &ProbVec) -> Result<f64> {
    let (p, q) = (p.values(), q.values());
    same_dim(p, q)?;
    Ok(pairwise_sum_by(p.len(), |i| {
        let s = p[i] + q[i];
        if s > 0.0 {
            (p[i] - q[i]) * (p[i] - q[i]) / s
        } else {
            0.0
        }
    }))
}

/// `sum_i q_i f(p_i / q_i)` for a convex generator `f` with `f(1) = 0`.
///
/// Coordinates with `q_i = 0 < p_i` contribute `p_i * lim_{t->inf} f(t)/t`;
/// that limit must be supplied as `slope_at_infinity` when such a
/// coordinate occurs. `f` itself must accept `t = 0`.
pub fn f_divergence(f: impl Fn(f64) -> f64, slope_at_infinity: Option<f64>, p: &ProbVec, q: &ProbVec) -> Result<f64> {
    let (p, q) = (p.values(), q.values());
    same_dim(p, q)?;
    let mut terms = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let term = if q[i] > 0.0 {
            q[i] * f(p[i] / q[i])
        } else if p[i] > 0.0 {
            p[i] * slope_at_infinity.ok_or(Error::MissingLimit { index: i })?
        } else {
            0.0
        };
        terms.push(term);
    }
    Ok(pairwise_sum(&terms))
}

/// Generator of the squared Hellinger distance, `1/2 (sqrt(t) - 1)^2`.
pub fn hellinger_generator(t: f64) -> f64 {
    let d = t.sqrt() - 1.0;
    0.5 * d * d
}

/// Generator of the triangular discrimination, `(t - 1)^2 / (t + 1)`.
pub fn triangular_generator(t: f64) -> f64 {
    (t - 1.0) * (t - 1.0) / (t + 1.0)
}

/// GJS as an f-divergence with generator `m_lambda`.
pub fn gjs_as_f_divergence(lambda: f64, p: &ProbVec, q: &ProbVec) -> Result<f64> {
    check_lambda(lambda)?;
    f_divergence(|t| m_lambda(lambda, t), Some(-lambda * lambda.ln()), p, q)
}

fn check_mil_pair(x: &FeatureColumn, y: &FeatureColumn, ids: (&str, &str)) -> Result<()> {
    if x.num_labels() != y.num_labels() {
        return Err(Error::DimensionMismatch {
            left: x.num_labels(),
            right: y.num_labels(),
        });
    }
    if x.mass() <= 0.0 {
        return Err(Error::UnsupportedFeature(ids.0.to_string()));
    }
    if y.mass() <= 0.0 {
        return Err(Error::UnsupportedFeature(ids.1.to_string()));
    }
    Ok(())
}

/// Mutual information lost by merging feature values with columns `x` and `y`:
/// `eta(p(x)) + eta(p(y)) - eta(p(z)) - sum_c [eta(p(c,x)) + eta(p(c,y)) - eta(p(c,z))]`.
pub fn mil_columns(x: &FeatureColumn, y: &FeatureColumn) -> Result<f64> {
    check_mil_pair(x, y, ("x", "y"))?;
    let merged = eta(x.mass()) + eta(y.mass()) - eta(x.mass() + y.mass());
    let (a, b) = (x.values(), y.values());
    let per_label = pairwise_sum_by(a.len(), |c| eta(a[c]) + eta(b[c]) - eta(a[c] + b[c]));
    Ok(merged - per_label)
}

/// Kernel-difference form `k(p(x), p(y)) - sum_c k(p(c,x), p(c,y))`.
pub fn mil_columns_kernel(x: &FeatureColumn, y: &FeatureColumn) -> Result<f64> {
    check_mil_pair(x, y, ("x", "y"))?;
    let (a, b) = (x.values(), y.values());
    Ok(kernel_k(x.mass(), y.mass()) - pairwise_sum_by(a.len(), |c| kernel_k(a[c], b[c])))
}

fn mil_ids<'a>(joint: &JointDist, x: &'a str, y: &'a str) -> Result<(FeatureColumn, FeatureColumn)> {
    if x == y {
        return Err(Error::IdenticalFeatures(x.to_string()));
    }
    let cx = joint.column(joint.feature_index(x)?);
    let cy = joint.column(joint.feature_index(y)?);
    check_mil_pair(&cx, &cy, (x, y))?;
    Ok((cx, cy))
}

/// Mutual-information loss of merging features `x` and `y` of `joint` (entropy form).
pub fn mil_entropy(joint: &JointDist, x: &str, y: &str) -> Result<f64> {
    let (cx, cy) = mil_ids(joint, x, y)?;
    mil_columns(&cx, &cy)
}

/// Mutual-information loss as the difference of two positive definite kernels.
pub fn mil_kernel_diff(joint: &JointDist, x: &str, y: &str) -> Result<f64> {
    let (cx, cy) = mil_ids(joint, x, y)?;
    mil_columns_kernel(&cx, &cy)
}

/// MIL through the conditionals: `(p(x) + p(y)) * GJS_lambda(P_x, P_y)` with
/// `lambda = p(x) / (p(x) + p(y))`. The merged-mass factor is required; GJS
/// alone is MIL normalized by the mass of the merged value.
pub fn mil_gjs_form(x: &FeatureColumn, y: &FeatureColumn) -> Result<f64> {
    check_mil_pair(x, y, ("x", "y"))?;
    let total = x.mass() + y.mass();
    let lambda = x.mass() / total;
    let px = crate::prob::column_conditional(x).expect("mass checked");
    let py = crate::prob::column_conditional(y).expect("mass checked");
    Ok(total * gjs(lambda, &px, &py)?)
}

/// Divergence selector used by the CLI and the index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DivergenceKind {
    Kl,
    Js,
    Gjs(f64),
    SquaredHellinger,
    TriangularDiscrimination,
    Mil,
}

impl DivergenceKind {
    /// Evaluates a divergence between two distributions. `Mil` is defined on
    /// joint-table columns and is rejected here; see [`mil_columns`].
    pub fn evaluate(&self, p: &ProbVec, q: &ProbVec) -> Result<f64> {
        match *self {
            DivergenceKind::Kl => kl(p, q),
            DivergenceKind::Js => js(p, q),
            DivergenceKind::Gjs(lambda) => gjs(lambda, p, q),
            DivergenceKind::SquaredHellinger => hellinger_sq(p, q),
            DivergenceKind::TriangularDiscrimination => triangular(p, q),
            DivergenceKind::Mil => Err(Error::param("kind", "mil is defined on joint-table columns")),
        }
    }

    /// Parses a CLI name; `lambda` is required for `gjs` and rejected otherwise.
    pub fn from_name(name: &str, lambda: Option<f64>) -> Result<Self> {
        let kind = name.parse::<DivergenceKind>()?;
        match (kind, lambda) {
            (DivergenceKind::Gjs(_), Some(l)) => {
                check_lambda(l)?;
                Ok(DivergenceKind::Gjs(l))
            }
            (DivergenceKind::Gjs(_), None) => Err(Error::param("lambda", "gjs requires --lambda")),
            (_, Some(_)) => Err(Error::param(
                "lambda",
                format!("--lambda only applies to gjs, not {name}"),
            )),
            (k, None) => Ok(k),
        }
    }
}

impl FromStr for DivergenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "kl" => DivergenceKind::Kl,
            "js" => DivergenceKind::Js,
            "gjs" => DivergenceKind::Gjs(0.5),
            "hellinger" | "hellinger-sq" => DivergenceKind::SquaredHellinger,
            "triangular" => DivergenceKind::TriangularDiscrimination,
            "mil" => DivergenceKind::Mil,
            other => return Err(Error::param("kind", format!("unknown divergence {other:?}"))),
        })
    }
}

impl fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DivergenceKind::Kl => write!(f, "kl"),
            DivergenceKind::Js => write!(f, "js"),
            DivergenceKind::Gjs(l) => write!(f, "gjs({l})"),
            DivergenceKind::SquaredHellinger => write!(f, "hellinger"),
            DivergenceKind::TriangularDiscrimination => write!(f, "triangular"),
            DivergenceKind::Mil => write!(f, "mil"),
        }
    }
}
