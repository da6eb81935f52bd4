//! Two-sided comparison of GJS and triangular discrimination with the
//! squared Hellinger distance.
//!
//! The generalized Jensen-Shannon divergence is the f-divergence of
//! `m_lambda(t) = lambda t ln t - (lambda t + 1 - lambda) ln(lambda t + 1 - lambda)`
//! and the squared Hellinger distance is that of `h(t) = (sqrt(t) - 1)^2 / 2`.
//! The ratio `kappa_lambda = m_lambda / h` is trapped in `[L(lambda), U(lambda)]`,
//! so `L H^2 <= GJS <= U H^2` and an L2 hash on `sqrt(P)` is locality
//! sensitive for GJS with the radii stretched by those constants.

use crate::error::{Error, Result};

/// Half-width of the band around `t = 1` where `kappa` uses its Taylor expansion.
pub const TAYLOR_BAND: f64 = 1e-6;

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::param("lambda", format!("must lie in (0, 1), got {lambda}")))
    }
}

/// `phi(1 + e)` for `phi(x) = x ln x - x + 1`, accurate near `e = 0`.
fn phi_shifted(e: f64) -> f64 {
    if e.abs() < 0.1 {
        // sum_{n >= 2} (-1)^n e^n / (n (n - 1))
        let mut power = e * e;
        let mut total = 0.0;
        for n in 2..24 {
            let n = n as f64;
            total += power / (n * (n - 1.0));
            power *= -e;
        }
        total
    } else if e <= -1.0 {
        1.0
    } else {
        (1.0 + e) * e.ln_1p() - e
    }
}

/// The GJS generator `m_lambda(t)`, for `lambda` in `[0, 1]` and `t >= 0`.
///
/// Evaluated as `u [lambda phi(t/u) + (1 - lambda) phi(1/u)]` with
/// `u = lambda t + 1 - lambda`; both terms are non-negative so nothing cancels
/// near `t = 1`.
pub fn m_lambda(lambda: f64, t: f64) -> f64 {
    if lambda <= 0.0 || lambda >= 1.0 {
        return 0.0;
    }
    let s = t - 1.0;
    let u = lambda * t + 1.0 - lambda;
    u * (lambda * phi_shifted((1.0 - lambda) * s / u) + (1.0 - lambda) * phi_shifted(-lambda * s / u))
}

/// The squared-Hellinger generator `(sqrt(t) - 1)^2 / 2`.
pub fn hellinger_h(t: f64) -> f64 {
    let d = (t - 1.0) / (t.sqrt() + 1.0);
    0.5 * d * d
}

/// `kappa_lambda(t) = m_lambda(t) / h(t)`, with the limit `4 lambda (1 - lambda)` at `t = 1`.
pub fn kappa(lambda: f64, t: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("must be positive and finite, got {t}")));
    }
    let s = t - 1.0;
    if s.abs() < TAYLOR_BAND {
        let c1 = -(2.0 * lambda - 1.0) / 6.0;
        let c2 = (8.0 * lambda * lambda - 3.0) / 48.0;
        return Ok(4.0 * lambda * (1.0 - lambda) * (1.0 + s * (c1 + s * c2)));
    }
    Ok(m_lambda(lambda, t) / hellinger_h(t))
}

/// `L(lambda) = 2 min{eta(lambda), eta(1 - lambda)}` with `eta(x) = -x ln x`.
pub fn lower_l(lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let eta = |x: f64| -x * x.ln();
    Ok(2.0 * eta(lambda).min(eta(1.0 - lambda)))
}

/// `U(lambda) = 2 lambda (1 - lambda) / (1 - 2 lambda) ln((1 - lambda) / lambda)`, equal to 1 at 1/2.
pub fn upper_u(lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    // With d = 1 - 2 lambda, ln((1 - lambda)/lambda) = 2 atanh(d).
    let d = 1.0 - 2.0 * lambda;
    let atanh_over_d = if d.abs() < 1e-5 {
        1.0 + d * d / 3.0 + d.powi(4) / 5.0
    } else {
        d.atanh() / d
    };
    Ok(4.0 * lambda * (1.0 - lambda) * atanh_over_d)
}

/// `L(lambda)`, `U(lambda)` and the point where `kappa_lambda` attains `U(lambda)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioEnvelope {
    pub lambda: f64,
    pub lower: f64,
    pub upper: f64,
    pub argmax_t: f64,
}

pub fn envelope(lambda: f64) -> Result<RatioEnvelope> {
    let r = (1.0 - lambda) / lambda;
    Ok(RatioEnvelope {
        lambda,
        lower: lower_l(lambda)?,
        upper: upper_u(lambda)?,
        argmax_t: r * r,
    })
}

/// `delta(t) / (sqrt(t) - 1)^2 = 1 + 2 sqrt(t) / (1 + t)`, in `[1, 2]`, where
/// `delta(t) = (t - 1)^2 / (t + 1)` generates triangular discrimination.
///
/// The denominator is `2 h(t)`: triangular discrimination lies between
/// `|sqrt(P) - sqrt(Q)|^2` and twice that, i.e. between `2 H^2` and `4 H^2`.
pub fn td_ratio(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::param("t", format!("must be non-negative, got {t}")));
    }
    if t.is_infinite() {
        return Ok(1.0);
    }
    Ok(1.0 + 2.0 * t.sqrt() / (1.0 + t))
}

/// An `(r1, r2, p1, p2)`-sensitive hash family: distance `<= r1` collides with
/// probability at least `p1`, distance `> r2` with probability at most `p2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sensitivity {
    pub r1: f64,
    pub r2: f64,
    pub p1: f64,
    pub p2: f64,
}

/// If `L D_g <= D_f <= U D_g`, a family sensitive for `D_g` at `(r1, r2)` is
/// sensitive for `D_f` at `(L r1, U r2)`.
pub fn transfer_sensitivity(family: Sensitivity, lower: f64, upper: f64) -> Result<Sensitivity> {
    let Sensitivity { r1, r2, p1, p2 } = family;
    if !(r1 < r2) {
        return Err(Error::param("r1", format!("need r1 < r2, got {r1} >= {r2}")));
    }
    if !(p1 > p2) {
        return Err(Error::param("p1", format!("need p1 > p2, got {p1} <= {p2}")));
    }
    if !(lower > 0.0 && lower <= upper) {
        return Err(Error::param(
            "lower",
            format!("need 0 < L <= U, got L = {lower}, U = {upper}"),
        ));
    }
    Ok(Sensitivity {
        r1: lower * r1,
        r2: upper * r2,
        p1,
        p2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    /// Direct formula, used only away from `t = 1`.
    fn m_naive(lambda: f64, t: f64) -> f64 {
        let u = lambda * t + 1.0 - lambda;
        lambda * t * t.ln() - u * u.ln()
    }

    #[test]
    fn m_lambda_examples() {
        for lambda in [0.0, 0.2, 0.5, 0.9, 1.0] {
            assert_eq!(m_lambda(lambda, 1.0), 0.0);
        }
        assert!((m_lambda(1.0 / 3.0, 4.0) - 2.0 / 3.0 * LN2).abs() < 1e-15);
        assert!((m_lambda(1.0 / 3.0, 4.0) - 0.462_098).abs() < 1e-6);
        assert_eq!(m_lambda(0.0, 7.0), 0.0);
        // t = 0 is the limit -(1 - lambda) ln(1 - lambda)
        assert!((m_lambda(0.3, 0.0) + 0.7 * 0.7f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn m_lambda_matches_naive_formula_away_from_one() {
        for lambda in [0.05, 0.3, 0.5, 0.77] {
            for t in [1e-3, 0.2, 0.85, 1.3, 5.0, 1e3] {
                let (a, b) = (m_lambda(lambda, t), m_naive(lambda, t));
                assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{lambda} {t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn m_lambda_is_convex() {
        for lambda in [0.1, 0.5, 0.9] {
            let step = 1e-3;
            let mut t = 0.01;
            while t < 20.0 {
                let second = m_lambda(lambda, t + step) - 2.0 * m_lambda(lambda, t) + m_lambda(lambda, t - step);
                assert!(second >= -1e-15, "lambda {lambda} t {t}");
                t *= 1.1;
            }
        }
    }

    #[test]
    fn kappa_examples() {
        assert!((kappa(0.5, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let v = kappa(1.0 / 3.0, 4.0).unwrap();
        assert!((v - 4.0 / 3.0 * LN2).abs() < 1e-14);
        assert!((v - 0.924_196).abs() < 1e-6);
        assert!((v - upper_u(1.0 / 3.0).unwrap()).abs() < 1e-14);
        assert!(kappa(0.0, 2.0).is_err());
        assert!(kappa(0.5, 0.0).is_err());
    }

    #[test]
    fn kappa_continuous_across_taylor_band() {
        for lambda in [0.1, 0.4, 0.5, 0.93] {
            for s in [
                TAYLOR_BAND * 0.999,
                TAYLOR_BAND * 1.001,
                -TAYLOR_BAND * 0.999,
                -TAYLOR_BAND * 1.001,
            ] {
                let direct = m_lambda(lambda, 1.0 + s) / hellinger_h(1.0 + s);
                let taylor = kappa(lambda, 1.0 + s).unwrap();
                assert!(
                    (direct - taylor).abs() < 1e-12,
                    "lambda {lambda} s {s}: {direct} vs {taylor}"
                );
            }
        }
    }

    #[test]
    fn lower_examples() {
        assert!((lower_l(0.5).unwrap() - LN2).abs() < 1e-15);
        let v = lower_l(1.0 / 3.0).unwrap();
        assert!((v - 4.0 / 3.0 * 1.5f64.ln()).abs() < 1e-15);
        assert!((v - 0.540_620).abs() < 1e-6);
        for lambda in [0.01, 0.2, 0.45] {
            assert_eq!(lower_l(lambda).unwrap(), lower_l(1.0 - lambda).unwrap());
        }
    }

    #[test]
    fn upper_examples() {
        assert_eq!(upper_u(0.5).unwrap(), 1.0);
        assert!((upper_u(1.0 / 3.0).unwrap() - 4.0 / 3.0 * LN2).abs() < 1e-15);
        for lambda in [0.01, 0.2, 0.45, 0.499_999] {
            let (a, b) = (upper_u(lambda).unwrap(), upper_u(1.0 - lambda).unwrap());
            assert!((a - b).abs() < 1e-15);
            assert!(a <= 1.0);
        }
        // straight formula agrees away from the singularity
        let lambda: f64 = 0.3;
        let direct = 2.0 * lambda * (1.0 - lambda) / (1.0 - 2.0 * lambda) * ((1.0 - lambda) / lambda).ln();
        assert!((upper_u(lambda).unwrap() - direct).abs() < 1e-15);
        // and the series branch is continuous with it
        let near: f64 = 0.5 - 5.1e-6;
        let direct = 2.0 * near * (1.0 - near) / (1.0 - 2.0 * near) * ((1.0 - near) / near).ln();
        assert!((upper_u(near).unwrap() - direct).abs() < 1e-9);
    }

    #[test]
    fn envelope_bundles_values() {
        let e = envelope(0.25).unwrap();
        assert_eq!(e.argmax_t, 9.0);
        assert!(0.0 < e.lower && e.lower <= e.upper && e.upper <= 1.0);
        assert!(envelope(1.0).is_err());
    }

    #[test]
    fn td_ratio_examples() {
        assert_eq!(td_ratio(1.0).unwrap(), 2.0);
        assert!((td_ratio(4.0).unwrap() - 1.8).abs() < 1e-15);
        assert!((td_ratio(1e-16).unwrap() - 1.0).abs() < 1e-7);
        assert!((td_ratio(1e16).unwrap() - 1.0).abs() < 1e-7);
        assert_eq!(td_ratio(0.0).unwrap(), 1.0);
        // ratio against h(t) itself is twice as large
        let t: f64 = 4.0;
        let delta = (t - 1.0).powi(2) / (t + 1.0);
        assert!((delta / hellinger_h(t) - 2.0 * td_ratio(t).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn transfer_examples() {
        let base = Sensitivity {
            r1: 1.0,
            r2: 2.0,
            p1: 0.9,
            p2: 0.1,
        };
        assert_eq!(transfer_sensitivity(base, 1.0, 1.0).unwrap(), base);
        let t = transfer_sensitivity(base, LN2, 1.0).unwrap();
        assert!((t.r1 - std::f64::consts::LN_2).abs() < 1e-6);
        assert_eq!((t.r2, t.p1, t.p2), (2.0, 0.9, 0.1));

        let bad = Sensitivity { r1: 2.0, ..base };
        assert!(transfer_sensitivity(bad, 1.0, 1.0).is_err());
        let bad = Sensitivity { p1: 0.05, ..base };
        assert!(transfer_sensitivity(bad, 1.0, 1.0).is_err());
        assert!(transfer_sensitivity(base, 1.0, 0.5).is_err());
        assert!(transfer_sensitivity(base, 0.0, 0.5).is_err());
    }
}
