//! Limiting laws and constants, and the deterministic sums behind the
//! variance asymptotics.
//!
//! Constants are stated for `P(z) ~ z^d` near zero. For `P(z) ~ a z^d` the
//! moment of order `p` picks up `a^{-p/d}`, the mean total cost `a^{-1/d}`
//! and the variance `a^{-2/d}`; the `*_scaled` helpers and the `a`
//! arguments apply those factors.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureResult};
use crate::recursion::compensated_sum;

fn require_positive_d(d: f64) -> Result<()> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "pseudo-dimension must be positive, got {d}"
        )))
    }
}

fn require_scale(a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("scale constant must be positive, got {a}")))
    }
}

/// `P(W^{1/d} >= x) = 1 / (1 + x^d)`: survival of the limit of the rescaled
/// typical cost `n^{1/d} c(v)`.
pub fn limit_survival_typical(d: f64, x: f64) -> Result<f64> {
    limit_survival_typical_scaled(d, 1.0, x)
}

/// Survival of `a^{-1/d} W^{1/d}`, i.e. `1 / (1 + a x^d)`.
pub fn limit_survival_typical_scaled(d: f64, a: f64, x: f64) -> Result<f64> {
    require_positive_d(d)?;
    require_scale(a)?;
    if x <= 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 / (1.0 + a * x.powf(d)))
}

pub fn limit_cdf_typical(d: f64, x: f64) -> Result<f64> {
    limit_survival_typical(d, x).map(|s| 1.0 - s)
}

pub fn limit_cdf_typical_scaled(d: f64, a: f64, x: f64) -> Result<f64> {
    limit_survival_typical_scaled(d, a, x).map(|s| 1.0 - s)
}

/// `E W^{p/d} = a^{-p/d} pπ / (d sin(pπ/d))`, finite for `0 < p < d`.
pub fn moment_limit(p: f64, d: f64, a: f64) -> Result<f64> {
    require_positive_d(d)?;
    require_scale(a)?;
    if !(p > 0.0 && p < d) {
        return Err(Error::Domain(format!(
            "moment of order p={p} is finite only for 0 < p < d={d}"
        )));
    }
    let r = p / d;
    Ok(a.powf(-r) * p * PI / (d * (PI * r).sin()))
}

/// Limit of `C_{n,n} / n^{1-1/d}`: `a^{-1/d} π / (d sin(π/d))`, for `d > 1`.
pub fn lln_constant(d: f64, a: f64) -> Result<f64> {
    if !(d > 1.0) {
        return Err(Error::Domain(format!(
            "law of large numbers needs d > 1, got {d}"
        )));
    }
    moment_limit(1.0, d, a)
}

/// `E Y_k = Σ_{i=n-k+1}^{n} 1/i²` (1-based `k`).
pub fn exact_mean_yk(n: usize, k: usize) -> Result<f64> {
    if k == 0 || k > n {
        return Err(Error::Index { index: k, len: n });
    }
    // smallest terms first
    Ok((n - k + 1..=n).rev().map(|i| 1.0 / (i as f64 * i as f64)).sum())
}

/// `[E Y_1, ..., E Y_n]`, accumulated from the smallest term up.
pub fn exact_means(n: usize) -> Vec<f64> {
    let mut acc = 0.0;
    (1..=n)
        .map(|k| {
            let r = (n - k + 1) as f64;
            acc += 1.0 / (r * r);
            acc
        })
        .collect()
}

const BETA_ABS_TOL: f64 = 1e-14;
const BETA_REL_TOL: f64 = 1e-13;

/// `∫_lo^hi x^{1-1/d}(1-x)^{1/d-1} dx` for `0 <= lo <= hi <= 1/2`, after
/// `x = v^d`.
fn beta_lower_piece(lo: f64, hi: f64, d: f64) -> Result<QuadratureResult> {
    let e = 1.0 / d - 1.0;
    integrate(
        |v: f64| {
            let vd = v.powf(d);
            d * v.powf(2.0 * d - 2.0) * (1.0 - vd).powf(e)
        },
        lo.powf(1.0 / d),
        hi.powf(1.0 / d),
        BETA_ABS_TOL,
        BETA_REL_TOL,
    )
}

/// Same integrand for `1/2 <= lo <= hi <= 1`, after `x = 1 - w^d`, which
/// turns the endpoint singularity at 1 into `d (1 - w^d)^{1-1/d}`.
fn beta_upper_piece(lo: f64, hi: f64, d: f64) -> Result<QuadratureResult> {
    let e = 1.0 - 1.0 / d;
    integrate(
        |w: f64| d * (1.0 - w.powf(d)).powf(e),
        (1.0 - hi).powf(1.0 / d),
        (1.0 - lo).powf(1.0 / d),
        BETA_ABS_TOL,
        BETA_REL_TOL,
    )
}

fn incomplete_beta_result(lo: f64, t: f64, d: f64) -> Result<QuadratureResult> {
    let mut value = 0.0;
    let mut error = 0.0;
    let mut evaluations = 0;
    let mut add = |r: QuadratureResult| {
        value += r.value;
        error += r.abs_error_estimate;
        evaluations += r.evaluations;
    };
    if lo < 0.5 {
        add(beta_lower_piece(lo, t.min(0.5), d)?);
    }
    if t > 0.5 {
        add(beta_upper_piece(lo.max(0.5), t, d)?);
    }
    Ok(QuadratureResult {
        value,
        abs_error_estimate: error,
        evaluations,
    })
}

/// Incomplete beta integral `I_lo(t) = ∫_lo^t x^{1-1/d}(1-x)^{1/d-1} dx`,
/// `0 <= lo <= t <= 1`, `d > 1`.
pub fn incomplete_beta_i(lo: f64, t: f64, d: f64) -> Result<f64> {
    if !(d > 1.0) {
        return Err(Error::Domain(format!("incomplete beta needs d > 1, got {d}")));
    }
    if !(0.0 <= lo && lo <= t && t <= 1.0) {
        return Err(Error::Domain(format!(
            "need 0 <= lo <= t <= 1, got lo={lo}, t={t}"
        )));
    }
    if lo == t {
        return Ok(0.0);
    }
    incomplete_beta_result(lo, t, d).map(|r| r.value)
}

fn check_window(n: usize, kappa_n: usize, d: f64) -> Result<usize> {
    if !(d > 1.0) {
        return Err(Error::Domain(format!("need d > 1, got {d}")));
    }
    if kappa_n >= n {
        return Err(Error::Range(format!("kappa_n={kappa_n} must be < n={n}")));
    }
    Ok(n - kappa_n)
}

/// `Ξ_k` for every `k = 1..=m_n`: suffix sums of `(E Y_i)^{1/d-1}` up to
/// `m_n = n - kappa_n`.
pub fn xi_all(n: usize, kappa_n: usize, d: f64) -> Result<Vec<f64>> {
    let m_n = check_window(n, kappa_n, d)?;
    let e = 1.0 / d - 1.0;
    let means = exact_means(n);
    let mut xi = vec![0.0; m_n];
    let (mut acc, mut carry) = (0.0f64, 0.0f64);
    for i in (0..m_n).rev() {
        // compensated running sum
        let y = means[i].powf(e) - carry;
        let t = acc + y;
        carry = (t - acc) - y;
        acc = t;
        xi[i] = acc;
    }
    Ok(xi)
}

/// `Ξ_k = Σ_{i=k}^{m_n} (E Y_i)^{1/d-1}` (1-based `k`).
pub fn xi_k(n: usize, k: usize, kappa_n: usize, d: f64) -> Result<f64> {
    let m_n = check_window(n, kappa_n, d)?;
    if k == 0 || k > m_n {
        return Err(Error::Range(format!("k={k} must lie in 1..={m_n}")));
    }
    let e = 1.0 / d - 1.0;
    let means = exact_means(n);
    Ok(compensated_sum(means[k - 1..m_n].iter().map(|m| m.powf(e))))
}

/// `Σ_{k=lambda_n}^{m_n} E V_{n,k} = d^{-2} Σ Ξ_k² / (n-k+1)^4`, using
/// `Var X_k = (n-k+1)^{-4}`.
pub fn expected_vnk_sum(n: usize, d: f64, lambda_n: usize, kappa_n: usize) -> Result<f64> {
    if !(d > 2.0) {
        return Err(Error::Domain(format!("variance sums need d > 2, got {d}")));
    }
    let m_n = check_window(n, kappa_n, d)?;
    if lambda_n < 1 || lambda_n > m_n {
        return Err(Error::Range(format!("lambda_n={lambda_n} must lie in 1..={m_n}")));
    }
    let xi = xi_all(n, kappa_n, d)?;
    let sum = compensated_sum((lambda_n..=m_n).map(|k| {
        let r = (n - k + 1) as f64;
        let x = xi[k - 1];
        x * x / (r * r * r * r)
    }));
    Ok(sum / (d * d))
}

/// `γ(d) = d^{-2} ∫_0^1 t^{-4} I_0(t)² dt`, the limit of
/// `Var(C_{n,n}) / n^{1-2/d}` for `d > 2`.
///
/// Near zero the integrand is `~ t^{-2/d} / (2-1/d)²`. Writing
/// `t = u^q` with `q = d/(d-2)` cancels that power exactly:
///
/// ```text
/// γ(d) = q/d² ∫_0^1 J(u^q)² du,   J(t) = t^{-(2-1/d)} I_0(t),
/// ```
///
/// and `J` is bounded (`J(0) = 1/(2-1/d)`). For `t <= 1/2`, `J(t)` is
/// integrated directly in rescaled form so it keeps full relative accuracy
/// as `t -> 0`; above 1/2 the endpoint-regularised beta piece is used.
pub fn gamma_d(d: f64, tol: f64) -> Result<QuadratureResult> {
    if !(d > 2.0) || !d.is_finite() {
        return Err(Error::Domain(format!(
            "γ(d) is finite only for d > 2 (the integrand behaves like t^(-2/d) at 0); got {d}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", format!("must be positive, got {tol}")));
    }

    let q = d / (d - 2.0);
    let lead = 2.0 - 1.0 / d;
    let e = 1.0 / d - 1.0;
    let half_value = incomplete_beta_result(0.0, 0.5, d)?;

    let j = |t: f64| -> f64 {
        if t <= 0.5 {
            integrate(
                |s: f64| d * s.powf(2.0 * d - 2.0) * (1.0 - t * s.powf(d)).powf(e),
                0.0,
                1.0,
                BETA_ABS_TOL,
                BETA_REL_TOL,
            )
            .map(|r| r.value)
            .unwrap_or(f64::NAN)
        } else {
            let upper = beta_upper_piece(0.5, t, d).map(|r| r.value).unwrap_or(f64::NAN);
            (half_value.value + upper) / t.powf(lead)
        }
    };
    let integrand = |u: f64| {
        let jv = j(u.powf(q));
        q * jv * jv
    };

    // t = 1/2 is where J switches form
    let u_half = 0.5f64.powf(1.0 / q);
    let scale = d * d;
    let left = integrate(integrand, 0.0, u_half, 0.5 * tol * scale, 0.0)?;
    let right = integrate(integrand, u_half, 1.0, 0.5 * tol * scale, 0.0)?;

    let value = (left.value + right.value) / scale;
    let inner = 4.0 * BETA_REL_TOL * value.abs();
    let abs_error_estimate = (left.abs_error_estimate + right.abs_error_estimate) / scale + inner;
    if abs_error_estimate > tol {
        return Err(Error::ToleranceNotMet {
            requested: tol,
            achieved: abs_error_estimate,
            evaluations: left.evaluations + right.evaluations,
        });
    }
    Ok(QuadratureResult {
        value,
        abs_error_estimate,
        evaluations: left.evaluations + right.evaluations,
    })
}

/// Limit of `Var(C_{n,n}) / n^{1-2/d}` with scale constant `a`.
pub fn variance_limit(d: f64, a: f64, tol: f64) -> Result<f64> {
    require_scale(a)?;
    Ok(gamma_d(d, tol)?.value * a.powf(-2.0 / d))
}

/// One row of the γ(d) table.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GammaRow {
    pub d: f64,
    pub gamma: f64,
    pub abs_error_estimate: f64,
}

pub fn gamma_table(ds: &[f64], tol: f64) -> Result<Vec<GammaRow>> {
    ds.iter()
        .map(|&d| {
            gamma_d(d, tol).map(|r| GammaRow {
                d,
                gamma: r.value,
                abs_error_estimate: r.abs_error_estimate,
            })
        })
        .collect()
}

/// Grid used by the `gamma-table` command when none is given.
pub const DEFAULT_GAMMA_GRID: [f64; 12] = [2.1, 2.25, 2.5, 2.75, 3.0, 3.5, 4.0, 4.5, 5.0, 6.0, 7.0, 8.0];
