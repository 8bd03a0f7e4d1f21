//! `O(n)` sampler for the ordered matched costs of the stable matching.
//!
//! With i.i.d. Exp(1) edge costs, the greedy algorithm and memorylessness
//! give the `k`-th cheapest matched cost as `Y_k = Y_{k-1} + X_k`, where
//! `X_k` is the minimum of the `(n-k+1)^2` still-available edges, i.e.
//! `X_k ~ Exp((n-k+1)^2)`. Any other continuous law is obtained by pushing
//! every `Y_k` through the quantile coupling `y -> F^{-1}(1 - e^{-y})`,
//! which is increasing and therefore leaves the matching itself unchanged.

use rand::Rng;
use rand_distr::{Distribution as _, Exp1};

use crate::distributions::Distribution;
use crate::error::{Error, Result};

/// Which costs `values` holds.
#[derive(Debug, Clone)]
pub enum View {
    /// The exponential-base costs themselves.
    ExpBase,
    /// `scale * Y_k^{1/shape}`.
    Weibull { shape: f64, scale: f64 },
    /// `F^{-1}(1 - e^{-Y_k})` for a general law.
    Coupled(Distribution),
}

#[derive(Debug, Clone)]
pub struct CostSequence {
    base: Vec<f64>,
    increments: Vec<f64>,
    view: View,
    values: Vec<f64>,
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            carry += (sum - t) + x;
        } else {
            carry += (x - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

impl CostSequence {
    /// Exponential-base sequence from its increments `X_1..X_n`.
    pub fn from_increments(increments: Vec<f64>) -> Self {
        let mut base = Vec::with_capacity(increments.len());
        let mut acc = 0.0;
        for &x in &increments {
            acc += x;
            base.push(acc);
        }
        CostSequence {
            values: base.clone(),
            base,
            increments,
            view: View::ExpBase,
        }
    }

    /// Exponential-base sequence from already sorted costs (e.g. the matched
    /// costs of an explicit exponential instance).
    pub fn from_sorted_costs(costs: Vec<f64>) -> Self {
        let mut prev = 0.0;
        let increments = costs
            .iter()
            .map(|&c| {
                let x = c - prev;
                prev = c;
                x
            })
            .collect();
        CostSequence {
            values: costs.clone(),
            base: costs,
            increments,
            view: View::ExpBase,
        }
    }

    pub fn n(&self) -> usize {
        self.base.len()
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn view(&self) -> &View {
        &self.view
    }

    pub fn is_exp_base(&self) -> bool {
        matches!(self.view, View::ExpBase)
    }
}

/// Samples `Y_1 < ... < Y_n` for exponential edge costs.
pub fn sample_exp_sequence<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CostSequence> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    let increments = (1..=n)
        .map(|k| {
            let e: f64 = Exp1.sample(rng);
            let remaining = (n - k + 1) as f64;
            e / (remaining * remaining)
        })
        .collect();
    Ok(CostSequence::from_increments(increments))
}

/// Re-expresses an exponential-base sequence under `dist`.
pub fn transform_sequence(seq: &CostSequence, dist: &Distribution) -> Result<CostSequence> {
    if !seq.is_exp_base() {
        return Err(Error::View);
    }
    let (view, values) = match dist.weibull_params() {
        Some((shape, scale)) => {
            let values = if shape == 1.0 && scale == 1.0 {
                seq.base.clone()
            } else {
                let inv = 1.0 / shape;
                seq.base.iter().map(|y| scale * y.powf(inv)).collect()
            };
            (View::Weibull { shape, scale }, values)
        }
        None => (
            View::Coupled(dist.clone()),
            seq.base.iter().map(|&y| dist.quantile_couple(y)).collect(),
        ),
    };
    Ok(CostSequence {
        base: seq.base.clone(),
        increments: seq.increments.clone(),
        view,
        values,
    })
}

/// Total matching cost, compensated summation.
pub fn total_cost(seq: &CostSequence) -> f64 {
    compensated_sum(seq.values.iter().copied())
}

/// The cost of a uniformly chosen matched edge.
pub fn typical_cost<R: Rng + ?Sized>(seq: &CostSequence, rng: &mut R) -> f64 {
    seq.values[rng.random_range(0..seq.n())]
}

/// Replaces `X_k` (1-based) by a fresh draw from `Exp((n-k+1)^2)`; entries
/// below `k` are unchanged and those from `k` on shift by `X'_k - X_k`.
pub fn resample_coordinate<R: Rng + ?Sized>(
    seq: &CostSequence,
    k: usize,
    rng: &mut R,
) -> Result<CostSequence> {
    if !seq.is_exp_base() {
        return Err(Error::View);
    }
    let n = seq.n();
    if k == 0 || k > n {
        return Err(Error::Index { index: k, len: n });
    }
    let remaining = (n - k + 1) as f64;
    let e: f64 = Exp1.sample(rng);
    let fresh = e / (remaining * remaining);

    let mut increments = seq.increments.clone();
    increments[k - 1] = fresh;
    let mut base = seq.base.clone();
    let below = if k >= 2 { base[k - 2] } else { 0.0 };
    let mut acc = below;
    for j in (k - 1)..n {
        acc += increments[j];
        base[j] = acc;
    }
    Ok(CostSequence {
        values: base.clone(),
        base,
        increments,
        view: View::ExpBase,
    })
}

/// Costs of the cheapest (`k < lambda_n`), bulk (`lambda_n <= k <= m_n`)
/// and most expensive (`k > m_n`) matched edges, `m_n = n - kappa_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentSplit {
    pub lambda_n: usize,
    pub kappa_n: usize,
    pub m_n: usize,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl SegmentSplit {
    pub fn total(&self) -> f64 {
        self.w1 + self.w2 + self.w3
    }
}

fn check_cuts(n: usize, lambda_n: usize, kappa_n: usize) -> Result<usize> {
    if kappa_n >= n || lambda_n < 1 || lambda_n > n - kappa_n {
        return Err(Error::Range(format!(
            "cuts need 1 <= lambda_n <= n - kappa_n; got n={n}, lambda_n={lambda_n}, kappa_n={kappa_n}"
        )));
    }
    Ok(n - kappa_n)
}

pub fn segment_costs(seq: &CostSequence, lambda_n: usize, kappa_n: usize) -> Result<SegmentSplit> {
    let m_n = check_cuts(seq.n(), lambda_n, kappa_n)?;
    let v = &seq.values;
    Ok(SegmentSplit {
        lambda_n,
        kappa_n,
        m_n,
        w1: compensated_sum(v[..lambda_n - 1].iter().copied()),
        w2: compensated_sum(v[lambda_n - 1..m_n].iter().copied()),
        w3: compensated_sum(v[m_n..].iter().copied()),
    })
}

/// Bulk cost `Σ_{k=lambda_n}^{m_n} values[k]` alone.
pub fn bulk_cost(seq: &CostSequence, lambda_n: usize, kappa_n: usize) -> Result<f64> {
    let m_n = check_cuts(seq.n(), lambda_n, kappa_n)?;
    Ok(compensated_sum(seq.values[lambda_n - 1..m_n].iter().copied()))
}

/// `lambda_n = ceil(n^{1/2 + alpha})` with `alpha = 1/(4(d+1))`, and
/// `kappa_n = ceil((ln n)^4)` capped at `n - lambda_n`.
pub fn default_cuts(n: usize, d: f64) -> Result<(usize, usize)> {
    default_cuts_with_log_power(n, d, 4)
}

/// As [`default_cuts`] with `kappa_n = ceil((ln n)^power)`.
pub fn default_cuts_with_log_power(n: usize, d: f64, power: i32) -> Result<(usize, usize)> {
    if n < 3 {
        return Err(Error::Domain(format!("default cuts need n >= 3, got {n}")));
    }
    if !(d > 1.0) {
        return Err(Error::Domain(format!("default cuts need d > 1, got {d}")));
    }
    let alpha = 1.0 / (4.0 * (d + 1.0));
    let nf = n as f64;
    let lambda_n = (nf.powf(0.5 + alpha).ceil() as usize).clamp(1, n);
    let kappa_n = (nf.ln().powi(power).ceil() as usize).min(n - lambda_n);
    Ok((lambda_n, kappa_n))
}
