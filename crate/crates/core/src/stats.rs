//! Streaming summaries and Kolmogorov–Smirnov distances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::erfc;

/// Welford accumulator: count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for SummaryStats {
    fn default() -> Self {
        SummaryStats {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl SummaryStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let mut s = Self::new();
        for &x in values {
            s.push(x)?;
        }
        Ok(s)
    }

    /// Single-pass update with one observation.
    pub fn push(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::NonFinite(x));
        }
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
        Ok(())
    }

    /// Combines two accumulators as if their inputs had been concatenated.
    pub fn merge(&self, other: &SummaryStats) -> SummaryStats {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let (na, nb, n) = (self.count as f64, other.count as f64, count as f64);
        let delta = other.mean - self.mean;
        SummaryStats {
            count,
            mean: self.mean + delta * nb / n,
            m2: self.m2 + other.m2 + delta * delta * na * nb / n,
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        }
    }

    /// Sample variance; `None` below two observations.
    pub fn variance(&self) -> Option<f64> {
        (self.count >= 2).then(|| self.m2 / (self.count - 1) as f64)
    }

    pub fn std_dev(&self) -> Option<f64> {
        self.variance().map(f64::sqrt)
    }

    /// Standard error of the mean.
    pub fn std_err(&self) -> Option<f64> {
        self.std_dev().map(|s| s / (self.count as f64).sqrt())
    }
}

/// A sorted sample, the input of every KS computation.
#[derive(Debug, Clone, PartialEq)]
pub struct EcdfSample {
    values: Vec<f64>,
}

impl EcdfSample {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        values.sort_by(f64::total_cmp);
        Ok(EcdfSample { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }

    /// Fraction of the sample `<= x`.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.values.len() as f64
    }

    pub fn summary(&self) -> SummaryStats {
        SummaryStats::from_slice(&self.values).expect("finite by construction")
    }
}

/// One-sample KS distance `sup |F_n - F|`, evaluated at the order
/// statistics from both sides of each jump.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &EcdfSample, cdf: F) -> Result<f64> {
    let n = sample.count();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let nf = n as f64;
    let d = sample
        .values
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let above = (i + 1) as f64 / nf - f;
            let below = f - i as f64 / nf;
            above.abs().max(below.abs())
        })
        .fold(0.0, f64::max);
    Ok(d)
}

/// Two-sample KS distance on the merged sorted grid.
pub fn ks_two_sample(a: &EcdfSample, b: &EcdfSample) -> f64 {
    let (xs, ys) = (a.values(), b.values());
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// `(x - mean) / sd` with the sample mean and sample standard deviation.
pub fn standardize(sample: &EcdfSample) -> Result<EcdfSample> {
    let s = sample.summary();
    let sd = match s.std_dev() {
        Some(sd) if sd > 0.0 => sd,
        Some(_) => return Err(Error::DegenerateSample("zero variance".into())),
        None => return Err(Error::DegenerateSample("fewer than two values".into())),
    };
    EcdfSample::new(sample.values.iter().map(|x| (x - s.mean) / sd).collect())
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}
