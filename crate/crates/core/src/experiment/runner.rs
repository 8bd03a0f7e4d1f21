use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use super::config::{Engine, ExperimentConfig, ExperimentKind};
use super::report::{Metric, PlotPoint, RunReport, Threshold};
use crate::distributions::{make_distribution, Distribution};
use crate::error::{Error, Result};
use crate::matching::{generate_instance_capped, greedy_stable_matching, sorted_matched_costs};
use crate::recursion::{
    bulk_cost, resample_coordinate, sample_exp_sequence, segment_costs, total_cost, transform_sequence,
    CostSequence,
};
use crate::rng::{self, family, StreamRng};
use crate::stats::{ks_statistic, ks_two_sample, normal_cdf, standardize, EcdfSample, SummaryStats};
use crate::theory;

// Acceptance thresholds reported with each metric.
const TYPICAL_KS_MAX: f64 = 0.03;
const TYPICAL_MEAN_TOL: f64 = 0.05;
const LLN_TOL_WEIBULL: f64 = 0.03;
const LLN_TOL_COUPLED: f64 = 0.06;
const VARIANCE_TOL: f64 = 0.15;
const CLT_KS_MAX: f64 = 0.05;
const BULK_SHARE: (f64, f64) = (0.85, 1.15);
const ENGINE_KS_MAX: f64 = 0.035;

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))
}

/// Runs `f` for every replication on the pool; results come back in
/// replication order whatever the scheduling.
fn replicate<T, F>(pool: &rayon::ThreadPool, reps: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    pool.install(|| (0..reps as u64).into_par_iter().map(&f).collect())
}

fn summary(values: &[f64]) -> Result<SummaryStats> {
    SummaryStats::from_slice(values)
}

/// Matched costs of one replication, ascending, under `dist`, and the
/// generator positioned after the instance draw.
fn sample_costs(
    cfg: &ExperimentConfig,
    dist: &Distribution,
    engine: Engine,
    rep: u64,
) -> Result<(CostSequence, StreamRng)> {
    match engine {
        Engine::Recursion => {
            let mut rng = rng::stream(cfg.seed, family::RECURSION, rep);
            let base = sample_exp_sequence(cfg.n, &mut rng)?;
            Ok((transform_sequence(&base, dist)?, rng))
        }
        Engine::Direct => {
            let mut rng = rng::stream(cfg.seed, family::DIRECT, rep);
            let m = generate_instance_capped(cfg.n, dist, &mut rng, cfg.direct_cap)?;
            Ok((sorted_matched_costs(&greedy_stable_matching(&m)), rng))
        }
    }
}

fn totals(cfg: &ExperimentConfig, dist: &Distribution, pool: &rayon::ThreadPool) -> Result<Vec<f64>> {
    replicate(pool, cfg.reps, |rep| {
        sample_costs(cfg, dist, cfg.engine, rep).map(|(seq, _)| total_cost(&seq))
    })
}

fn require_reps(cfg: &ExperimentConfig, min: usize) -> Result<()> {
    if cfg.reps < min {
        return Err(Error::Config(format!(
            "{} needs at least {min} replications, got {}",
            cfg.experiment.name(),
            cfg.reps
        )));
    }
    Ok(())
}

fn typical_cost(
    cfg: &ExperimentConfig,
    dist: &Distribution,
    pool: &rayon::ThreadPool,
) -> Result<(Vec<Metric>, Vec<PlotPoint>)> {
    let (d, a) = (dist.pseudo_dimension(), dist.scale_constant());
    let scale = (cfg.n as f64).powf(1.0 / d);
    let samples = replicate(pool, cfg.reps, |rep| {
        let (seq, mut rng) = sample_costs(cfg, dist, cfg.engine, rep)?;
        Ok(scale * seq.values()[rng.random_range(0..seq.n())])
    })?;
    let limit = |x: f64| theory::limit_cdf_typical_scaled(d, a, x).unwrap_or(f64::NAN);
    let ecdf = EcdfSample::new(samples)?;
    let ks = ks_statistic(&ecdf, limit)?;
    let stats = ecdf.summary();

    let mut metrics =
        vec![Metric::new("ks_scaled_typical_cost", ks)
            .with_threshold(Threshold::AtMost { max: TYPICAL_KS_MAX })];
    metrics.push(
        Metric::new("mean_scaled_typical_cost", stats.mean)
            .with_reference(theory::moment_limit(1.0, d, a).ok())
            .with_std_err(stats.std_err())
            .with_threshold(Threshold::Relative {
                tol: TYPICAL_MEAN_TOL,
            }),
    );

    let count = ecdf.count() as f64;
    let plot = ecdf
        .values()
        .iter()
        .enumerate()
        .map(|(i, &x)| PlotPoint {
            x,
            ecdf: (i + 1) as f64 / count,
            limit_cdf: limit(x),
        })
        .collect();
    Ok((metrics, plot))
}

fn total_cost_lln(
    cfg: &ExperimentConfig,
    dist: &Distribution,
    pool: &rayon::ThreadPool,
) -> Result<Vec<Metric>> {
    let (d, a) = (dist.pseudo_dimension(), dist.scale_constant());
    let norm = (cfg.n as f64).powf(1.0 - 1.0 / d);
    let scaled: Vec<f64> = totals(cfg, dist, pool)?.into_iter().map(|c| c / norm).collect();
    let stats = summary(&scaled)?;
    let tol = if dist.weibull_params().is_some() {
        LLN_TOL_WEIBULL
    } else {
        LLN_TOL_COUPLED
    };
    Ok(vec![Metric::new("mean_total_over_n_pow", stats.mean)
        .with_reference(theory::lln_constant(d, a).ok())
        .with_std_err(stats.std_err())
        .with_threshold(Threshold::Relative { tol })])
}

fn variance_and_clt(
    cfg: &ExperimentConfig,
    dist: &Distribution,
    pool: &rayon::ThreadPool,
) -> Result<Vec<Metric>> {
    require_reps(cfg, 2)?;
    let (d, a) = (dist.pseudo_dimension(), dist.scale_constant());
    let totals = totals(cfg, dist, pool)?;
    let stats = summary(&totals)?;
    let var = stats.variance().expect("at least two replications");
    let norm = (cfg.n as f64).powf(1.0 - 2.0 / d);
    let reference = if d > 2.0 {
        Some(theory::variance_limit(d, a, cfg.tol)?)
    } else {
        None
    };
    let z = standardize(&EcdfSample::new(totals)?)?;
    let ks = ks_statistic(&z, normal_cdf)?;
    Ok(vec![
        Metric::new("var_total_over_n_pow", var / norm)
            .with_reference(reference)
            // normal-theory standard error of a sample variance
            .with_std_err(Some(var / norm * (2.0 / (cfg.reps as f64 - 1.0)).sqrt()))
            .with_threshold(Threshold::Relative { tol: VARIANCE_TOL }),
        Metric::new("ks_standardized_total", ks).with_threshold(Threshold::AtMost { max: CLT_KS_MAX }),
        Metric::new("mean_total", stats.mean).with_std_err(stats.std_err()),
    ])
}

fn segments(cfg: &ExperimentConfig, dist: &Distribution, pool: &rayon::ThreadPool) -> Result<Vec<Metric>> {
    require_reps(cfg, 2)?;
    let cuts = cfg.cuts.ok_or_else(|| {
        Error::Config(
            "segments needs cut points (d > 1 and n >= 3 for defaults, or an explicit `cuts`)".into(),
        )
    })?;
    let splits = replicate(pool, cfg.reps, |rep| {
        let (seq, _) = sample_costs(cfg, dist, cfg.engine, rep)?;
        segment_costs(&seq, cuts.lambda, cuts.kappa)
    })?;
    let column = |f: fn(&crate::recursion::SegmentSplit) -> f64| -> Result<f64> {
        let v: Vec<f64> = splits.iter().map(f).collect();
        Ok(summary(&v)?.variance().expect("at least two replications"))
    };
    let var_total = column(|s| s.total())?;
    let (v1, v2, v3) = (column(|s| s.w1)?, column(|s| s.w2)?, column(|s| s.w3)?);
    let mut metrics = vec![
        Metric::new("var_w2_over_var_total", v2 / var_total).with_threshold(Threshold::Within {
            lo: BULK_SHARE.0,
            hi: BULK_SHARE.1,
        }),
        Metric::new("var_w1_over_var_total", v1 / var_total),
        Metric::new("var_w3_over_var_total", v3 / var_total),
        Metric::new("lambda_n", cuts.lambda as f64),
        Metric::new("kappa_n", cuts.kappa as f64),
    ];
    let d = dist.pseudo_dimension();
    if d > 2.0 && dist.weibull_params().is_some() {
        // deterministic proxy for Var(w2)
        let proxy = theory::expected_vnk_sum(cfg.n, d, cuts.lambda, cuts.kappa)?
            * dist.scale_constant().powf(-2.0 / d);
        metrics.push(Metric::new("sum_expected_vnk_over_var_total", proxy / var_total));
    }
    Ok(metrics)
}

fn engine_equivalence(
    cfg: &ExperimentConfig,
    dist: &Distribution,
    pool: &rayon::ThreadPool,
) -> Result<Vec<Metric>> {
    let run = |engine: Engine| -> Result<(Vec<f64>, Vec<f64>)> {
        let pairs = replicate(pool, cfg.reps, |rep| {
            let (seq, _) = sample_costs(cfg, dist, engine, rep)?;
            Ok((seq.values()[0], total_cost(&seq)))
        })?;
        Ok(pairs.into_iter().unzip())
    };
    let (first_direct, total_direct) = run(Engine::Direct)?;
    let (first_rec, total_rec) = run(Engine::Recursion)?;
    let ks_first = ks_two_sample(&EcdfSample::new(first_direct)?, &EcdfSample::new(first_rec)?);
    let ks_total = ks_two_sample(&EcdfSample::new(total_direct)?, &EcdfSample::new(total_rec)?);
    Ok(vec![
        Metric::new("ks_two_sample_first_cost", ks_first)
            .with_threshold(Threshold::AtMost { max: ENGINE_KS_MAX }),
        Metric::new("ks_two_sample_total", ks_total).with_threshold(Threshold::AtMost { max: ENGINE_KS_MAX }),
    ])
}

/// Compares the coupled law with the Weibull sharing its `(d, a)` on the
/// same exponential base, replication by replication.
fn coupling_check(
    cfg: &ExperimentConfig,
    dist: &Distribution,
    pool: &rayon::ThreadPool,
) -> Result<Vec<Metric>> {
    let (d, a) = (dist.pseudo_dimension(), dist.scale_constant());
    let reference_law = Distribution::weibull_scaled(d, a.powf(-1.0 / d))?;
    let norm = (cfg.n as f64).powf(1.0 - 1.0 / d);
    let rows = replicate(pool, cfg.reps, |rep| {
        let mut rng = rng::stream(cfg.seed, family::RECURSION, rep);
        let base = sample_exp_sequence(cfg.n, &mut rng)?;
        let coupled = transform_sequence(&base, dist)?;
        let weibull = transform_sequence(&base, &reference_law)?;
        let order_breaks = coupled.values().windows(2).filter(|w| w[0] >= w[1]).count();
        let (c, w) = (total_cost(&coupled), total_cost(&weibull));
        Ok((c / norm, (c - w).abs() / c, order_breaks as f64))
    })?;
    let scaled: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let gaps: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let breaks: f64 = rows.iter().map(|r| r.2).sum();
    let stats = summary(&scaled)?;
    let mut metrics = vec![
        Metric::new("order_violations", breaks).with_threshold(Threshold::AtMost { max: 0.0 }),
        Metric::new("mean_relative_gap_to_weibull", summary(&gaps)?.mean),
    ];
    if d > 1.0 {
        metrics.push(
            Metric::new("mean_total_over_n_pow", stats.mean)
                .with_reference(theory::lln_constant(d, a).ok())
                .with_std_err(stats.std_err())
                .with_threshold(Threshold::Relative { tol: LLN_TOL_COUPLED }),
        );
    }
    Ok(metrics)
}

/// Executes `cfg` and returns its report. Replication `r` draws only from
/// the streams keyed by `(seed, r)`, and per-replication results are merged
/// in replication order, so the statistics do not depend on `threads`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    let cfg = cfg.clone().validated().map_err(|e| match e {
        Error::Parse { field, message } => Error::Config(match field {
            Some(f) => format!("{f}: {message}"),
            None => message,
        }),
        other => other,
    })?;
    let started = Instant::now();
    let dist = make_distribution(&cfg.dist)?;
    let pool = pool(cfg.threads)?;
    log::info!(
        "running {} with n={} reps={} dist={} on {} threads",
        cfg.experiment.name(),
        cfg.n,
        cfg.reps,
        cfg.dist,
        cfg.threads
    );

    let mut plot = None;
    let mut gamma_table = None;
    let metrics = match cfg.experiment {
        ExperimentKind::TypicalCost => {
            let (metrics, points) = typical_cost(&cfg, &dist, &pool)?;
            plot = Some(points);
            metrics
        }
        ExperimentKind::TotalCostLln => total_cost_lln(&cfg, &dist, &pool)?,
        ExperimentKind::VarianceLimit | ExperimentKind::Clt => variance_and_clt(&cfg, &dist, &pool)?,
        ExperimentKind::Segments => segments(&cfg, &dist, &pool)?,
        ExperimentKind::EngineEquivalence => engine_equivalence(&cfg, &dist, &pool)?,
        ExperimentKind::GammaTable => {
            let grid = cfg
                .d_grid
                .clone()
                .unwrap_or_else(|| theory::DEFAULT_GAMMA_GRID.to_vec());
            let rows = pool.install(|| {
                grid.par_iter()
                    .map(|&d| theory::gamma_table(&[d], cfg.tol).map(|mut r| r.remove(0)))
                    .collect::<Result<Vec<_>>>()
            })?;
            gamma_table = Some(rows);
            Vec::new()
        }
        ExperimentKind::CouplingCheck => coupling_check(&cfg, &dist, &pool)?,
    };

    Ok(RunReport {
        seed_lineage: rng::lineage(cfg.seed),
        config: cfg,
        metrics,
        gamma_table,
        plot,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

/// Mean squared change of the bulk cost when one increment is redrawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayPoint {
    /// `n - k + 1`
    pub remaining: usize,
    pub k: usize,
    pub mean_sq_change: f64,
}

/// For every `remaining = n - k + 1` in `grid`, estimates
/// `E[(W_2 - W_2^k)^2]` for Weibull(d) costs, where `W_2` is the bulk cost
/// between the cuts and `W_2^k` the same after resampling `X_k`.
#[allow(clippy::too_many_arguments)]
pub fn resampling_decay(
    n: usize,
    d: f64,
    lambda_n: usize,
    kappa_n: usize,
    grid: &[usize],
    reps: usize,
    seed: u64,
    threads: usize,
) -> Result<Vec<DecayPoint>> {
    let dist = Distribution::weibull(d)?;
    let pool = pool(threads)?;
    grid.iter()
        .map(|&remaining| {
            if remaining == 0 || remaining > n {
                return Err(Error::Range(format!("n - k + 1 = {remaining} outside 1..={n}")));
            }
            let k = n - remaining + 1;
            if k > n - kappa_n {
                return Err(Error::Range(format!("k = {k} beyond m_n = {}", n - kappa_n)));
            }
            let sq = replicate(&pool, reps, |rep| {
                let stream = rep * (n as u64 + 1) + remaining as u64;
                let mut rng = rng::stream(seed, family::RESAMPLE, stream);
                let base = sample_exp_sequence(n, &mut rng)?;
                let coupled = resample_coordinate(&base, k, &mut rng)?;
                let w = bulk_cost(&transform_sequence(&base, &dist)?, lambda_n, kappa_n)?;
                let wk = bulk_cost(&transform_sequence(&coupled, &dist)?, lambda_n, kappa_n)?;
                Ok((w - wk) * (w - wk))
            })?;
            Ok(DecayPoint {
                remaining,
                k,
                mean_sq_change: summary(&sq)?.mean,
            })
        })
        .collect()
}
