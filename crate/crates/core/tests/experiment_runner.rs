use stablelab::experiment::{Cuts, OutputSpec};
use stablelab::theory::gamma_d;
use stablelab::{
    emit_report, parse_config, run_experiment, DistributionSpec, Engine, Error, ExperimentConfig,
    ExperimentKind, ReportFormat, RunReport,
};

fn config(kind: ExperimentKind, n: usize, reps: usize, dist: DistributionSpec) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(kind, n, reps, dist);
    cfg.seed = 77;
    cfg.threads = 2;
    cfg
}

fn weibull(d: f64) -> DistributionSpec {
    DistributionSpec::Weibull { d, scale: 1.0 }
}

fn strip_time(mut r: RunReport) -> RunReport {
    r.wall_time_secs = 0.0;
    r.config.threads = 0;
    r
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    for kind in [
        ExperimentKind::TypicalCost,
        ExperimentKind::Clt,
        ExperimentKind::Segments,
    ] {
        let mut one = config(kind, 2000, 64, weibull(3.0));
        one.threads = 1;
        let mut many = one.clone();
        many.threads = 5;
        let a = strip_time(run_experiment(&one).unwrap());
        let b = strip_time(run_experiment(&many).unwrap());
        assert_eq!(a, b, "{}", kind.name());
        let again = strip_time(run_experiment(&one).unwrap());
        assert_eq!(a, again);
    }
}

#[test]
fn seeds_change_the_statistics() {
    let a = run_experiment(&config(ExperimentKind::TotalCostLln, 500, 20, weibull(3.0))).unwrap();
    let mut other = config(ExperimentKind::TotalCostLln, 500, 20, weibull(3.0));
    other.seed = 78;
    let b = run_experiment(&other).unwrap();
    assert_ne!(a.metrics[0].estimate, b.metrics[0].estimate);
    assert_ne!(a.seed_lineage, b.seed_lineage);
}

#[test]
fn typical_cost_report_has_ks_and_plot() {
    let report = run_experiment(&config(ExperimentKind::TypicalCost, 1000, 200, weibull(2.0))).unwrap();
    let ks = report.metric("ks_scaled_typical_cost").unwrap();
    assert!((0.0..=1.0).contains(&ks.estimate));
    let plot = report.plot.as_ref().unwrap();
    assert_eq!(plot.len(), 200);
    assert!(plot.windows(2).all(|w| w[0].x <= w[1].x && w[0].ecdf < w[1].ecdf));
    let last = plot.last().unwrap();
    assert_eq!(last.ecdf, 1.0);
    assert!((last.limit_cdf - (1.0 - 1.0 / (1.0 + last.x * last.x))).abs() < 1e-12);
}

#[test]
fn direct_engine_runs_typical_cost() {
    let mut cfg = config(ExperimentKind::TypicalCost, 30, 100, weibull(2.0));
    cfg.engine = Engine::Direct;
    let report = run_experiment(&cfg).unwrap();
    assert!(report.metric("ks_scaled_typical_cost").is_some());
}

#[test]
fn engine_equivalence_fields() {
    let report = run_experiment(&config(
        ExperimentKind::EngineEquivalence,
        30,
        300,
        DistributionSpec::Exponential { scale: 1.0 },
    ))
    .unwrap();
    for name in ["ks_two_sample_first_cost", "ks_two_sample_total"] {
        assert!(report.metric(name).unwrap().pass.is_some());
    }
}

#[test]
fn gamma_table_passes_quadrature_through() {
    let mut cfg = config(ExperimentKind::GammaTable, 1000, 1, weibull(3.0));
    cfg.d_grid = Some(vec![2.5, 3.0, 4.0, 8.0]);
    let report = run_experiment(&cfg).unwrap();
    let rows = report.gamma_table.unwrap();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let q = gamma_d(row.d, cfg.tol).unwrap();
        assert_eq!(row.gamma, q.value);
        assert_eq!(row.abs_error_estimate, q.abs_error_estimate);
    }
}

#[test]
fn coupling_check_keeps_order() {
    let report = run_experiment(&config(
        ExperimentKind::CouplingCheck,
        5000,
        8,
        DistributionSpec::ChiSquared { k: 6.0 },
    ))
    .unwrap();
    assert_eq!(report.metric("order_violations").unwrap().estimate, 0.0);
    assert!(report.metric("mean_total_over_n_pow").is_some());
}

#[test]
fn segment_cut_override_is_used() {
    let mut cfg = config(ExperimentKind::Segments, 1000, 20, weibull(4.0));
    cfg.cuts = Some(Cuts { lambda: 10, kappa: 5 });
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.metric("lambda_n").unwrap().estimate, 10.0);
    assert_eq!(report.metric("kappa_n").unwrap().estimate, 5.0);
}

#[test]
fn direct_engine_respects_cap() {
    let mut cfg = config(ExperimentKind::TypicalCost, 6000, 2, weibull(2.0));
    cfg.engine = Engine::Direct;
    assert!(matches!(run_experiment(&cfg), Err(Error::Resource(_))));
}

#[test]
fn invalid_config_is_a_config_error() {
    let cfg = config(ExperimentKind::Clt, 100, 1, weibull(3.0));
    assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
}

#[test]
fn config_file_round_trip_to_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("typical.json");
    let text = format!(
        "experiment = \"typical-cost\"\nn = 500\nreps = 50\nseed = 3\nthreads = 2\n\n[dist]\nkind = \"weibull\"\nd = 2.0\n\n[output]\npath = {:?}\n",
        out.display().to_string()
    );
    let cfg = parse_config(&text).unwrap();
    let spec = cfg.output.clone().unwrap();
    assert_eq!(
        spec,
        OutputSpec {
            path: out.clone(),
            format: ReportFormat::Json
        }
    );
    let report = run_experiment(&cfg).unwrap();
    let written = emit_report(&report, spec.format, &spec.path).unwrap();
    assert_eq!(written.len(), 2);
    let back: RunReport = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(back, report);
    let plot = std::fs::read_to_string(dir.path().join("typical.plot.csv")).unwrap();
    assert!(plot.starts_with("x,ecdf,limit_cdf\n"));
    assert_eq!(plot.lines().count(), 51);
}

#[test]
fn resampling_decay_shrinks_towards_the_top() {
    use stablelab::experiment::resampling_decay;
    let grid = [5, 50, 500];
    let points = resampling_decay(2000, 4.0, 50, 1, &grid, 300, 1, 2).unwrap();
    assert_eq!(points.iter().map(|p| p.remaining).collect::<Vec<_>>(), grid);
    assert!(points.iter().all(|p| p.k == 2000 - p.remaining + 1));
    assert!(points[0].mean_sq_change > points[1].mean_sq_change);
    assert!(points[1].mean_sq_change > points[2].mean_sq_change);
    assert_eq!(points, resampling_decay(2000, 4.0, 50, 1, &grid, 300, 1, 1).unwrap());
    assert!(resampling_decay(2000, 4.0, 50, 1, &[0], 10, 1, 1).is_err());
    assert!(resampling_decay(2000, 4.0, 50, 10, &[5], 10, 1, 1).is_err());
}
