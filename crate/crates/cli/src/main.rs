use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use stablelab::experiment::{default_threads, write_report, Cuts, THREADS_ENV};
use stablelab::{
    default_cuts, emit_report, make_distribution, parse_config, run_experiment, DistributionSpec, Engine,
    ExperimentConfig, ExperimentKind, ReportFormat, RunReport,
};

const EXIT_CONFIG: u8 = 2;
const EXIT_THRESHOLD: u8 = 3;

#[derive(Parser)]
#[command(
    name = "stablelab",
    version,
    about = "Stable matchings of K_{n,n} with random edge costs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scaled cost of a uniformly chosen matched pair against its limit law
    TypicalCost(RunArgs),
    /// Total cost over n^{1-1/d} against the law-of-large-numbers constant
    TotalCostLln(RunArgs),
    /// Var(total) over n^{1-2/d} against γ(d)
    VarianceLimit(RunArgs),
    /// Standardized totals against the standard normal
    Clt(RunArgs),
    /// Variance shares of the three cost segments
    Segments(RunArgs),
    /// Direct greedy engine against the recursion engine
    EngineEquivalence(RunArgs),
    /// Coupled law against the Weibull with the same (d, a)
    CouplingCheck(RunArgs),
    /// γ(d) on a grid of d, as CSV
    GammaTable(GammaArgs),
    /// Run the experiment described by a TOML config file
    Run(FileArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DistArg {
    Exponential,
    Weibull,
    MaxUniform,
    ChiSquared,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Direct,
    Recursion,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    /// Pseudo-dimension; chi-squared uses k = 2d degrees of freedom
    #[arg(long, default_value_t = 2.0)]
    d: f64,
    #[arg(long, value_enum, default_value = "weibull")]
    dist: DistArg,
    #[arg(long, value_enum, default_value = "recursion")]
    engine: EngineArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads [default: $STABLELAB_THREADS or all cores]
    #[arg(long)]
    threads: Option<usize>,
    /// Report file; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Lower cut λ_n of the bulk segment
    #[arg(long)]
    lambda: Option<usize>,
    /// Size κ_n of the top segment
    #[arg(long)]
    kappa: Option<usize>,
    /// Exit with status 3 if any metric misses its threshold
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct GammaArgs {
    /// Comma-separated values of d, each > 2
    #[arg(long, value_delimiter = ',')]
    d_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Args)]
struct FileArgs {
    config: PathBuf,
    /// Overrides `threads` in the file
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    check: bool,
}

/// An error that maps to exit status 2.
#[derive(Debug)]
struct ConfigProblem;

impl std::fmt::Display for ConfigProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("invalid configuration")
    }
}

impl std::error::Error for ConfigProblem {}

fn is_config_error(e: &stablelab::Error) -> bool {
    use stablelab::Error::*;
    matches!(
        e,
        Config(_) | Parse { .. } | InvalidParameter { .. } | Domain(_) | Resource(_) | Range(_)
    )
}

fn classify(e: stablelab::Error) -> anyhow::Error {
    if is_config_error(&e) {
        anyhow::Error::new(e).context(ConfigProblem)
    } else {
        e.into()
    }
}

fn dist_spec(dist: DistArg, d: f64) -> DistributionSpec {
    match dist {
        DistArg::Exponential => DistributionSpec::Exponential { scale: 1.0 },
        DistArg::Weibull => DistributionSpec::Weibull { d, scale: 1.0 },
        DistArg::MaxUniform => DistributionSpec::MaxUniform { d },
        DistArg::ChiSquared => DistributionSpec::ChiSquared { k: 2.0 * d },
    }
}

fn build_config(kind: ExperimentKind, args: &RunArgs) -> anyhow::Result<ExperimentConfig> {
    let dist = dist_spec(args.dist, args.d);
    let mut cfg = ExperimentConfig::new(kind, args.n, args.reps, dist.clone());
    cfg.engine = match args.engine {
        EngineArg::Direct => Engine::Direct,
        EngineArg::Recursion => Engine::Recursion,
    };
    cfg.seed = args.seed;
    cfg.threads = args.threads.unwrap_or_else(default_threads);
    if args.lambda.is_some() || args.kappa.is_some() {
        let d = make_distribution(&dist).map_err(classify)?.pseudo_dimension();
        let defaults = default_cuts(args.n, d).ok();
        let pick = |given: Option<usize>, fallback: Option<usize>, name: &str| {
            given
                .or(fallback)
                .with_context(|| format!("--{name} has no default here, pass it explicitly"))
        };
        cfg.cuts = Some(Cuts {
            lambda: pick(args.lambda, defaults.map(|c| c.0), "lambda").context(ConfigProblem)?,
            kappa: pick(args.kappa, defaults.map(|c| c.1), "kappa").context(ConfigProblem)?,
        });
    }
    Ok(cfg)
}

fn deliver(report: &RunReport, format: ReportFormat, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            for written in emit_report(report, format, path)? {
                info!("wrote {}", written.display());
            }
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_report(report, format, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn log_metrics(report: &RunReport) {
    for m in &report.metrics {
        let verdict = match m.pass {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "-",
        };
        match m.reference {
            Some(r) => info!("{} = {:.6} (reference {:.6}) {verdict}", m.name, m.estimate, r),
            None => info!("{} = {:.6} {verdict}", m.name, m.estimate),
        }
    }
    info!("wall time {:.2}s", report.wall_time_secs);
}

/// Returns whether the run met every threshold.
fn execute(cfg: &ExperimentConfig, format: ReportFormat, out: Option<&Path>) -> anyhow::Result<bool> {
    let report = run_experiment(cfg).map_err(classify)?;
    log_metrics(&report);
    deliver(&report, format, out)?;
    Ok(report.passed())
}

fn dispatch(command: Command) -> anyhow::Result<bool> {
    let (kind, args) = match command {
        Command::TypicalCost(a) => (ExperimentKind::TypicalCost, a),
        Command::TotalCostLln(a) => (ExperimentKind::TotalCostLln, a),
        Command::VarianceLimit(a) => (ExperimentKind::VarianceLimit, a),
        Command::Clt(a) => (ExperimentKind::Clt, a),
        Command::Segments(a) => (ExperimentKind::Segments, a),
        Command::EngineEquivalence(a) => (ExperimentKind::EngineEquivalence, a),
        Command::CouplingCheck(a) => (ExperimentKind::CouplingCheck, a),
        Command::GammaTable(g) => {
            // the law is unused; γ(d) depends on d alone
            let mut cfg = ExperimentConfig::new(
                ExperimentKind::GammaTable,
                1,
                1,
                DistributionSpec::Exponential { scale: 1.0 },
            );
            cfg.d_grid = g.d_grid;
            cfg.tol = g.tol;
            cfg.threads = g.threads.unwrap_or_else(default_threads);
            execute(&cfg, g.format.into(), g.out.as_deref())?;
            return Ok(true);
        }
        Command::Run(f) => {
            let text = std::fs::read_to_string(&f.config)
                .with_context(|| format!("cannot read {}", f.config.display()))
                .context(ConfigProblem)?;
            let mut cfg = parse_config(&text).map_err(classify)?;
            if let Some(t) = f.threads {
                cfg.threads = t;
            }
            let (format, out) = match &cfg.output {
                Some(o) => (o.format, Some(o.path.clone())),
                None => (ReportFormat::Json, None),
            };
            let passed = execute(&cfg, format, out.as_deref())?;
            return Ok(passed || !f.check);
        }
    };
    let cfg = build_config(kind, &args)?;
    let passed = execute(&cfg, args.format.into(), args.out.as_deref())?;
    Ok(passed || !args.check)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    if std::env::var_os(THREADS_ENV).is_none() {
        log::debug!("{THREADS_ENV} unset, using all available cores");
    }
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            warn!("at least one metric missed its threshold");
            ExitCode::from(EXIT_THRESHOLD)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigProblem>().is_some() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
