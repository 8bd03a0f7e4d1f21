use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::distributions::{make_distribution, DistributionSpec};
use crate::error::{Error, Result};
use crate::matching::DEFAULT_DIRECT_CAP;
use crate::recursion::default_cuts;

/// Environment variable consulted for the default worker count.
pub const THREADS_ENV: &str = "STABLELAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    TypicalCost,
    TotalCostLln,
    VarianceLimit,
    Clt,
    Segments,
    EngineEquivalence,
    GammaTable,
    CouplingCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::TypicalCost => "typical-cost",
            ExperimentKind::TotalCostLln => "total-cost-lln",
            ExperimentKind::VarianceLimit => "variance-limit",
            ExperimentKind::Clt => "clt",
            ExperimentKind::Segments => "segments",
            ExperimentKind::EngineEquivalence => "engine-equivalence",
            ExperimentKind::GammaTable => "gamma-table",
            ExperimentKind::CouplingCheck => "coupling-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Direct,
    Recursion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cuts {
    pub lambda: usize,
    pub kappa: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: PathBuf,
    #[serde(default = "default_format")]
    pub format: ReportFormat,
}

fn default_format() -> ReportFormat {
    ReportFormat::Json
}

/// A validated experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n: usize,
    pub reps: usize,
    pub dist: DistributionSpec,
    pub engine: Engine,
    pub seed: u64,
    /// Segment cut points; filled from the defaults when `d > 1` and `n >= 3`.
    pub cuts: Option<Cuts>,
    pub threads: usize,
    pub output: Option<OutputSpec>,
    /// Pseudo-dimensions for the γ(d) table.
    pub d_grid: Option<Vec<f64>>,
    /// Quadrature tolerance for γ(d).
    pub tol: f64,
    pub direct_cap: usize,
}

impl ExperimentConfig {
    /// A config with defaults for everything but the experiment and the law.
    pub fn new(experiment: ExperimentKind, n: usize, reps: usize, dist: DistributionSpec) -> Self {
        ExperimentConfig {
            experiment,
            n,
            reps,
            dist,
            engine: Engine::Recursion,
            seed: 0,
            cuts: None,
            threads: default_threads(),
            output: None,
            d_grid: None,
            tol: 1e-8,
            direct_cap: DEFAULT_DIRECT_CAP,
        }
    }

    /// Fills default cuts and checks every field.
    pub fn validated(mut self) -> Result<Self> {
        let field = |name: &str, message: String| Error::Parse {
            field: Some(name.to_string()),
            message,
        };
        if self.n == 0 {
            return Err(field("n", "must be at least 1".into()));
        }
        if self.reps == 0 {
            return Err(field("reps", "must be at least 1".into()));
        }
        if self.threads == 0 {
            return Err(field("threads", "must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(field("tol", format!("must be positive, got {}", self.tol)));
        }
        let dist = make_distribution(&self.dist).map_err(|e| field("dist", e.to_string()))?;
        let uses_direct =
            self.engine == Engine::Direct || self.experiment == ExperimentKind::EngineEquivalence;
        if uses_direct && self.n > self.direct_cap && self.experiment != ExperimentKind::GammaTable {
            return Err(Error::Resource(format!(
                "n = {} exceeds the direct-engine cap of {}",
                self.n, self.direct_cap
            )));
        }
        match self.cuts {
            Some(c) => {
                if c.kappa >= self.n || c.lambda < 1 || c.lambda > self.n - c.kappa {
                    return Err(field(
                        "cuts",
                        format!(
                            "need 1 <= lambda <= n - kappa, got lambda={}, kappa={}, n={}",
                            c.lambda, c.kappa, self.n
                        ),
                    ));
                }
            }
            None => {
                if let Ok((lambda, kappa)) = default_cuts(self.n, dist.pseudo_dimension()) {
                    self.cuts = Some(Cuts { lambda, kappa });
                }
            }
        }
        if let Some(grid) = &self.d_grid {
            if let Some(bad) = grid.iter().find(|&&d| !(d > 2.0)) {
                return Err(field("d_grid", format!("γ(d) needs d > 2, got {bad}")));
            }
        }
        Ok(self)
    }
}

/// Worker count from `STABLELAB_THREADS`, else the available parallelism.
pub fn default_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&t: &usize| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: ExperimentKind,
    n: Option<usize>,
    reps: Option<usize>,
    /// shorthand for `dist = { kind = "weibull", d = ... }`
    d: Option<f64>,
    dist: Option<DistributionSpec>,
    engine: Option<Engine>,
    seed: Option<u64>,
    cuts: Option<Cuts>,
    threads: Option<usize>,
    output: Option<OutputSpec>,
    d_grid: Option<Vec<f64>>,
    tol: Option<f64>,
    direct_cap: Option<usize>,
}

/// Parses and validates a TOML experiment document.
///
/// ```toml
/// experiment = "typical-cost"
/// n = 10000
/// reps = 2000
/// seed = 7
/// dist = { kind = "weibull", d = 2.0 }
/// cuts = { lambda = 200, kappa = 10 }
/// output = { path = "typical.json", format = "json" }
/// ```
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let message = e.message().to_string();
        let location = e
            .span()
            .map(|span| {
                let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
                format!("line {line}: ")
            })
            .unwrap_or_default();
        Error::Parse {
            field: None,
            message: format!("{location}{message}"),
        }
    })?;

    let dist = match (raw.dist, raw.d) {
        (Some(_), Some(_)) => {
            return Err(Error::Parse {
                field: Some("d".into()),
                message: "give either `d` or `dist`, not both".into(),
            })
        }
        (Some(dist), None) => dist,
        (None, Some(d)) => DistributionSpec::Weibull { d, scale: 1.0 },
        (None, None) => DistributionSpec::Exponential { scale: 1.0 },
    };

    let mut cfg = ExperimentConfig::new(
        raw.experiment,
        raw.n.unwrap_or(1000),
        raw.reps.unwrap_or(100),
        dist,
    );
    if let Some(engine) = raw.engine {
        cfg.engine = engine;
    }
    if let Some(seed) = raw.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = raw.threads {
        cfg.threads = threads;
    }
    if let Some(tol) = raw.tol {
        cfg.tol = tol;
    }
    if let Some(cap) = raw.direct_cap {
        cfg.direct_cap = cap;
    }
    cfg.cuts = raw.cuts;
    cfg.output = raw.output;
    cfg.d_grid = raw.d_grid;
    cfg.validated()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_gets_defaults() {
        let cfg = parse_config("experiment = \"total-cost-lln\"\nn = 1000\nd = 3.0\n").unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::TotalCostLln);
        assert_eq!(cfg.dist, DistributionSpec::Weibull { d: 3.0, scale: 1.0 });
        assert_eq!(cfg.engine, Engine::Recursion);
        assert_eq!(cfg.reps, 100);
        let (lambda, kappa) = default_cuts(1000, 3.0).unwrap();
        assert_eq!(cfg.cuts, Some(Cuts { lambda, kappa }));
        assert!(cfg.threads >= 1);
    }

    #[test]
    fn invalid_d_names_the_field() {
        let err = parse_config("experiment = \"clt\"\nn = 100\nd = 0\n").unwrap_err();
        match err {
            Error::Parse { field, message } => {
                assert_eq!(field.as_deref(), Some("dist"));
                assert!(message.contains('d'), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cuts_override_verbatim() {
        let cfg =
            parse_config("experiment = \"segments\"\nn = 1000\nd = 4.0\ncuts = { lambda = 17, kappa = 3 }\n")
                .unwrap();
        assert_eq!(cfg.cuts, Some(Cuts { lambda: 17, kappa: 3 }));
        let err = parse_config("experiment = \"segments\"\nn = 10\nd = 4.0\n[cuts]\nlambda = 9\nkappa = 3\n");
        assert!(matches!(err, Err(Error::Parse { field: Some(f), .. }) if f == "cuts"));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_config("experiment = \"clt\"\nn = = 3\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = parse_config("experiment = \"clt\"\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let err = parse_config("experiment = \"nonsense\"\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn full_document() {
        let cfg = parse_config(
            r#"
experiment = "engine-equivalence"
n = 30
reps = 50
seed = 99
engine = "direct"
threads = 2
dist = { kind = "chi-squared", k = 4 }
output = { path = "out.csv", format = "csv" }
"#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.threads, 2);
        assert_eq!(cfg.dist, DistributionSpec::ChiSquared { k: 4.0 });
        assert_eq!(cfg.output.unwrap().format, ReportFormat::Csv);
    }

    #[test]
    fn direct_cap_enforced() {
        let err = parse_config("experiment = \"typical-cost\"\nn = 6000\nengine = \"direct\"\n");
        assert!(matches!(err, Err(Error::Resource(_))));
        assert!(parse_config(
            "experiment = \"typical-cost\"\nn = 6000\nengine = \"direct\"\ndirect_cap = 7000\n"
        )
        .is_ok());
    }

    #[test]
    fn conflicting_law_fields() {
        let err = parse_config("experiment = \"clt\"\nd = 3\ndist = { kind = \"exponential\" }\n");
        assert!(matches!(err, Err(Error::Parse { field: Some(f), .. }) if f == "d"));
        let err = parse_config("experiment = \"gamma-table\"\nd_grid = [3.0, 1.5]\n");
        assert!(matches!(err, Err(Error::Parse { field: Some(f), .. }) if f == "d_grid"));
    }
}
