use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ReportFormat};
use crate::error::Result;
use crate::theory::GammaRow;

/// Acceptance rule attached to a metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum Threshold {
    /// `|estimate / reference - 1| <= tol`
    Relative { tol: f64 },
    /// `estimate <= max`
    AtMost { max: f64 },
    /// `lo <= estimate <= hi`
    Within { lo: f64, hi: f64 },
}

impl Threshold {
    pub fn check(&self, estimate: f64, reference: Option<f64>) -> Option<bool> {
        match *self {
            Threshold::Relative { tol } => reference.map(|r| (estimate / r - 1.0).abs() <= tol),
            Threshold::AtMost { max } => Some(estimate <= max),
            Threshold::Within { lo, hi } => Some(lo <= estimate && estimate <= hi),
        }
    }

    fn describe(&self) -> String {
        match self {
            Threshold::Relative { tol } => format!("rel<={tol}"),
            Threshold::AtMost { max } => format!("<={max}"),
            Threshold::Within { lo, hi } => format!("[{lo},{hi}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub estimate: f64,
    pub reference: Option<f64>,
    pub ratio: Option<f64>,
    pub std_err: Option<f64>,
    pub threshold: Option<Threshold>,
    pub pass: Option<bool>,
}

impl Metric {
    pub fn new(name: impl Into<String>, estimate: f64) -> Self {
        Metric {
            name: name.into(),
            estimate,
            reference: None,
            ratio: None,
            std_err: None,
            threshold: None,
            pass: None,
        }
    }

    pub fn with_reference(mut self, reference: Option<f64>) -> Self {
        self.reference = reference;
        self.ratio = reference.map(|r| self.estimate / r);
        self.refresh();
        self
    }

    pub fn with_std_err(mut self, std_err: Option<f64>) -> Self {
        self.std_err = std_err;
        self
    }

    pub fn with_threshold(mut self, threshold: Threshold) -> Self {
        self.threshold = Some(threshold);
        self.refresh();
        self
    }

    fn refresh(&mut self) {
        self.pass = self
            .threshold
            .and_then(|t| t.check(self.estimate, self.reference));
    }
}

/// `(x, empirical CDF, limiting CDF)` for plotting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub x: f64,
    pub ecdf: f64,
    pub limit_cdf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub metrics: Vec<Metric>,
    pub gamma_table: Option<Vec<GammaRow>>,
    pub plot: Option<Vec<PlotPoint>>,
    pub seed_lineage: String,
    pub wall_time_secs: f64,
}

impl RunReport {
    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }

    /// False if any thresholded metric failed.
    pub fn passed(&self) -> bool {
        self.metrics.iter().all(|m| m.pass != Some(false))
    }
}

/// Header of the metrics CSV. Fixed; new columns go at the end.
pub const METRICS_CSV_HEADER: [&str; 8] = [
    "experiment",
    "metric",
    "estimate",
    "reference",
    "ratio",
    "std_err",
    "threshold",
    "pass",
];

const GAMMA_CSV_HEADER: [&str; 3] = ["d", "gamma", "abs_error_estimate"];
const PLOT_CSV_HEADER: [&str; 3] = ["x", "ecdf", "limit_cdf"];

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// JSON formatter printing every float with 17 significant digits.
struct SigDigits;

impl serde_json::ser::Formatter for SigDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }
}

/// Writes the main report body (JSON document, or the metrics / γ table as
/// CSV) to `writer`.
pub fn write_report<W: Write>(report: &RunReport, format: ReportFormat, writer: W) -> Result<()> {
    match format {
        ReportFormat::Json => {
            let mut ser = serde_json::Serializer::with_formatter(writer, SigDigits);
            report.serialize(&mut ser)?;
            let mut w = ser.into_inner();
            w.write_all(b"\n")?;
            w.flush()?;
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(writer);
            if let Some(rows) = &report.gamma_table {
                w.write_record(GAMMA_CSV_HEADER)?;
                for row in rows {
                    w.write_record([num(row.d), num(row.gamma), num(row.abs_error_estimate)])?;
                }
            } else {
                w.write_record(METRICS_CSV_HEADER)?;
                for m in &report.metrics {
                    w.write_record([
                        report.config.experiment.name().to_string(),
                        m.name.clone(),
                        num(m.estimate),
                        opt_num(m.reference),
                        opt_num(m.ratio),
                        opt_num(m.std_err),
                        m.threshold.map(|t| t.describe()).unwrap_or_default(),
                        m.pass.map(|p| p.to_string()).unwrap_or_default(),
                    ])?;
                }
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn plot_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.plot.csv"))
}

/// Writes the report to `path`, plus `<stem>.plot.csv` next to it when the
/// report carries plot data. Returns the files written.
pub fn emit_report(report: &RunReport, format: ReportFormat, path: &Path) -> Result<Vec<PathBuf>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    write_report(report, format, BufWriter::new(File::create(path)?))?;
    let mut written = vec![path.to_path_buf()];

    if let Some(points) = &report.plot {
        let plot = plot_path(path);
        let mut w = csv::Writer::from_path(&plot)?;
        w.write_record(PLOT_CSV_HEADER)?;
        for p in points {
            w.write_record([num(p.x), num(p.ecdf), num(p.limit_cdf)])?;
        }
        w.flush()?;
        written.push(plot);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DistributionSpec;
    use crate::experiment::ExperimentKind;

    fn sample_report() -> RunReport {
        let cfg = ExperimentConfig::new(
            ExperimentKind::TypicalCost,
            100,
            10,
            DistributionSpec::Weibull { d: 2.0, scale: 1.0 },
        );
        RunReport {
            config: cfg,
            metrics: vec![
                Metric::new("ks", 0.1 + 0.2).with_threshold(Threshold::AtMost { max: 0.03 }),
                Metric::new("mean", 1.0 / 3.0)
                    .with_reference(Some(std::f64::consts::FRAC_PI_2))
                    .with_std_err(Some(1e-3)),
            ],
            gamma_table: None,
            plot: Some(vec![PlotPoint {
                x: 0.5,
                ecdf: 0.25,
                limit_cdf: 0.2,
            }]),
            seed_lineage: "test".into(),
            wall_time_secs: 0.125,
        }
    }

    #[test]
    fn thresholds() {
        assert_eq!(
            Threshold::Relative { tol: 0.05 }.check(1.04, Some(1.0)),
            Some(true)
        );
        assert_eq!(
            Threshold::Relative { tol: 0.05 }.check(1.06, Some(1.0)),
            Some(false)
        );
        assert_eq!(Threshold::Relative { tol: 0.05 }.check(1.06, None), None);
        assert_eq!(
            Threshold::Within { lo: 0.85, hi: 1.15 }.check(0.5, None),
            Some(false)
        );
        let r = sample_report();
        assert!(!r.passed());
        assert_eq!(r.metric("mean").unwrap().pass, None);
    }

    #[test]
    fn json_round_trip() {
        let r = sample_report();
        let mut buf = Vec::new();
        write_report(&r, ReportFormat::Json, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("3.3333333333333331e-1"), "{text}");
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn csv_header_is_fixed() {
        let mut buf = Vec::new();
        write_report(&sample_report(), ReportFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(
            first,
            "experiment,metric,estimate,reference,ratio,std_err,threshold,pass"
        );
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn emit_writes_plot_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/typical.json");
        let files = emit_report(&sample_report(), ReportFormat::Json, &path).unwrap();
        assert_eq!(files.len(), 2);
        let plot = std::fs::read_to_string(&files[1]).unwrap();
        assert!(files[1].ends_with("typical.plot.csv"));
        assert!(plot.starts_with("x,ecdf,limit_cdf\n"));
    }
}
