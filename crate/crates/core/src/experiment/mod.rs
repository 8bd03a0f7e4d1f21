//! Declarative experiments: one config in, one report out.

mod config;
mod report;
mod runner;

pub use config::{
    default_threads, parse_config, Cuts, Engine, ExperimentConfig, ExperimentKind, OutputSpec, ReportFormat,
    THREADS_ENV,
};
pub use report::{emit_report, write_report, Metric, PlotPoint, RunReport, Threshold, METRICS_CSV_HEADER};
pub use runner::{resampling_decay, run_experiment, DecayPoint};
