//! Stable matchings of the complete bipartite graph `K_{n,n}` with i.i.d.
//! random edge costs.
//!
//! The crate has two ways of producing the matched costs of the unique stable
//! matching:
//!
//! * [`matching`] builds an explicit cost matrix and runs the greedy
//!   algorithm (always add the globally cheapest edge whose endpoints are
//!   both free). It is the ground truth, quadratic in memory.
//! * [`recursion`] samples the ordered matched costs directly. With
//!   exponential edge costs the `k`-th cheapest matched edge satisfies
//!   `Y_k = Y_{k-1} + X_k` with `X_k ~ Exp((n-k+1)^2)`, and any other
//!   continuous law is reached through the order-preserving quantile
//!   coupling. This is `O(n)` per replication.
//!
//! [`theory`] holds the limiting constants the simulations are compared
//! against, [`stats`] the accumulators and goodness-of-fit statistics, and
//! [`experiment`] the declarative runner used by the `stablelab` binary.

// `!(x > 0.0)` is the NaN-rejecting form of `x <= 0.0`
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod error;
pub mod experiment;
pub mod matching;
pub mod quadrature;
pub mod recursion;
pub mod rng;
pub mod special;
pub mod stats;
pub mod theory;

pub use distributions::{make_distribution, DistKind, Distribution, DistributionSpec};
pub use error::{Error, Result};
pub use experiment::{
    emit_report, parse_config, run_experiment, Engine, ExperimentConfig, ExperimentKind, ReportFormat,
    RunReport,
};
pub use matching::{
    generate_instance, greedy_stable_matching, sorted_matched_costs, verify_stability, CostMatrix, Matching,
};
pub use quadrature::QuadratureResult;
pub use recursion::{
    default_cuts, resample_coordinate, sample_exp_sequence, segment_costs, total_cost, transform_sequence,
    typical_cost, CostSequence, SegmentSplit, View,
};
pub use stats::{EcdfSample, SummaryStats};
