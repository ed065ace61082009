//! Experiment harness around `unifilter`: configuration, baselines, seeded
//! runs with CSV traces, regret curves and the verification suites.

pub mod algorithms;
pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod stats;
pub mod verify;

pub use algorithms::{build_filter, Algorithm, FixedFilter};
pub use config::{ConfigMap, ExperimentConfig, KEYS};
pub use error::{BenchError, Result};
pub use experiment::{
    regret_curve, run_experiment, run_oracle, run_scan, simulate, Curve, CurvePoint, OracleRow, SeedSummary, Simulation,
};
pub use stats::{linear_fit, mean_and_se, LinearFit};
pub use verify::{verify, Check, Report, Suite, VerifyOptions};
