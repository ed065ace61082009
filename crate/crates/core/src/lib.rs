//! Online estimation of a bounded signal from noisy observations with
//! fixed-order linear filters.
//!
//! * [`gd::GdFilter`] runs block-partitioned gradient descent on a strongly
//!   convex block loss built from noisy data only, with `O(d)` work per step.
//! * [`adaptive::ExpertPool`] mixes one gradient-descent expert per block with
//!   exponential weights, so it keeps low regret on every interval.
//! * [`oracle`] computes the best ball-constrained filter in hindsight on any
//!   interval, the comparator every regret number is measured against.
//! * [`signal`] generates seeded signals and bounded noise of known variance.

pub mod adaptive;
pub mod constants;
pub mod dense;
pub mod error;
pub mod gd;
pub mod kernels;
pub mod loss;
pub mod oracle;
pub mod signal;
pub mod types;

pub use adaptive::{adaptive_run, adaptive_run_traced, BlockLosses, Expert, ExpertPool};
pub use constants::{gradient_bound, ProblemConstants};
pub use error::{FilterError, Result};
pub use gd::{drive, gd_run, gd_run_with_history, GdFilter, GradientPath, OnlineFilter, RunOutput};
pub use loss::{block_loss, block_loss_gradient, project_to_ball, surrogate_gradient, surrogate_loss, true_loss};
pub use oracle::{
    adaptive_regret_scan, best_fixed_filter, covariance_check, interval_regret, IntervalSummary, LossPrefix,
    OracleSolution, PrefixSummaries, ScanResult,
};
pub use signal::{build_windows, NoiseKind, NoiseSpec, Realization, SignalKind, SignalSpec};
pub use types::{BlockRecord, BlockSample, FilterWeights, ObservationWindow};
