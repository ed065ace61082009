//! Block-partitioned online gradient descent on the block loss.
//!
//! The stream is cut into disjoint blocks of `k` steps. One filter is played
//! on a whole block; when the block completes, the filter takes a gradient
//! step of size `1 / (H c)` on that block's loss and is projected back onto
//! the `R`-ball. A trailing partial block never triggers an update.

use log::warn;

use crate::constants::ProblemConstants;
use crate::dense;
use crate::error::{FilterError, Result};
use crate::kernels;
use crate::loss::{gradient_parts, project_to_ball};
use crate::types::{BlockRecord, BlockSample, FilterWeights, WindowBuffer};

/// A causal filter consuming one noisy observation per step.
pub trait OnlineFilter {
    fn order(&self) -> usize;

    /// The filter the next [`step`](OnlineFilter::step) will predict with.
    fn filter(&self) -> &FilterWeights;

    /// Observes `y_t` and returns the prediction of `x_t`.
    fn step(&mut self, y: f64) -> f64;
}

/// How the block gradient is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientPath {
    /// `O(k d)` per block.
    #[default]
    MatrixFree,
    /// Materializes the `d x d` regularizer; `O(k d^2)` per block.
    Dense,
}

#[derive(Debug, Clone)]
pub struct GdFilter {
    consts: ProblemConstants,
    current: FilterWeights,
    block_index: usize,
    pending: Vec<BlockSample>,
    window: WindowBuffer,
    path: GradientPath,
    warned: bool,
}

impl GdFilter {
    pub fn new(consts: ProblemConstants) -> Self {
        Self::with_history(consts, &[])
    }

    /// Starts with the window prefilled by `history` (oldest first) instead of
    /// zeros.
    pub fn with_history(consts: ProblemConstants, history: &[f64]) -> Self {
        let d = consts.d();
        Self {
            current: FilterWeights::zeros(d),
            block_index: 1,
            pending: Vec::with_capacity(consts.k()),
            window: WindowBuffer::with_history(d, history),
            path: GradientPath::MatrixFree,
            warned: false,
            consts,
        }
    }

    pub fn with_gradient_path(mut self, path: GradientPath) -> Self {
        self.path = path;
        self
    }

    pub fn consts(&self) -> &ProblemConstants {
        &self.consts
    }

    /// One-based index of the block currently being played.
    pub fn block_index(&self) -> usize {
        self.block_index
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Step size of the update that closes the current block.
    pub fn step_size(&self) -> f64 {
        1.0 / (self.consts.step_constant() * self.block_index as f64)
    }

    /// Takes the gradient step for a completed block of samples, anchored at
    /// the current filter, and advances the block counter.
    pub(crate) fn learn_block(&mut self, samples: &[BlockSample]) {
        debug_assert_eq!(samples.len(), self.consts.k());
        let grad = match self.path {
            GradientPath::MatrixFree => gradient_parts(samples, &self.current, &self.current, &self.consts),
            GradientPath::Dense => {
                let record = BlockRecord::new(self.block_index, samples.to_vec(), self.current.clone());
                dense::block_loss_gradient_dense(&record, &self.current, &self.consts)
                    .expect("block validated by construction")
            }
        };
        let eta = self.step_size();
        let mut next = self.current.clone();
        kernels::axpy(-eta, &grad, next.as_mut_slice());
        self.current = project_to_ball(next, self.consts.radius());
        self.block_index += 1;
    }
}

impl OnlineFilter for GdFilter {
    fn order(&self) -> usize {
        self.consts.d()
    }

    fn filter(&self) -> &FilterWeights {
        &self.current
    }

    fn step(&mut self, y: f64) -> f64 {
        if y.abs() > self.consts.observation_bound() && !self.warned {
            warn!(
                "observation {y} exceeds the bound {}; continuing",
                self.consts.observation_bound()
            );
            self.warned = true;
        }
        let window = self.window.push(y);
        let prediction = kernels::dot(self.current.as_slice(), window.as_slice());
        self.pending.push(BlockSample { y, window });
        if self.pending.len() == self.consts.k() {
            let samples = std::mem::take(&mut self.pending);
            self.learn_block(&samples);
            self.pending = samples;
            self.pending.clear();
        }
        prediction
    }
}

/// Predictions of a whole-horizon run plus the filter played on each block
/// (the trailing partial block included).
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub predictions: Vec<f64>,
    pub block_filters: Vec<FilterWeights>,
}

/// Drives any online filter across `observations`, recording the filter in
/// force at the start of every `k`-step block.
pub fn drive<F: OnlineFilter>(filter: &mut F, k: usize, observations: &[f64]) -> Result<RunOutput> {
    if observations.is_empty() {
        return Err(FilterError::EmptyInput);
    }
    let mut predictions = Vec::with_capacity(observations.len());
    let mut block_filters = Vec::with_capacity(observations.len().div_ceil(k));
    for (t, &y) in observations.iter().enumerate() {
        if t % k == 0 {
            block_filters.push(filter.filter().clone());
        }
        predictions.push(filter.step(y));
    }
    Ok(RunOutput {
        predictions,
        block_filters,
    })
}

pub fn gd_run(consts: &ProblemConstants, observations: &[f64]) -> Result<RunOutput> {
    let k = consts.k();
    drive(&mut GdFilter::new(consts.clone()), k, observations)
}

/// [`gd_run`] with the window prefilled by observations that precede the
/// stream.
pub fn gd_run_with_history(consts: &ProblemConstants, history: &[f64], observations: &[f64]) -> Result<RunOutput> {
    let k = consts.k();
    drive(&mut GdFilter::with_history(consts.clone(), history), k, observations)
}

#[cfg(test)]
impl GdFilter {
    pub(crate) fn current_mut_for_test(&mut self, w: FilterWeights) {
        self.current = w;
    }
}
