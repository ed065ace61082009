//! Domain types shared by every filter: weights, observation windows and
//! the block records that carry one block's worth of data.

use std::ops::Index;

use crate::error::{FilterError, Result};
use crate::kernels;

/// A linear filter `w` of order `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterWeights(Vec<f64>);

impl FilterWeights {
    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; d])
    }

    /// `(1, 0, ..., 0)`: predicts the current noisy observation.
    pub fn identity(d: usize) -> Self {
        let mut w = vec![0.0; d];
        if d > 0 {
            w[0] = 1.0;
        }
        Self(w)
    }

    pub fn new(coefficients: Vec<f64>) -> Self {
        Self(coefficients)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        kernels::norm_sq(&self.0).sqrt()
    }

    /// `w^T Y`
    pub fn apply(&self, window: &ObservationWindow) -> Result<f64> {
        check_dim(self.len(), window.len())?;
        Ok(kernels::dot(&self.0, window.as_slice()))
    }
}

impl From<Vec<f64>> for FilterWeights {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Index<usize> for FilterWeights {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// The filter input `Y_t`, most recent observation first:
/// `values[i] = y_{t-i}` (zero-based), with zeros before the first sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationWindow(Vec<f64>);

impl ObservationWindow {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// The current observation `y_t`.
    pub fn head(&self) -> f64 {
        self.0[0]
    }
}

impl From<Vec<f64>> for ObservationWindow {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Index<usize> for ObservationWindow {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// One observation with the window it completes.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSample {
    pub y: f64,
    pub window: ObservationWindow,
}

/// The `k` samples of block `c` together with the filter that was played on
/// them. The anchor must be fixed before the block's first sample arrives;
/// the filters in this crate build records only after the fact, so that holds
/// by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockRecord {
    pub block_index: usize,
    pub samples: Vec<BlockSample>,
    pub anchor: FilterWeights,
}

impl BlockRecord {
    pub fn new(block_index: usize, samples: Vec<BlockSample>, anchor: FilterWeights) -> Self {
        Self {
            block_index,
            samples,
            anchor,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Sliding window over the most recent `d` observations.
#[derive(Debug, Clone)]
pub(crate) struct WindowBuffer {
    // most recent first, always length d
    recent: std::collections::VecDeque<f64>,
}

impl WindowBuffer {
    pub(crate) fn new(d: usize) -> Self {
        Self {
            recent: std::iter::repeat_n(0.0, d).collect(),
        }
    }

    /// Preloads observations that precede the stream, oldest first.
    pub(crate) fn with_history(d: usize, history: &[f64]) -> Self {
        let mut buf = Self::new(d);
        for &y in history {
            buf.push(y);
        }
        buf
    }

    pub(crate) fn push(&mut self, y: f64) -> ObservationWindow {
        self.recent.pop_back();
        self.recent.push_front(y);
        ObservationWindow(self.recent.iter().copied().collect())
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(FilterError::DimensionMismatch { expected, got })
    }
}
