//! The algorithms a run can use: the two learners plus fixed-filter baselines
//! that serve as controls for regret measurement.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use unifilter::{ExpertPool, FilterWeights, GdFilter, ObservationWindow, OnlineFilter, ProblemConstants};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Gd,
    Adaptive,
    /// Plays `w = 0` forever.
    Zero,
    /// Plays `w = e_1` forever, i.e. predicts `y_t`.
    Identity,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Gd, Algorithm::Adaptive, Algorithm::Zero, Algorithm::Identity];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gd => "gd",
            Algorithm::Adaptive => "adaptive",
            Algorithm::Zero => "zero",
            Algorithm::Identity => "identity",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}` (expected gd, adaptive, zero or identity)"))
    }
}

/// A filter that never learns.
#[derive(Debug, Clone)]
pub struct FixedFilter {
    weights: FilterWeights,
    window: VecDeque<f64>,
}

impl FixedFilter {
    pub fn new(weights: FilterWeights) -> Self {
        let d = weights.len();
        Self {
            weights,
            window: VecDeque::from(vec![0.0; d]),
        }
    }

    pub fn zero(d: usize) -> Self {
        Self::new(FilterWeights::zeros(d))
    }

    pub fn identity(d: usize) -> Self {
        Self::new(FilterWeights::identity(d))
    }
}

impl OnlineFilter for FixedFilter {
    fn order(&self) -> usize {
        self.weights.len()
    }

    fn filter(&self) -> &FilterWeights {
        &self.weights
    }

    fn step(&mut self, y: f64) -> f64 {
        self.window.pop_back();
        self.window.push_front(y);
        let window = ObservationWindow::new(self.window.iter().copied().collect());
        self.weights.apply(&window).expect("window matches filter order")
    }
}

pub fn build_filter(algorithm: Algorithm, consts: &ProblemConstants) -> Box<dyn OnlineFilter + Send> {
    match algorithm {
        Algorithm::Gd => Box::new(GdFilter::new(consts.clone())),
        Algorithm::Adaptive => Box::new(ExpertPool::new(consts.clone())),
        Algorithm::Zero => Box::new(FixedFilter::zero(consts.d())),
        Algorithm::Identity => Box::new(FixedFilter::identity(consts.d())),
    }
}
