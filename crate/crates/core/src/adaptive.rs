//! Exponentially weighted ensemble of gradient-descent experts.
//!
//! A fresh expert is born at every block and mixed in with weight
//! `1 / (c + 1)`; older weights are reweighted by `exp(-alpha L_c)` and scaled
//! by `1 - 1 / (c + 1)`. The filter played on block `c` is the weighted mean of
//! the experts' filters, so it stays in the `R`-ball. Experts never die.
//!
//! All block losses of block `c` are anchored at the combined filter played on
//! that block. Each expert's own gradient step is an ordinary
//! [`GdFilter`] update anchored at its own filter, with its own block counter.

use rayon::prelude::*;

use crate::constants::ProblemConstants;
use crate::error::Result;
use crate::gd::{drive, GdFilter, OnlineFilter, RunOutput};
use crate::kernels;
use crate::loss::block_loss;
use crate::types::{BlockRecord, BlockSample, FilterWeights, WindowBuffer};

// Below this pool size the per-expert work is too small to farm out.
const PARALLEL_EXPERTS: usize = 256;

#[derive(Debug, Clone)]
pub struct Expert {
    pub birth_block: usize,
    pub inner: GdFilter,
}

impl Expert {
    pub fn filter(&self) -> &FilterWeights {
        self.inner.filter()
    }
}

/// Block losses of the combined filter and of every live expert.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLosses {
    pub block_index: usize,
    pub combined: f64,
    /// Indexed by birth block minus one.
    pub experts: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ExpertPool {
    consts: ProblemConstants,
    experts: Vec<Expert>,
    weights: Vec<f64>,
    staged: Vec<f64>,
    combined: FilterWeights,
    block_index: usize,
    pending: Vec<BlockSample>,
    window: WindowBuffer,
    trace: Option<Vec<BlockLosses>>,
}

impl ExpertPool {
    /// One expert, born at block 1, holding all the weight.
    pub fn new(consts: ProblemConstants) -> Self {
        let d = consts.d();
        Self {
            experts: vec![Expert {
                birth_block: 1,
                inner: GdFilter::new(consts.clone()),
            }],
            weights: vec![1.0],
            staged: vec![1.0],
            combined: FilterWeights::zeros(d),
            block_index: 1,
            pending: Vec::with_capacity(consts.k()),
            window: WindowBuffer::new(d),
            trace: None,
            consts,
        }
    }

    /// Records every block's losses; see [`ExpertPool::trace`].
    pub fn traced(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn trace(&self) -> Option<&[BlockLosses]> {
        self.trace.as_deref()
    }

    pub fn consts(&self) -> &ProblemConstants {
        &self.consts
    }

    pub fn experts(&self) -> &[Expert] {
        &self.experts
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weights after exponential reweighting of the last block, before the
    /// newest expert was mixed in.
    pub fn staged_weights(&self) -> &[f64] {
        &self.staged
    }

    pub fn block_index(&self) -> usize {
        self.block_index
    }

    /// The weighted mean of the expert filters.
    pub fn predict_filter(&self) -> FilterWeights {
        combine(&self.experts, &self.weights, self.consts.d())
    }

    /// Closes block `c`: reweights, advances every expert on the block and
    /// spawns expert `c + 1`. `block.anchor` must be the combined filter that
    /// was played on it.
    pub fn update(&mut self, block: &BlockRecord) -> Result<()> {
        let consts = &self.consts;
        let eval = |e: &Expert| block_loss(block, e.filter(), consts);
        let losses: Vec<f64> = if self.experts.len() >= PARALLEL_EXPERTS {
            self.experts.par_iter().map(eval).collect::<Result<_>>()?
        } else {
            self.experts.iter().map(eval).collect::<Result<_>>()?
        };

        if let Some(trace) = self.trace.as_mut() {
            trace.push(BlockLosses {
                block_index: self.block_index,
                combined: block_loss(block, &block.anchor, consts)?,
                experts: losses.clone(),
            });
        }

        self.staged = reweight(&self.weights, &losses, consts.alpha());

        let samples = &block.samples;
        if self.experts.len() >= PARALLEL_EXPERTS {
            self.experts.par_iter_mut().for_each(|e| e.inner.learn_block(samples));
        } else {
            for e in &mut self.experts {
                e.inner.learn_block(samples);
            }
        }

        let c = self.block_index;
        let newest = 1.0 / (c + 1) as f64;
        self.weights = self.staged.iter().map(|p| (1.0 - newest) * p).collect();
        self.weights.push(newest);
        self.experts.push(Expert {
            birth_block: c + 1,
            inner: GdFilter::new(self.consts.clone()),
        });
        self.block_index += 1;
        self.combined = self.predict_filter();
        Ok(())
    }
}

impl OnlineFilter for ExpertPool {
    fn order(&self) -> usize {
        self.consts.d()
    }

    fn filter(&self) -> &FilterWeights {
        &self.combined
    }

    fn step(&mut self, y: f64) -> f64 {
        let window = self.window.push(y);
        let prediction = kernels::dot(self.combined.as_slice(), window.as_slice());
        self.pending.push(BlockSample { y, window });
        if self.pending.len() == self.consts.k() {
            let record = BlockRecord::new(
                self.block_index,
                std::mem::take(&mut self.pending),
                self.combined.clone(),
            );
            self.update(&record)
                .expect("records built by the pool satisfy the block contract");
        }
        prediction
    }
}

/// `p_i exp(-alpha L_i)`, normalized. The smallest loss is subtracted first so
/// the largest factor is exactly 1.
pub fn reweight(weights: &[f64], losses: &[f64], alpha: f64) -> Vec<f64> {
    let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = weights
        .iter()
        .zip(losses)
        .map(|(p, l)| p * (-alpha * (l - min)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|u| u / total).collect()
}

fn combine(experts: &[Expert], weights: &[f64], d: usize) -> FilterWeights {
    let mut w = FilterWeights::zeros(d);
    for (e, &p) in experts.iter().zip(weights) {
        kernels::axpy(p, e.filter().as_slice(), w.as_mut_slice());
    }
    w
}

pub fn adaptive_run(consts: &ProblemConstants, observations: &[f64]) -> Result<RunOutput> {
    let k = consts.k();
    drive(&mut ExpertPool::new(consts.clone()), k, observations)
}

/// [`adaptive_run`] that also returns every block's recorded losses.
pub fn adaptive_run_traced(consts: &ProblemConstants, observations: &[f64]) -> Result<(RunOutput, Vec<BlockLosses>)> {
    let k = consts.k();
    let mut pool = ExpertPool::new(consts.clone()).traced();
    let out = drive(&mut pool, k, observations)?;
    Ok((out, pool.trace.unwrap_or_default()))
}

/// Largest value of `sum_{c=r}^{s} [L_c(combined) - L_c(expert r)]` over all
/// block intervals, returned as `(r, s, value)` with one-based block indices.
pub fn max_interval_tracking_gap(trace: &[BlockLosses]) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for r in 1..=trace.len() {
        let mut acc = 0.0;
        for rec in &trace[r - 1..] {
            acc += rec.combined - rec.experts[r - 1];
            if best.is_none_or(|(_, _, v)| acc > v) {
                best = Some((r, rec.block_index, acc));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gd::gd_run;

    fn consts() -> ProblemConstants {
        ProblemConstants::with_defaults(2, 1.0 / 3.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn init() {
        let pool = ExpertPool::new(consts());
        assert_eq!(pool.experts().len(), 1);
        assert_eq!(pool.weights(), &[1.0]);
        assert_eq!(pool.predict_filter(), FilterWeights::zeros(2));
    }

    #[test]
    fn first_update_splits_evenly() {
        let c = consts();
        let mut pool = ExpertPool::new(c.clone());
        for t in 0..c.k() {
            pool.step((t as f64).cos());
        }
        assert_eq!(pool.staged_weights(), &[1.0]);
        assert_eq!(pool.weights(), &[0.5, 0.5]);
        assert_eq!(pool.experts()[1].birth_block, 2);
    }

    #[test]
    fn equal_losses_keep_weights() {
        let p = [0.2, 0.3, 0.5];
        let staged = reweight(&p, &[4.0, 4.0, 4.0], 0.7);
        for (a, b) in staged.iter().zip(&p) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn two_expert_reweighting() {
        let alpha = 0.25;
        let staged = reweight(&[0.5, 0.5], &[0.0, std::f64::consts::LN_2 / alpha], alpha);
        assert!((staged[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((staged[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn reweighting_survives_huge_losses() {
        let staged = reweight(&[0.5, 0.5], &[1e6, 1e6 + 1.0], 10.0);
        assert!(staged.iter().all(|p| p.is_finite()));
        assert!((staged.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn predict_filter_mixes() {
        let c = ProblemConstants::with_defaults(2, 1.0, 1.0, 1.0).unwrap();
        let mut a = GdFilter::new(c.clone());
        let mut b = GdFilter::new(c.clone());
        a.current_mut_for_test(FilterWeights::new(vec![1.0, 0.0]));
        b.current_mut_for_test(FilterWeights::new(vec![0.0, 1.0]));
        let experts = vec![
            Expert {
                birth_block: 1,
                inner: a,
            },
            Expert {
                birth_block: 2,
                inner: b,
            },
        ];
        assert_eq!(combine(&experts, &[0.5, 0.5], 2).as_slice(), &[0.5, 0.5]);
        assert_eq!(combine(&experts, &[1.0, 0.0], 2).as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn single_block_matches_gd() {
        let c = consts();
        let obs: Vec<f64> = (0..c.k()).map(|t| (t as f64 * 0.9).sin()).collect();
        assert_eq!(
            adaptive_run(&c, &obs).unwrap().predictions,
            gd_run(&c, &obs).unwrap().predictions
        );
    }

    #[test]
    fn newest_weight_and_normalization() {
        let c = consts();
        let mut pool = ExpertPool::new(c.clone());
        for t in 0..(c.k() * 30) {
            pool.step(0.8 * (t as f64 * 0.2).sin());
            if (t + 1) % c.k() == 0 {
                let blocks = (t + 1) / c.k();
                let w = pool.weights();
                assert_eq!(w.len(), blocks + 1);
                assert_eq!(*w.last().unwrap(), 1.0 / (blocks + 1) as f64);
                for (p, s) in w.iter().zip(pool.staged_weights()) {
                    assert_eq!(*p, (1.0 - 1.0 / (blocks + 1) as f64) * s);
                }
                assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                assert!(pool.filter().norm() <= c.radius() + 1e-12);
            }
        }
    }
}
