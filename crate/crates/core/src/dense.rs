//! Dense reference implementation of the block loss.
//!
//! Materializes `M = (k-d+1) sigma2 I - sum_tail Y Y^T` as a `d x d` matrix.
//! It exists to cross-check the matrix-free code in [`crate::loss`] and as the
//! quadratic-cost baseline for work-per-step measurements; filters never use
//! it unless asked to.

use nalgebra::{DMatrix, DVector};

use crate::constants::ProblemConstants;
use crate::error::{FilterError, Result};
use crate::kernels::charge;
use crate::types::{BlockRecord, FilterWeights};

fn outer_sum<'a>(d: usize, windows: impl Iterator<Item = &'a [f64]>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, d);
    for y in windows {
        charge(d * d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] += y[i] * y[j];
            }
        }
    }
    m
}

/// The regularizer matrix `(k-d+1) sigma2 I - sum_tail Y Y^T`.
pub fn regularizer_matrix(block: &BlockRecord, consts: &ProblemConstants) -> Result<DMatrix<f64>> {
    check(block, consts)?;
    let d = consts.d();
    let tail = consts.regularizer_windows();
    let windows = block.samples[block.len() - tail..].iter().map(|s| s.window.as_slice());
    let mut m = -outer_sum(d, windows);
    for i in 0..d {
        m[(i, i)] += tail as f64 * consts.sigma2();
    }
    Ok(m)
}

/// `sum_tau (y_tau - w . Y_tau)^2 + 2 k sigma2 w_1 + v^T M v`
pub fn block_loss_dense(block: &BlockRecord, w: &FilterWeights, consts: &ProblemConstants) -> Result<f64> {
    let m = regularizer_matrix(block, consts)?;
    let (gram, cross, sq) = moments(block, consts.d());
    let wv = DVector::from_column_slice(w.as_slice());
    let v = &wv - DVector::from_column_slice(block.anchor.as_slice());
    charge(3 * consts.d() * consts.d());
    let fit = sq - 2.0 * wv.dot(&cross) + wv.dot(&(&gram * &wv));
    let penalty = 2.0 * block.len() as f64 * consts.sigma2() * w[0];
    Ok(fit + penalty + v.dot(&(&m * &v)))
}

/// `2 (G w - b) + 2 k c + 2 M v`
pub fn block_loss_gradient_dense(
    block: &BlockRecord,
    w: &FilterWeights,
    consts: &ProblemConstants,
) -> Result<Vec<f64>> {
    let m = regularizer_matrix(block, consts)?;
    let (gram, cross, _) = moments(block, consts.d());
    let wv = DVector::from_column_slice(w.as_slice());
    let v = &wv - DVector::from_column_slice(block.anchor.as_slice());
    charge(2 * consts.d() * consts.d());
    let mut g = 2.0 * (&gram * &wv - cross) + 2.0 * (&m * v);
    g[0] += 2.0 * block.len() as f64 * consts.sigma2();
    Ok(g.as_slice().to_vec())
}

/// Hessian of the block loss, `2 sum Y Y^T + 2 M`; independent of `w`.
pub fn block_loss_hessian(block: &BlockRecord, consts: &ProblemConstants) -> Result<DMatrix<f64>> {
    let m = regularizer_matrix(block, consts)?;
    let (gram, _, _) = moments(block, consts.d());
    Ok(2.0 * gram + 2.0 * m)
}

// Gram matrix, cross term and squared norm over all samples of the block.
fn moments(block: &BlockRecord, d: usize) -> (DMatrix<f64>, DVector<f64>, f64) {
    let gram = outer_sum(d, block.samples.iter().map(|s| s.window.as_slice()));
    let mut cross = DVector::zeros(d);
    let mut sq = 0.0;
    for s in &block.samples {
        charge(d);
        cross += s.y * DVector::from_column_slice(s.window.as_slice());
        sq += s.y * s.y;
    }
    (gram, cross, sq)
}

fn check(block: &BlockRecord, consts: &ProblemConstants) -> Result<()> {
    if block.len() != consts.k() {
        return Err(FilterError::BlockSize {
            expected: consts.k(),
            got: block.len(),
        });
    }
    Ok(())
}
