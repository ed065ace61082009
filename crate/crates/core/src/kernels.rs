//! Dense vector kernels with a per-thread scalar-operation counter.
//!
//! Every kernel charges the number of multiply-adds it performs. The counter
//! backs the work-per-step measurements used to compare the matrix-free and
//! dense code paths; it is thread-local so concurrent runs do not interfere.

use std::cell::Cell;

thread_local! {
    static OPS: Cell<u64> = const { Cell::new(0) };
}

#[inline]
pub(crate) fn charge(n: usize) {
    OPS.with(|c| c.set(c.get() + n as u64));
}

/// Scalar operations charged on this thread since the last reset.
pub fn op_count() -> u64 {
    OPS.with(Cell::get)
}

pub fn reset_op_count() {
    OPS.with(|c| c.set(0));
}

/// Runs `f` and returns its result with the operations it charged.
pub fn count_ops<T>(f: impl FnOnce() -> T) -> (T, u64) {
    let before = op_count();
    let out = f();
    (out, op_count() - before)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    charge(a.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    charge(a.len());
    a.iter().map(|x| x * x).sum()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    charge(x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn scale(alpha: f64, x: &mut [f64]) {
    charge(x.len());
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

/// `a - b` as a new vector.
#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    charge(a.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_accumulate_per_kernel() {
        let a = [1.0, 2.0, 3.0];
        let b = [4.0, 5.0, 6.0];
        let (v, ops) = count_ops(|| dot(&a, &b));
        assert_eq!(v, 32.0);
        assert_eq!(ops, 3);

        let mut y = [0.0; 3];
        let ((), ops) = count_ops(|| {
            axpy(2.0, &a, &mut y);
            scale(0.5, &mut y);
        });
        assert_eq!(y, a);
        assert_eq!(ops, 6);
    }
}
