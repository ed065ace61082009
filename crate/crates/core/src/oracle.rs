//! Hindsight comparators.
//!
//! The best fixed filter on `[r, s]` minimizes `sum (x_t - w^T Y_t)^2` over
//! the `R`-ball. With gram `G`, cross term `b` and `sum x^2`, this is a
//! trust-region problem with a PSD quadratic: either the minimum-norm solution
//! of `G w = b` is feasible, or `w(lambda) = (G + lambda I)^{-1} b` with
//! `||w(lambda)|| = R`, found by bisection on `lambda`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{FilterError, Result};
use crate::signal::{build_windows, NoiseSpec};

const EIGEN_CUTOFF: f64 = 1e-12;
const BISECTION_TOL: f64 = 1e-10;
const BISECTION_MAX_ITER: usize = 200;

/// Sufficient statistics of the true loss over one interval (1-based,
/// inclusive).
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSummary {
    pub r: usize,
    pub s: usize,
    pub gram: DMatrix<f64>,
    pub cross: DVector<f64>,
    pub sq: f64,
}

impl IntervalSummary {
    /// Accumulates directly over `signal[r-1..s]` with windows of `observations`.
    pub fn accumulate(signal: &[f64], observations: &[f64], d: usize, r: usize, s: usize) -> Result<Self> {
        check_interval(r, s, signal.len())?;
        let windows = build_windows(observations, d);
        let mut gram = DMatrix::zeros(d, d);
        let mut cross = DVector::zeros(d);
        let mut sq = 0.0;
        for t in r - 1..s {
            let y = DVector::from_column_slice(windows[t].as_slice());
            gram += &y * y.transpose();
            cross += signal[t] * &y;
            sq += signal[t] * signal[t];
        }
        Ok(Self { r, s, gram, cross, sq })
    }

    pub fn d(&self) -> usize {
        self.cross.len()
    }

    /// `sum (x - w^T Y)^2` over the interval.
    pub fn loss(&self, w: &[f64]) -> f64 {
        let w = DVector::from_column_slice(w);
        self.sq - 2.0 * w.dot(&self.cross) + w.dot(&(&self.gram * &w))
    }
}

/// Prefix sums of the interval statistics, so any interval costs `O(d^2)`.
#[derive(Debug, Clone)]
pub struct PrefixSummaries {
    d: usize,
    // entry t holds sums over steps 1..=t; entry 0 is all zeros
    gram: Vec<DMatrix<f64>>,
    cross: Vec<DVector<f64>>,
    sq: Vec<f64>,
}

impl PrefixSummaries {
    pub fn new(signal: &[f64], observations: &[f64], d: usize) -> Self {
        assert_eq!(
            signal.len(),
            observations.len(),
            "signal and observations differ in length"
        );
        let windows = build_windows(observations, d);
        let horizon = signal.len();
        let mut gram = Vec::with_capacity(horizon + 1);
        let mut cross = Vec::with_capacity(horizon + 1);
        let mut sq = Vec::with_capacity(horizon + 1);
        gram.push(DMatrix::zeros(d, d));
        cross.push(DVector::zeros(d));
        sq.push(0.0);
        for (x, win) in signal.iter().zip(&windows) {
            let y = DVector::from_column_slice(win.as_slice());
            let g = gram.last().unwrap() + &y * y.transpose();
            let c = cross.last().unwrap() + *x * &y;
            let q = sq.last().unwrap() + x * x;
            gram.push(g);
            cross.push(c);
            sq.push(q);
        }
        Self { d, gram, cross, sq }
    }

    pub fn horizon(&self) -> usize {
        self.sq.len() - 1
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn interval(&self, r: usize, s: usize) -> Result<IntervalSummary> {
        check_interval(r, s, self.horizon())?;
        Ok(IntervalSummary {
            r,
            s,
            gram: &self.gram[s] - &self.gram[r - 1],
            cross: &self.cross[s] - &self.cross[r - 1],
            sq: self.sq[s] - self.sq[r - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub weights: Vec<f64>,
    pub loss: f64,
    /// Lagrange multiplier of the ball constraint; zero when interior.
    pub lambda: f64,
}

/// Minimizer of the interval's true loss over `||w|| <= radius`.
pub fn best_fixed_filter(summary: &IntervalSummary, radius: f64) -> OracleSolution {
    let d = summary.d();
    let eig = SymmetricEigen::new(summary.gram.clone());
    let lmax = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    // coordinates of b in the eigenbasis
    let beta = eig.eigenvectors.transpose() * &summary.cross;
    let cutoff = EIGEN_CUTOFF * lmax;

    let solve = |lambda: f64| -> DVector<f64> {
        let mut z = DVector::zeros(d);
        for i in 0..d {
            let denom = eig.eigenvalues[i].max(0.0) + lambda;
            if lambda > 0.0 || eig.eigenvalues[i] > cutoff {
                z[i] = beta[i] / denom;
            }
        }
        &eig.eigenvectors * z
    };

    let mut lambda = 0.0;
    let mut w = if lmax > 0.0 { solve(0.0) } else { DVector::zeros(d) };
    if w.norm() > radius {
        // ||w(lambda)|| <= ||b|| / lambda, so ||b|| / R brackets the root
        let mut lo = 0.0;
        let mut hi = summary.cross.norm() / radius;
        for _ in 0..BISECTION_MAX_ITER {
            lambda = 0.5 * (lo + hi);
            w = solve(lambda);
            let n = w.norm();
            if (n - radius).abs() <= BISECTION_TOL * radius {
                break;
            }
            if n > radius {
                lo = lambda;
            } else {
                hi = lambda;
            }
        }
        // land on the feasible side of the tolerance band
        let n = w.norm();
        if n > radius {
            w *= radius / n;
        }
    }
    let weights = w.as_slice().to_vec();
    OracleSolution {
        loss: summary.loss(&weights),
        weights,
        lambda,
    }
}

/// Prefix sums of an algorithm's per-step true losses.
#[derive(Debug, Clone)]
pub struct LossPrefix(Vec<f64>);

impl LossPrefix {
    pub fn new(losses: &[f64]) -> Self {
        let mut acc = Vec::with_capacity(losses.len() + 1);
        acc.push(0.0);
        for l in losses {
            acc.push(acc.last().unwrap() + l);
        }
        Self(acc)
    }

    pub fn horizon(&self) -> usize {
        self.0.len() - 1
    }

    pub fn sum(&self, r: usize, s: usize) -> f64 {
        self.0[s] - self.0[r - 1]
    }
}

/// Algorithm loss on `[r, s]` minus that of the interval's best fixed filter.
pub fn interval_regret(
    losses: &LossPrefix,
    summaries: &PrefixSummaries,
    r: usize,
    s: usize,
    radius: f64,
) -> Result<f64> {
    if losses.horizon() != summaries.horizon() {
        return Err(FilterError::DimensionMismatch {
            expected: summaries.horizon(),
            got: losses.horizon(),
        });
    }
    let summary = summaries.interval(r, s)?;
    Ok(losses.sum(r, s) - best_fixed_filter(&summary, radius).loss)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanResult {
    pub r: usize,
    pub s: usize,
    pub value: f64,
}

/// Worst interval regret over intervals `[r, s]` with `r - 1` a multiple of
/// `stride` and `s` a multiple of `stride` or the horizon itself. The full
/// horizon is always among them; `stride = 1` scans every interval.
pub fn adaptive_regret_scan(
    losses: &LossPrefix,
    summaries: &PrefixSummaries,
    radius: f64,
    stride: usize,
) -> Result<ScanResult> {
    if stride == 0 {
        return Err(FilterError::InvalidConstant {
            name: "stride",
            reason: "must be at least 1".into(),
        });
    }
    let horizon = summaries.horizon();
    if losses.horizon() != horizon {
        return Err(FilterError::DimensionMismatch {
            expected: horizon,
            got: losses.horizon(),
        });
    }
    if horizon == 0 {
        return Err(FilterError::EmptyInput);
    }
    let mut ends: Vec<usize> = (stride..=horizon).step_by(stride).collect();
    if ends.last() != Some(&horizon) {
        ends.push(horizon);
    }
    let starts: Vec<usize> = (0..horizon).step_by(stride).map(|b| b + 1).collect();

    let best = starts
        .par_iter()
        .map(|&r| {
            let mut local: Option<ScanResult> = None;
            for &s in ends.iter().filter(|&&s| s >= r) {
                let summary = summaries.interval(r, s).expect("interval within horizon");
                let value = losses.sum(r, s) - best_fixed_filter(&summary, radius).loss;
                if local.is_none_or(|b| value > b.value) {
                    local = Some(ScanResult { r, s, value });
                }
            }
            local
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (Some(a), Some(b)) => Some(
                    if b.value > a.value || (b.value == a.value && (b.r, b.s) < (a.r, a.s)) {
                        b
                    } else {
                        a
                    },
                ),
                (a, None) => a,
                (None, b) => b,
            },
        );
    Ok(best.expect("at least one interval"))
}

/// Monte Carlo check of `E[Y Y^T] = X X^T + sigma2 I` for a fixed clean
/// window `X` (most recent first).
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceReport {
    /// `mean(Y Y^T) - X X^T - sigma2 I`
    pub deviation: DMatrix<f64>,
    pub std_error: DMatrix<f64>,
    pub max_abs_deviation: f64,
    /// Largest `|deviation| / std_error`; zero-error entries count only if
    /// their deviation is nonzero.
    pub max_z: f64,
}

impl CovarianceReport {
    pub fn within(&self, z: f64) -> bool {
        self.deviation
            .iter()
            .zip(self.std_error.iter())
            .all(|(dev, se)| dev.abs() <= z * se)
    }
}

pub fn covariance_check(clean_window: &[f64], noise: &NoiseSpec, samples: usize) -> CovarianceReport {
    let d = clean_window.len();
    let mut sampler = noise.sampler();
    // Welford keeps deterministic entries (e.g. Rademacher squares) exact
    let mut mean = DMatrix::zeros(d, d);
    let mut m2 = DMatrix::<f64>::zeros(d, d);
    let x = DVector::from_column_slice(clean_window);
    for i in 0..samples {
        let n = DVector::from_iterator(d, sampler.by_ref().take(d));
        let y = &x + n;
        let outer = &y * y.transpose();
        let delta = &outer - &mean;
        mean += &delta / (i + 1) as f64;
        m2 += delta.component_mul(&(&outer - &mean));
    }
    let m = samples as f64;
    let mut deviation = &mean - &x * x.transpose();
    for i in 0..d {
        deviation[(i, i)] -= noise.sigma2();
    }
    let scale = mean.iter().fold(noise.sigma2(), |a, v| a.max(v.abs()));
    deviation.apply(|v| {
        if v.abs() <= 64.0 * f64::EPSILON * scale {
            *v = 0.0
        }
    });
    let std_error = m2.map(|v| (v.max(0.0) / (m - 1.0)).sqrt() / m.sqrt());
    let max_abs_deviation = deviation.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let max_z = deviation
        .iter()
        .zip(std_error.iter())
        .map(|(dev, se)| {
            if *se > 0.0 {
                dev.abs() / se
            } else if *dev == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);
    CovarianceReport {
        deviation,
        std_error,
        max_abs_deviation,
        max_z,
    }
}

fn check_interval(r: usize, s: usize, horizon: usize) -> Result<()> {
    if r == 0 || r > s || s > horizon {
        Err(FilterError::InvalidInterval { r, s, horizon })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::NoiseKind;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    #[test]
    fn noiseless_identity_is_optimal() {
        let x: Vec<f64> = (0..40).map(|t| (t as f64 * 0.3).sin()).collect();
        let p = PrefixSummaries::new(&x, &x, 3);
        let sol = best_fixed_filter(&p.interval(1, 40).unwrap(), 1.0);
        assert!((sol.weights[0] - 1.0).abs() < 1e-9);
        assert!(sol.weights[1].abs() < 1e-9 && sol.weights[2].abs() < 1e-9);
        assert!(sol.loss.abs() < 1e-9);
    }

    #[test]
    fn zero_signal_gives_zero_filter() {
        let mut seed = 1;
        let y: Vec<f64> = (0..30).map(|_| lcg(&mut seed)).collect();
        let p = PrefixSummaries::new(&[0.0; 30], &y, 2);
        let sol = best_fixed_filter(&p.interval(1, 30).unwrap(), 5.0);
        assert!(sol.weights.iter().all(|w| w.abs() < 1e-12));
        assert!(sol.loss.abs() < 1e-12);
    }

    #[test]
    fn constrained_solution_sits_on_boundary() {
        let mut seed = 5;
        let y: Vec<f64> = (0..60).map(|_| lcg(&mut seed)).collect();
        let x: Vec<f64> = y.iter().map(|v| 3.0 * v).collect();
        let p = PrefixSummaries::new(&x, &y, 2);
        let sol = best_fixed_filter(&p.interval(1, 60).unwrap(), 1.0);
        let n = sol.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        assert!(sol.lambda > 0.0);
        assert!((n - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn rank_deficient_interval_uses_minimum_norm() {
        // one sample, d = 3: gram has rank 1
        let p = PrefixSummaries::new(&[0.5], &[1.0], 3);
        let sol = best_fixed_filter(&p.interval(1, 1).unwrap(), 10.0);
        assert!((sol.weights[0] - 0.5).abs() < 1e-12);
        assert!(sol.weights[1].abs() < 1e-12 && sol.weights[2].abs() < 1e-12);
    }

    #[test]
    fn prefix_matches_direct_accumulation() {
        let mut seed = 11;
        let x: Vec<f64> = (0..200).map(|_| lcg(&mut seed)).collect();
        let y: Vec<f64> = x.iter().map(|v| v + 0.5 * lcg(&mut seed)).collect();
        let p = PrefixSummaries::new(&x, &y, 4);
        for (r, s) in [(1, 200), (17, 42), (100, 100), (3, 199)] {
            let a = p.interval(r, s).unwrap();
            let b = IntervalSummary::accumulate(&x, &y, 4, r, s).unwrap();
            let scale = 1.0 + b.gram.norm();
            assert!((&a.gram - &b.gram).norm() <= 1e-10 * scale);
            assert!((&a.cross - &b.cross).norm() <= 1e-10 * (1.0 + b.cross.norm()));
            assert!((a.sq - b.sq).abs() <= 1e-10 * (1.0 + b.sq));
        }
    }

    #[test]
    fn invalid_intervals_rejected() {
        let p = PrefixSummaries::new(&[0.0; 5], &[0.0; 5], 1);
        assert!(p.interval(0, 2).is_err());
        assert!(p.interval(3, 2).is_err());
        assert!(p.interval(1, 6).is_err());
        let l = LossPrefix::new(&[0.0; 5]);
        assert!(interval_regret(&l, &p, 4, 2, 1.0).is_err());
    }

    #[test]
    fn self_comparison_has_zero_regret() {
        let mut seed = 2;
        let x: Vec<f64> = (0..80).map(|_| lcg(&mut seed)).collect();
        let y: Vec<f64> = x.iter().map(|v| v + 0.3 * lcg(&mut seed)).collect();
        let p = PrefixSummaries::new(&x, &y, 2);
        let sol = best_fixed_filter(&p.interval(21, 60).unwrap(), 2.0);
        let windows = build_windows(&y, 2);
        let losses: Vec<f64> = (0..80)
            .map(|t| {
                let pred = sol.weights[0] * windows[t][0] + sol.weights[1] * windows[t][1];
                (x[t] - pred).powi(2)
            })
            .collect();
        let reg = interval_regret(&LossPrefix::new(&losses), &p, 21, 60, 2.0).unwrap();
        assert!(reg.abs() < 1e-9);
    }

    #[test]
    fn scan_dominates_full_interval_and_refines() {
        let mut seed = 8;
        let x: Vec<f64> = (0..96).map(|t| if t < 48 { 0.8 } else { -0.8 }).collect();
        let y: Vec<f64> = x.iter().map(|v| v + 0.4 * lcg(&mut seed)).collect();
        let p = PrefixSummaries::new(&x, &y, 2);
        // a predictor that ignores the switch
        let losses: Vec<f64> = x.iter().map(|v| (v - 0.8).powi(2)).collect();
        let lp = LossPrefix::new(&losses);
        let full = interval_regret(&lp, &p, 1, 96, 2.0).unwrap();
        let coarse = adaptive_regret_scan(&lp, &p, 2.0, 16).unwrap();
        let fine = adaptive_regret_scan(&lp, &p, 2.0, 4).unwrap();
        let exact = adaptive_regret_scan(&lp, &p, 2.0, 1).unwrap();
        assert!(coarse.value >= full);
        assert!(fine.value >= coarse.value);
        assert!(exact.value >= fine.value);
        assert!(coarse.r >= 48 && coarse.r <= 49);
    }

    #[test]
    fn covariance_without_noise_spread() {
        // Rademacher noise on a zero window: Y Y^T has unit diagonal every draw
        let noise = NoiseSpec::new(NoiseKind::Rademacher, 1.0, 3).unwrap();
        let rep = covariance_check(&[0.0, 0.0, 0.0], &noise, 2000);
        for i in 0..3 {
            assert_eq!(rep.deviation[(i, i)], 0.0);
        }
        assert!(rep.within(4.0));
    }
}
