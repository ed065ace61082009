//! Verification suites. Each returns a report of named checks, each with a
//! statistic, the threshold it is compared against and a pass flag.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use unifilter::adaptive::max_interval_tracking_gap;
use unifilter::dense::block_loss_hessian;
use unifilter::kernels::count_ops;
use unifilter::signal::{realize, rng_for};
use unifilter::{
    adaptive_run_traced, block_loss, block_loss_gradient, build_windows, covariance_check, gd_run, surrogate_loss,
    true_loss, BlockRecord, BlockSample, FilterWeights, GdFilter, GradientPath, NoiseKind, NoiseSpec,
    ObservationWindow, OnlineFilter, ProblemConstants, SignalKind, SignalSpec,
};

use crate::error::{BenchError, Result};
use crate::stats::{linear_fit, mean_and_se};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Unbiasedness,
    Convexity,
    Lemma1,
    Claim2,
    Covariance,
    Gradcheck,
    LinearTime,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Unbiasedness,
        Suite::Convexity,
        Suite::Lemma1,
        Suite::Claim2,
        Suite::Covariance,
        Suite::Gradcheck,
        Suite::LinearTime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Unbiasedness => "unbiasedness",
            Suite::Convexity => "convexity",
            Suite::Lemma1 => "lemma1",
            Suite::Claim2 => "claim2",
            Suite::Covariance => "covariance",
            Suite::Gradcheck => "gradcheck",
            Suite::LinearTime => "linear-time",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| BenchError::UnknownSuite(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub statistic: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            statistic,
            relation: Relation::AtMost,
            threshold,
            // NaN fails
            pass: statistic <= threshold,
        }
    }

    pub fn at_least(name: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            statistic,
            relation: Relation::AtLeast,
            threshold,
            pass: statistic >= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub suite: Suite,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// CSV with columns `suite, check, statistic, relation, threshold, pass`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["suite", "check", "statistic", "relation", "threshold", "pass"])?;
        for c in &self.checks {
            let rel = match c.relation {
                Relation::AtMost => "<=",
                Relation::AtLeast => ">=",
            };
            w.write_record([
                self.suite.name(),
                &c.name,
                &crate::output::real(c.statistic),
                rel,
                &crate::output::real(c.threshold),
                if c.pass { "true" } else { "false" },
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Sizes of the suites. The defaults are the full-strength settings.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random instances for gradcheck and convexity.
    pub instances: usize,
    pub max_d: usize,
    /// Noise seeds per noise kind for unbiasedness.
    pub unbiasedness_seeds: usize,
    pub lemma1_seeds: usize,
    /// Horizon and order of the unbiasedness and lemma1 runs.
    pub horizon: usize,
    pub d: usize,
    pub claim2_horizon: usize,
    pub claim2_seeds: usize,
    pub covariance_samples: usize,
    pub linear_dims: Vec<usize>,
    pub linear_blocks: usize,
    /// Overrides the noise variance the filters are told about. A wrong value
    /// should make unbiasedness, lemma1 and covariance fail.
    pub declared_sigma2: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            instances: 1000,
            max_d: 8,
            unbiasedness_seeds: 10_000,
            lemma1_seeds: 50,
            horizon: 512,
            d: 4,
            claim2_horizon: 1 << 12,
            claim2_seeds: 3,
            covariance_samples: 100_000,
            linear_dims: vec![4, 8, 16, 32, 64],
            linear_blocks: 32,
            declared_sigma2: None,
        }
    }
}

impl VerifyOptions {
    /// Small sizes for smoke runs.
    pub fn quick() -> Self {
        Self {
            instances: 50,
            unbiasedness_seeds: 300,
            lemma1_seeds: 20,
            horizon: 128,
            claim2_horizon: 512,
            claim2_seeds: 1,
            covariance_samples: 20_000,
            linear_dims: vec![4, 8, 16, 32],
            linear_blocks: 8,
            ..Self::default()
        }
    }
}

pub fn verify(suite: Suite, opts: &VerifyOptions) -> Result<Report> {
    let checks = match suite {
        Suite::Gradcheck => gradcheck(opts)?,
        Suite::Convexity => convexity(opts)?,
        Suite::Unbiasedness => unbiasedness(opts)?,
        Suite::Lemma1 => lemma1(opts)?,
        Suite::Claim2 => claim2(opts)?,
        Suite::Covariance => covariance(opts)?,
        Suite::LinearTime => linear_time(opts),
    };
    Ok(Report { suite, checks })
}

// Stream ids keep the suites' random draws apart from the noise streams.
const INSTANCE_STREAM: u64 = 16;

fn point_in_ball(rng: &mut ChaCha8Rng, d: usize, radius: f64) -> FilterWeights {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-radius..=radius)).collect();
        if v.iter().map(|x| x * x).sum::<f64>() <= radius * radius {
            return FilterWeights::new(v);
        }
    }
}

/// Random constants with `k = 2d` and one block of in-bound observations.
fn random_instance(rng: &mut ChaCha8Rng, max_d: usize) -> Result<(ProblemConstants, BlockRecord, FilterWeights)> {
    let d = rng.random_range(1..=max_d);
    let consts = ProblemConstants::builder(
        d,
        rng.random_range(0.05..2.0),
        rng.random_range(0.2..2.0),
        rng.random_range(0.2..2.0),
    )
    .radius(rng.random_range(0.2..4.0))
    .build()?;
    let (k, b) = (consts.k(), consts.observation_bound());
    let stream: Vec<f64> = (0..k + d - 1).map(|_| rng.random_range(-b..=b)).collect();
    let samples = (d - 1..k + d - 1)
        .map(|t| BlockSample {
            y: stream[t],
            window: ObservationWindow::new((0..d).map(|i| stream[t - i]).collect()),
        })
        .collect();
    let anchor = point_in_ball(rng, d, consts.radius());
    let w = point_in_ball(rng, d, consts.radius());
    Ok((consts, BlockRecord::new(1, samples, anchor), w))
}

fn gradcheck(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut rng = rng_for(opts.seed, INSTANCE_STREAM);
    let h = 1e-3;
    let mut worst = 0.0f64;
    for _ in 0..opts.instances {
        let (c, block, w) = random_instance(&mut rng, opts.max_d)?;
        let g = block_loss_gradient(&block, &w, &c)?;
        let scale = g.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for (i, gi) in g.iter().enumerate() {
            let mut p = w.clone();
            p.as_mut_slice()[i] += h;
            let mut m = w.clone();
            m.as_mut_slice()[i] -= h;
            let fd = (block_loss(&block, &p, &c)? - block_loss(&block, &m, &c)?) / (2.0 * h);
            worst = worst.max((gi - fd).abs() / scale);
        }
    }
    Ok(vec![Check::at_most("max_relative_gradient_error", worst, 1e-5)])
}

fn convexity(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut rng = rng_for(opts.seed, INSTANCE_STREAM + 1);
    let mut margin = f64::INFINITY;
    for _ in 0..opts.instances {
        let (c, block, _) = random_instance(&mut rng, opts.max_d)?;
        let hess = block_loss_hessian(&block, &c)?;
        let min = SymmetricEigen::new(hess).eigenvalues.min();
        margin = margin.min(min - c.strong_convexity());
    }
    Ok(vec![Check::at_least("min_eigenvalue_minus_modulus", margin, -1e-9)])
}

fn noise_kinds() -> [(NoiseKind, &'static str); 3] {
    [
        (NoiseKind::Uniform, "uniform"),
        (NoiseKind::Rademacher, "rademacher"),
        (NoiseKind::TruncatedGaussian { scale: 0.5 }, "truncated-gaussian"),
    ]
}

fn reference_signal(horizon: usize) -> Vec<f64> {
    let spec = SignalSpec::new(
        SignalKind::Sinusoid {
            amplitude: 1.0,
            period: 32.0,
            phase: 0.0,
        },
        1.0,
    )
    .expect("valid signal");
    spec.generate(horizon)
}

/// Fixed comparator inside every default ball used here.
fn comparator(d: usize) -> FilterWeights {
    FilterWeights::new((0..d).map(|i| 0.4 / (i + 1) as f64).collect())
}

fn declared(opts: &VerifyOptions, noise: &NoiseSpec) -> Result<ProblemConstants> {
    let sigma2 = opts.declared_sigma2.unwrap_or(noise.sigma2());
    Ok(ProblemConstants::with_defaults(opts.d, sigma2, 1.0, noise.bound_n())?)
}

struct GdPass {
    surrogate_regret: f64,
    true_regret: f64,
    windows: Vec<ObservationWindow>,
    observations: Vec<f64>,
    block_filters: Vec<FilterWeights>,
}

/// Surrogate and true regret of a GD run against the fixed comparator.
fn regrets(signal: &[f64], noise: &NoiseSpec, consts: &ProblemConstants) -> Result<GdPass> {
    let n = noise.generate(signal.len());
    let obs: Vec<f64> = signal.iter().zip(&n).map(|(x, e)| x + e).collect();
    let windows = build_windows(&obs, consts.d());
    let run = gd_run(consts, &obs)?;
    let u = comparator(consts.d());
    let (mut surrogate, mut truth) = (0.0, 0.0);
    for t in 0..signal.len() {
        let w = &run.block_filters[t / consts.k()];
        surrogate += surrogate_loss(obs[t], w, &windows[t], consts)? - surrogate_loss(obs[t], &u, &windows[t], consts)?;
        truth += true_loss(signal[t], w, &windows[t])? - true_loss(signal[t], &u, &windows[t])?;
    }
    Ok(GdPass {
        surrogate_regret: surrogate,
        true_regret: truth,
        windows,
        observations: obs,
        block_filters: run.block_filters,
    })
}

fn unbiasedness(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let signal = reference_signal(opts.horizon);
    noise_kinds()
        .into_iter()
        .map(|(kind, name)| {
            let base = NoiseSpec::new(kind, 1.0, 0)?;
            let consts = declared(opts, &base)?;
            let diffs = (0..opts.unbiasedness_seeds as u64)
                .into_par_iter()
                .map(|s| {
                    let pass = regrets(&signal, &base.with_seed(opts.seed + s), &consts)?;
                    Ok(pass.surrogate_regret - pass.true_regret)
                })
                .collect::<Result<Vec<f64>>>()?;
            let (mean, se) = mean_and_se(&diffs);
            Ok(Check::at_most(format!("{name}_abs_z"), (mean / se).abs(), 3.0))
        })
        .collect()
}

fn lemma1(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let signal = reference_signal(opts.horizon);
    let base = NoiseSpec::new(NoiseKind::Uniform, 1.0, 0)?;
    let consts = declared(opts, &base)?;
    let (k, u) = (consts.k(), comparator(consts.d()));
    let blocks = opts.horizon / k;
    let diffs = (0..opts.lemma1_seeds as u64)
        .into_par_iter()
        .map(|s| {
            let pass = regrets(&signal, &base.with_seed(opts.seed + s), &consts)?;
            let (mut block_regret, mut true_regret) = (0.0, 0.0);
            for (c, w) in pass.block_filters.iter().take(blocks).enumerate() {
                let steps = c * k..(c + 1) * k;
                let samples = steps
                    .clone()
                    .map(|t| BlockSample {
                        y: pass.observations[t],
                        window: pass.windows[t].clone(),
                    })
                    .collect();
                let record = BlockRecord::new(c + 1, samples, w.clone());
                block_regret += block_loss(&record, w, &consts)? - block_loss(&record, &u, &consts)?;
                for t in steps {
                    let win = &pass.windows[t];
                    true_regret += true_loss(signal[t], w, win)? - true_loss(signal[t], &u, win)?;
                }
            }
            Ok(block_regret - true_regret)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, se) = mean_and_se(&diffs);
    let z = if se > 0.0 {
        mean / se
    } else {
        f64::INFINITY * mean.signum()
    };
    Ok(vec![Check::at_least("mean_block_minus_true_regret_z", z, -3.0)])
}

fn claim2(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let horizon = opts.claim2_horizon;
    let signals = [
        (
            "sinusoid",
            SignalKind::Sinusoid {
                amplitude: 1.0,
                period: 64.0,
                phase: 0.0,
            },
        ),
        (
            "piecewise",
            SignalKind::PiecewiseSinusoid {
                amplitude: 1.0,
                before: 128.0,
                after: 2.0,
                switch_at: horizon / 2,
                phase: std::f64::consts::FRAC_PI_2,
            },
        ),
    ];
    let mut checks = Vec::new();
    for (name, kind) in signals {
        let spec = SignalSpec::new(kind, 1.0)?;
        for s in 0..opts.claim2_seeds as u64 {
            let seed = opts.seed + s;
            let noise = NoiseSpec::new(NoiseKind::Uniform, 1.0, seed)?;
            let consts = ProblemConstants::with_defaults(opts.d, noise.sigma2(), 1.0, 1.0)?;
            let re = realize(&spec, &noise, horizon);
            let (_, trace) = adaptive_run_traced(&consts, &re.observations)?;
            let gap = max_interval_tracking_gap(&trace).map_or(0.0, |(_, _, g)| g);
            let bound = 4.0 / consts.alpha() * (horizon as f64).ln();
            checks.push(Check::at_most(format!("{name}_seed{seed}_max_gap"), gap, bound + 1e-6));
        }
    }
    Ok(checks)
}

fn covariance(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let clean = reference_signal(opts.d.max(1) + 7);
    let window: Vec<f64> = (0..opts.d).map(|i| clean[opts.d + 6 - i]).collect();
    noise_kinds()
        .into_iter()
        .map(|(kind, name)| {
            let noise = NoiseSpec::new(kind, 1.0, opts.seed)?;
            let rep = covariance_check(&window, &noise, opts.covariance_samples);
            let shift = noise.sigma2() - opts.declared_sigma2.unwrap_or(noise.sigma2());
            let z = rep
                .deviation
                .iter()
                .zip(rep.std_error.iter())
                .enumerate()
                .map(|(idx, (dev, se))| {
                    let on_diagonal = idx % opts.d == idx / opts.d;
                    let dev = if on_diagonal { dev + shift } else { *dev };
                    if *se > 0.0 {
                        dev.abs() / se
                    } else if dev == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                })
                .fold(0.0, f64::max);
            Ok(Check::at_most(format!("{name}_max_z"), z, 4.0))
        })
        .collect()
}

/// Counted kernel operations per step for GD on one path.
pub fn ops_per_step(d: usize, blocks: usize, path: GradientPath) -> f64 {
    let consts = ProblemConstants::with_defaults(d, 1.0 / 3.0, 1.0, 1.0).expect("valid constants");
    let mut rng = rng_for(d as u64, INSTANCE_STREAM + 2);
    let obs: Vec<f64> = (0..blocks * consts.k()).map(|_| rng.random_range(-2.0..=2.0)).collect();
    let mut filter = GdFilter::new(consts).with_gradient_path(path);
    let ((), ops) = count_ops(|| {
        for &y in &obs {
            filter.step(y);
        }
    });
    ops as f64 / obs.len() as f64
}

/// Share of the largest-order cost explained by the quadratic term of a
/// least-squares fit `a + b d + c d^2`.
pub fn superlinear_share(dims: &[f64], cost: &[f64]) -> f64 {
    let x = DMatrix::from_fn(dims.len(), 3, |i, j| dims[i].powi(j as i32));
    let y = DVector::from_column_slice(cost);
    let coef = x.svd(true, true).solve(&y, 1e-12).expect("full rank design");
    let dmax = dims.iter().copied().fold(0.0, f64::max);
    let total = coef[0] + coef[1] * dmax + coef[2] * dmax * dmax;
    (coef[2] * dmax * dmax).max(0.0) / total
}

fn linear_time(opts: &VerifyOptions) -> Vec<Check> {
    let dims: Vec<f64> = opts.linear_dims.iter().map(|&d| d as f64).collect();
    let free: Vec<f64> = opts
        .linear_dims
        .iter()
        .map(|&d| ops_per_step(d, opts.linear_blocks, GradientPath::MatrixFree))
        .collect();
    let dense: Vec<f64> = opts
        .linear_dims
        .iter()
        .map(|&d| ops_per_step(d, opts.linear_blocks, GradientPath::Dense))
        .collect();
    let logs = |v: &[f64]| v.iter().map(|x| x.ln()).collect::<Vec<_>>();
    vec![
        Check::at_least("matrix_free_linear_r2", linear_fit(&dims, &free).r_squared, 0.95),
        Check::at_most("matrix_free_superlinear_share", superlinear_share(&dims, &free), 0.2),
        Check::at_least("dense_loglog_slope", linear_fit(&logs(&dims), &logs(&dense)).slope, 1.8),
    ]
}
