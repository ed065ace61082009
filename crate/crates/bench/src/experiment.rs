//! Seeded runs, traces, summaries, regret curves and oracle reports.
//!
//! Every seed is an independent sequential run; seeds execute on a rayon
//! pool and results are sorted by seed before anything is written, so the
//! output does not depend on scheduling.

use std::path::Path;

use rayon::prelude::*;
use unifilter::signal::realize;
use unifilter::{
    adaptive_regret_scan, best_fixed_filter, build_windows, surrogate_loss, true_loss, LossPrefix, PrefixSummaries,
};

use crate::algorithms::build_filter;
use crate::config::ExperimentConfig;
use crate::error::{BenchError, Result};
use crate::output::{ensure_dir, finish, real, writer};
use crate::stats::{linear_fit, mean_and_se, LinearFit};

/// One seeded run of the configured algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub seed: u64,
    pub signal: Vec<f64>,
    pub observations: Vec<f64>,
    pub predictions: Vec<f64>,
    pub true_losses: Vec<f64>,
    pub surrogate_losses: Vec<f64>,
}

pub fn simulate(config: &ExperimentConfig, seed: u64, horizon: usize) -> Result<Simulation> {
    let consts = &config.consts;
    let re = realize(&config.signal, &config.noise.with_seed(seed), horizon);
    let windows = build_windows(&re.observations, consts.d());
    let mut filter = build_filter(config.algorithm, consts);
    let mut predictions = Vec::with_capacity(horizon);
    let mut true_losses = Vec::with_capacity(horizon);
    let mut surrogate_losses = Vec::with_capacity(horizon);
    for ((&x, &y), window) in re.signal.iter().zip(&re.observations).zip(&windows) {
        let w = filter.filter().clone();
        predictions.push(filter.step(y));
        true_losses.push(true_loss(x, &w, window)?);
        surrogate_losses.push(surrogate_loss(y, &w, window, consts)?);
    }
    Ok(Simulation {
        seed,
        signal: re.signal,
        observations: re.observations,
        predictions,
        true_losses,
        surrogate_losses,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedSummary {
    pub seed: u64,
    pub horizon: usize,
    pub cumulative_true_loss: f64,
    pub oracle_loss_full: f64,
    pub regret_full: f64,
    /// Worst regret over the scanned intervals.
    pub adaptive_regret: f64,
    pub worst_interval_r: usize,
    pub worst_interval_s: usize,
}

pub fn summarize(config: &ExperimentConfig, sim: &Simulation) -> Result<SeedSummary> {
    let consts = &config.consts;
    let horizon = sim.signal.len();
    let prefix = PrefixSummaries::new(&sim.signal, &sim.observations, consts.d());
    let losses = LossPrefix::new(&sim.true_losses);
    let oracle = best_fixed_filter(&prefix.interval(1, horizon)?, consts.radius());
    let cumulative = losses.sum(1, horizon);
    let worst = adaptive_regret_scan(&losses, &prefix, consts.radius(), config.scan_stride)?;
    Ok(SeedSummary {
        seed: sim.seed,
        horizon,
        cumulative_true_loss: cumulative,
        oracle_loss_full: oracle.loss,
        regret_full: cumulative - oracle.loss,
        adaptive_regret: worst.value,
        worst_interval_r: worst.r,
        worst_interval_s: worst.s,
    })
}

pub(crate) fn in_pool<R: Send>(threads: usize, job: impl FnOnce() -> R + Send) -> R {
    if threads == 0 {
        return job();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(job),
        Err(e) => {
            log::warn!("falling back to the global pool: {e}");
            job()
        }
    }
}

fn per_seed<T: Send>(config: &ExperimentConfig, job: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    in_pool(config.threads, || config.seeds.par_iter().map(|&s| job(s)).collect())
}

/// Writes `trace_seed_<seed>.csv` for every seed and `summary.csv` into the
/// output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<SeedSummary>> {
    ensure_dir(&config.out)?;
    let mut summaries = per_seed(config, |seed| {
        let sim = simulate(config, seed, config.horizon)?;
        write_trace(&sim, &config.out.join(format!("trace_seed_{seed}.csv")))?;
        summarize(config, &sim)
    })?;
    summaries.sort_by_key(|s| s.seed);
    write_summary(&summaries, &config.out.join("summary.csv"))?;
    Ok(summaries)
}

pub fn write_trace(sim: &Simulation, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "x", "y", "prediction", "true_loss", "surrogate_loss"])?;
    for t in 0..sim.signal.len() {
        w.write_record([
            (t + 1).to_string(),
            real(sim.signal[t]),
            real(sim.observations[t]),
            real(sim.predictions[t]),
            real(sim.true_losses[t]),
            real(sim.surrogate_losses[t]),
        ])?;
    }
    finish(w, path)
}

pub fn write_summary(summaries: &[SeedSummary], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "seed",
        "T",
        "cumulative_true_loss",
        "oracle_loss_full",
        "regret_full",
        "adaptive_regret",
        "worst_interval_r",
        "worst_interval_s",
    ])?;
    for s in summaries {
        w.write_record([
            s.seed.to_string(),
            s.horizon.to_string(),
            real(s.cumulative_true_loss),
            real(s.oracle_loss_full),
            real(s.regret_full),
            real(s.adaptive_regret),
            s.worst_interval_r.to_string(),
            s.worst_interval_s.to_string(),
        ])?;
    }
    finish(w, path)
}

/// Summaries only, written to `scan.csv`.
pub fn run_scan(config: &ExperimentConfig) -> Result<Vec<SeedSummary>> {
    ensure_dir(&config.out)?;
    let mut summaries = per_seed(config, |seed| {
        summarize(config, &simulate(config, seed, config.horizon)?)
    })?;
    summaries.sort_by_key(|s| s.seed);
    let path = config.out.join("scan.csv");
    let mut w = writer(&path)?;
    w.write_record([
        "seed",
        "T",
        "stride",
        "worst_interval_r",
        "worst_interval_s",
        "adaptive_regret",
    ])?;
    for s in &summaries {
        w.write_record([
            s.seed.to_string(),
            s.horizon.to_string(),
            config.scan_stride.to_string(),
            s.worst_interval_r.to_string(),
            s.worst_interval_s.to_string(),
            real(s.adaptive_regret),
        ])?;
    }
    finish(w, &path)?;
    Ok(summaries)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub horizon: usize,
    pub mean_regret: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub points: Vec<CurvePoint>,
    /// Mean regret against `ln T`.
    pub log_fit: LinearFit,
    /// Mean regret against `T`.
    pub linear_fit: LinearFit,
    /// `(seed, regret at each horizon)`, sorted by seed.
    pub per_seed: Vec<(u64, Vec<f64>)>,
}

/// Regret against the full-prefix oracle at each horizon. One run per seed to
/// the largest horizon serves every shorter one, since the algorithms are
/// online and the generators are prefix-stable.
pub fn regret_curve(config: &ExperimentConfig, horizons: &[usize]) -> Result<Curve> {
    if horizons.len() < 3 {
        return Err(BenchError::TooFewHorizons(horizons.len()));
    }
    if horizons[0] == 0 || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BenchError::UnsortedHorizons);
    }
    let max = *horizons.last().expect("non-empty");
    let radius = config.consts.radius();
    let mut per_seed = per_seed(config, |seed| {
        let sim = simulate(config, seed, max)?;
        let prefix = PrefixSummaries::new(&sim.signal, &sim.observations, config.consts.d());
        let losses = LossPrefix::new(&sim.true_losses);
        let regrets = horizons
            .iter()
            .map(|&h| Ok(losses.sum(1, h) - best_fixed_filter(&prefix.interval(1, h)?, radius).loss))
            .collect::<Result<Vec<_>>>()?;
        Ok((seed, regrets))
    })?;
    per_seed.sort_by_key(|(s, _)| *s);
    let points: Vec<CurvePoint> = horizons
        .iter()
        .enumerate()
        .map(|(i, &horizon)| {
            let column: Vec<f64> = per_seed.iter().map(|(_, r)| r[i]).collect();
            let (mean_regret, std_error) = mean_and_se(&column);
            CurvePoint {
                horizon,
                mean_regret,
                std_error,
            }
        })
        .collect();
    let means: Vec<f64> = points.iter().map(|p| p.mean_regret).collect();
    let logs: Vec<f64> = horizons.iter().map(|&h| (h as f64).ln()).collect();
    let lins: Vec<f64> = horizons.iter().map(|&h| h as f64).collect();
    Ok(Curve {
        log_fit: linear_fit(&logs, &means),
        linear_fit: linear_fit(&lins, &means),
        points,
        per_seed,
    })
}

/// `curve.csv` with one row per horizon and `curve_fit.csv` with both fits.
pub fn write_curve(curve: &Curve, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    let path = dir.join("curve.csv");
    let mut w = writer(&path)?;
    w.write_record(["T", "seeds", "mean_regret", "std_error"])?;
    for p in &curve.points {
        w.write_record([
            p.horizon.to_string(),
            curve.per_seed.len().to_string(),
            real(p.mean_regret),
            real(p.std_error),
        ])?;
    }
    finish(w, &path)?;
    let path = dir.join("curve_fit.csv");
    let mut w = writer(&path)?;
    w.write_record(["model", "intercept", "slope", "r_squared"])?;
    for (name, fit) in [("ln_T", &curve.log_fit), ("T", &curve.linear_fit)] {
        w.write_record([
            name.to_string(),
            real(fit.intercept),
            real(fit.slope),
            real(fit.r_squared),
        ])?;
    }
    finish(w, &path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub seed: u64,
    pub r: usize,
    pub s: usize,
    pub loss: f64,
    pub lambda: f64,
    pub weights: Vec<f64>,
}

/// Best fixed filter on the configured interval (default the full horizon)
/// for every seed, written to `oracle.csv`.
pub fn run_oracle(config: &ExperimentConfig) -> Result<Vec<OracleRow>> {
    ensure_dir(&config.out)?;
    let (r, s) = config.interval.unwrap_or((1, config.horizon));
    let d = config.consts.d();
    let mut rows = per_seed(config, |seed| {
        let re = realize(&config.signal, &config.noise.with_seed(seed), config.horizon);
        let summary = PrefixSummaries::new(&re.signal, &re.observations, d).interval(r, s)?;
        let sol = best_fixed_filter(&summary, config.consts.radius());
        Ok(OracleRow {
            seed,
            r,
            s,
            loss: sol.loss,
            lambda: sol.lambda,
            weights: sol.weights,
        })
    })?;
    rows.sort_by_key(|row| row.seed);
    let path = config.out.join("oracle.csv");
    let mut w = writer(&path)?;
    let mut header: Vec<String> = ["seed", "r", "s", "loss", "lambda"].map(String::from).to_vec();
    header.extend((1..=d).map(|i| format!("w{i}")));
    w.write_record(&header)?;
    for row in &rows {
        let mut rec = vec![
            row.seed.to_string(),
            row.r.to_string(),
            row.s.to_string(),
            real(row.loss),
            real(row.lambda),
        ];
        rec.extend(row.weights.iter().map(|&v| real(v)));
        w.write_record(&rec)?;
    }
    finish(w, &path)?;
    Ok(rows)
}
