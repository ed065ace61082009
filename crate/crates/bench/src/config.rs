//! Experiment configuration.
//!
//! Files are flat `key = value` text with `#` comments. Every key is also a
//! command-line flag of the same name, and flags win over the file. Omitted
//! filter constants fall back to `k = 2d`, `H = d sigma2`,
//! `R = sqrt(d) B_X^2 / sigma2` and `alpha = d sigma2 / G(2d, R)^2`, with
//! `sigma2` taken from the noise model unless declared.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use unifilter::signal::load_replay;
use unifilter::{NoiseKind, NoiseSpec, ProblemConstants, SignalKind, SignalSpec};

use crate::algorithms::Algorithm;
use crate::error::{BenchError, Result};

/// Every recognised key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("T", "horizon in steps [4096]"),
    ("d", "filter order [4]"),
    ("k", "block length [2d]"),
    ("step_constant", "step-size constant H, step c is 1/(H c) [d sigma2]"),
    ("radius", "filter norm bound R [sqrt(d) B_X^2 / sigma2]"),
    ("alpha", "expert learning rate [d sigma2 / G(2d, R)^2]"),
    ("sigma2", "declared noise variance [implied by the noise model]"),
    ("bound_x", "signal bound B_X [1]"),
    ("bound_n", "noise bound B_N [1]"),
    ("algorithm", "gd, adaptive, zero or identity [gd]"),
    (
        "signal",
        "constant, sinusoid, piecewise-sinusoid, ar1, square-wave or adversarial-replay [sinusoid]",
    ),
    ("amplitude", "signal amplitude [B_X]"),
    (
        "period",
        "sinusoid or square-wave period; period before the switch [64]",
    ),
    ("period_after", "piecewise-sinusoid period after the switch [8]"),
    ("switch_at", "last step with the first period [T/2]"),
    ("phase", "sinusoid phase in radians [0]"),
    ("level", "constant signal level [amplitude]"),
    ("ar_coef", "ar1 coefficient in (-1, 1) [0.9]"),
    ("signal_seed", "seed of the ar1 innovations [0]"),
    ("replay", "sample file for adversarial-replay, one real per line"),
    ("noise", "uniform, rademacher or truncated-gaussian [uniform]"),
    ("noise_scale", "truncated-gaussian scale before truncation [B_N / 2]"),
    ("seed", "base seed [0]"),
    (
        "seeds",
        "seed list `N..M` (inclusive) or `a,b,c` [20 seeds from the base seed]",
    ),
    ("stride", "adaptive-regret scan stride [k]"),
    ("out", "output directory [out]"),
    ("horizons", "comma-separated regret-curve horizons [T/8,T/4,T/2,T]"),
    ("interval", "oracle interval `r..s` [1..T]"),
    ("threads", "worker threads, 0 for one per core [0]"),
];

const DEFAULT_SEEDS: u64 = 20;

/// Raw key-value settings, validated against [`KEYS`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap(BTreeMap<String, String>);

impl ConfigMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| BenchError::Syntax {
                line: i + 1,
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            map.set(key.trim(), value.trim())?;
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| BenchError::Input {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(BenchError::UnknownKey(key.to_string()));
        }
        self.0.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    /// Later settings replace earlier ones.
    pub fn merge(mut self, other: &ConfigMap) -> Self {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
        self
    }

    fn parsed<T: FromStr>(&self, key: &'static str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| BenchError::field(key, format!("`{v}`: {e}")))
            })
            .transpose()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub consts: ProblemConstants,
    pub horizon: usize,
    pub algorithm: Algorithm,
    pub signal: SignalSpec,
    /// Noise model; its seed is replaced by each run's seed.
    pub noise: NoiseSpec,
    /// Sorted, without duplicates.
    pub seeds: Vec<u64>,
    pub scan_stride: usize,
    pub out: PathBuf,
    pub horizons: Vec<usize>,
    pub interval: Option<(usize, usize)>,
    pub threads: usize,
}

impl ExperimentConfig {
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        let horizon: usize = map.parsed("T")?.unwrap_or(4096);
        if horizon == 0 {
            return Err(BenchError::field("T", "must be at least 1"));
        }
        let d: usize = map.parsed("d")?.unwrap_or(4);
        let bound_x: f64 = map.parsed("bound_x")?.unwrap_or(1.0);
        let bound_n: f64 = map.parsed("bound_n")?.unwrap_or(1.0);
        let seed: u64 = map.parsed("seed")?.unwrap_or(0);

        let noise = noise_spec(map, bound_n, seed)?;
        let sigma2 = match map.parsed::<f64>("sigma2")? {
            Some(s) => {
                if (s - noise.sigma2()).abs() > 1e-12 * noise.sigma2().max(1.0) {
                    log::warn!("declared sigma2 {s} differs from the noise variance {}", noise.sigma2());
                }
                s
            }
            None => noise.sigma2(),
        };
        let consts = ProblemConstants::builder(d, sigma2, bound_x, bound_n)
            .k_opt(map.parsed("k")?)
            .step_constant_opt(map.parsed("step_constant")?)
            .radius_opt(map.parsed("radius")?)
            .alpha_opt(map.parsed("alpha")?)
            .build()?;

        let algorithm = map.parsed("algorithm")?.unwrap_or(Algorithm::Gd);
        let signal = signal_spec(map, bound_x, horizon)?;
        let seeds = match map.get("seeds") {
            Some(v) => parse_seeds(v)?,
            None => (seed..seed.saturating_add(DEFAULT_SEEDS)).collect(),
        };
        let scan_stride: usize = map.parsed("stride")?.unwrap_or(consts.k());
        if scan_stride == 0 {
            return Err(BenchError::field("stride", "must be at least 1"));
        }
        let horizons = match map.get("horizons") {
            Some(v) => v
                .split(',')
                .map(|h| h.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| BenchError::field("horizons", e.to_string()))?,
            None => {
                let mut hs: Vec<usize> = [8, 4, 2, 1].iter().map(|f| horizon / f).filter(|&h| h > 0).collect();
                hs.dedup();
                hs
            }
        };
        let interval = map.get("interval").map(parse_interval).transpose()?;
        Ok(Self {
            consts,
            horizon,
            algorithm,
            signal,
            noise,
            seeds,
            scan_stride,
            out: map.get("out").unwrap_or("out").into(),
            horizons,
            interval,
            threads: map.parsed("threads")?.unwrap_or(0),
        })
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::from_map(&ConfigMap::new()).expect("built-in defaults are valid")
    }
}

fn noise_spec(map: &ConfigMap, bound_n: f64, seed: u64) -> Result<NoiseSpec> {
    let kind = match map.get("noise").unwrap_or("uniform") {
        "uniform" => NoiseKind::Uniform,
        "rademacher" => NoiseKind::Rademacher,
        "truncated-gaussian" => NoiseKind::TruncatedGaussian {
            scale: map.parsed("noise_scale")?.unwrap_or(bound_n / 2.0),
        },
        other => return Err(BenchError::field("noise", format!("unknown noise kind `{other}`"))),
    };
    NoiseSpec::new(kind, bound_n, seed).map_err(|e| BenchError::field("noise", e.to_string()))
}

fn signal_spec(map: &ConfigMap, bound_x: f64, horizon: usize) -> Result<SignalSpec> {
    let amplitude: f64 = map.parsed("amplitude")?.unwrap_or(bound_x);
    let phase: f64 = map.parsed("phase")?.unwrap_or(0.0);
    let period: f64 = map.parsed("period")?.unwrap_or(64.0);
    let kind = match map.get("signal").unwrap_or("sinusoid") {
        "constant" => SignalKind::Constant {
            level: map.parsed("level")?.unwrap_or(amplitude),
        },
        "sinusoid" => SignalKind::Sinusoid {
            amplitude,
            period,
            phase,
        },
        "piecewise-sinusoid" => SignalKind::PiecewiseSinusoid {
            amplitude,
            before: period,
            after: map.parsed("period_after")?.unwrap_or(8.0),
            switch_at: map.parsed("switch_at")?.unwrap_or(horizon / 2),
            phase,
        },
        "ar1" => SignalKind::Ar1 {
            coef: map.parsed("ar_coef")?.unwrap_or(0.9),
            amplitude,
            seed: map.parsed("signal_seed")?.unwrap_or(0),
        },
        "square-wave" => {
            if period.fract() != 0.0 || period < 1.0 {
                return Err(BenchError::field(
                    "period",
                    "square-wave period must be a positive integer",
                ));
            }
            SignalKind::SquareWave {
                amplitude,
                period: period as usize,
            }
        }
        "adversarial-replay" => {
            let path = map
                .get("replay")
                .ok_or_else(|| BenchError::field("replay", "adversarial-replay needs a sample file"))?;
            return load_replay(Path::new(path), bound_x).map_err(|e| BenchError::field("replay", e.to_string()));
        }
        other => return Err(BenchError::field("signal", format!("unknown signal kind `{other}`"))),
    };
    SignalSpec::new(kind, bound_x).map_err(|e| BenchError::field("signal", e.to_string()))
}

/// `N..M` is inclusive on both ends; a comma list is taken as given. The
/// result is sorted and deduplicated.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = |e: std::num::ParseIntError| BenchError::field("seeds", format!("`{text}`: {e}"));
    let mut seeds: Vec<u64> = if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(bad)?;
        let b: u64 = b.trim().trim_start_matches('=').parse().map_err(bad)?;
        if a > b {
            return Err(BenchError::field("seeds", format!("empty range `{text}`")));
        }
        (a..=b).collect()
    } else {
        text.split(',')
            .map(|s| s.trim().parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(bad)?
    };
    seeds.sort_unstable();
    seeds.dedup();
    Ok(seeds)
}

fn parse_interval(text: &str) -> Result<(usize, usize)> {
    let bad = || BenchError::field("interval", format!("expected `r..s`, got `{text}`"));
    let (r, s) = text.split_once("..").ok_or_else(bad)?;
    let r = r.trim().parse().map_err(|_| bad())?;
    let s = s.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
    Ok((r, s))
}
