//! Seedable signal and noise generators.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)`. Streams are split by ChaCha stream id:
//!
//! * stream 0: observation noise,
//! * stream 1: AR(1) signal innovations.
//!
//! Uniform variates are `(next_u64() >> 11) * 2^-53` and Rademacher signs are
//! the top bit of `next_u64()`, so those two kinds are reproducible from the
//! ChaCha8 keystream alone.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{FilterError, Result};
use crate::types::ObservationWindow;

pub const NOISE_STREAM: u64 = 0;
pub const SIGNAL_STREAM: u64 = 1;

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform on `[0, 1)` with 53 random bits.
pub fn unit_uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SignalKind {
    Constant {
        level: f64,
    },
    /// `A sin(2 pi t / period + phase)` for `t = 1, 2, ...`
    Sinusoid {
        amplitude: f64,
        period: f64,
        phase: f64,
    },
    /// Period `before` for `t <= switch_at`, `after` from then on.
    PiecewiseSinusoid {
        amplitude: f64,
        before: f64,
        after: f64,
        switch_at: usize,
        phase: f64,
    },
    /// `x_t = coef x_{t-1} + (1 - |coef|) A u_t` with `u_t` uniform on
    /// `[-1, 1)`, which keeps `|x_t| <= A`.
    Ar1 {
        coef: f64,
        amplitude: f64,
        seed: u64,
    },
    SquareWave {
        amplitude: f64,
        period: usize,
    },
    Replay {
        samples: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    kind: SignalKind,
    bound_x: f64,
}

impl SignalSpec {
    pub fn new(kind: SignalKind, bound_x: f64) -> Result<Self> {
        let bad = |m: String| Err(FilterError::InvalidSignal(m));
        if !(bound_x.is_finite() && bound_x > 0.0) {
            return bad(format!("bound {bound_x} must be finite and positive"));
        }
        let within = |a: f64, what: &str| -> Result<()> {
            if a.is_finite() && a.abs() <= bound_x {
                Ok(())
            } else {
                Err(FilterError::InvalidSignal(format!(
                    "{what} {a} exceeds the bound {bound_x}"
                )))
            }
        };
        let period_ok = |p: f64| -> Result<()> {
            if p.is_finite() && p > 0.0 {
                Ok(())
            } else {
                Err(FilterError::InvalidSignal(format!("period {p} must be positive")))
            }
        };
        match &kind {
            SignalKind::Constant { level } => within(*level, "level")?,
            SignalKind::Sinusoid { amplitude, period, .. } => {
                within(*amplitude, "amplitude")?;
                period_ok(*period)?;
            }
            SignalKind::PiecewiseSinusoid {
                amplitude,
                before,
                after,
                ..
            } => {
                within(*amplitude, "amplitude")?;
                period_ok(*before)?;
                period_ok(*after)?;
            }
            SignalKind::Ar1 { coef, amplitude, .. } => {
                within(*amplitude, "amplitude")?;
                if coef.is_nan() || coef.abs() >= 1.0 {
                    return bad(format!("AR coefficient {coef} must lie in (-1, 1)"));
                }
            }
            SignalKind::SquareWave { amplitude, period } => {
                within(*amplitude, "amplitude")?;
                if *period == 0 {
                    return bad("square-wave period must be positive".into());
                }
            }
            SignalKind::Replay { samples } => {
                if samples.is_empty() {
                    return Err(FilterError::EmptyReplay);
                }
                for (i, &x) in samples.iter().enumerate() {
                    if !(x.is_finite() && x.abs() <= bound_x) {
                        return Err(FilterError::Replay {
                            line: i + 1,
                            reason: format!("sample {x} exceeds the bound {bound_x}"),
                        });
                    }
                }
            }
        }
        Ok(Self { kind, bound_x })
    }

    pub fn kind(&self) -> &SignalKind {
        &self.kind
    }

    pub fn bound_x(&self) -> f64 {
        self.bound_x
    }

    /// `x_1, ..., x_T`. A replayed signal shorter than `T` wraps around.
    pub fn generate(&self, horizon: usize) -> Vec<f64> {
        let ts = 1..=horizon;
        let clip = |x: f64| x.clamp(-self.bound_x, self.bound_x);
        let out: Vec<f64> = match &self.kind {
            SignalKind::Constant { level } => vec![*level; horizon],
            SignalKind::Sinusoid {
                amplitude,
                period,
                phase,
            } => ts
                .map(|t| amplitude * (2.0 * PI * t as f64 / period + phase).sin())
                .collect(),
            SignalKind::PiecewiseSinusoid {
                amplitude,
                before,
                after,
                switch_at,
                phase,
            } => ts
                .map(|t| {
                    let p = if t <= *switch_at { before } else { after };
                    amplitude * (2.0 * PI * t as f64 / p + phase).sin()
                })
                .collect(),
            SignalKind::Ar1 { coef, amplitude, seed } => {
                let mut rng = rng_for(*seed, SIGNAL_STREAM);
                let mut x = 0.0;
                ts.map(|_| {
                    let u = 2.0 * unit_uniform(&mut rng) - 1.0;
                    x = coef * x + (1.0 - coef.abs()) * amplitude * u;
                    x
                })
                .collect()
            }
            SignalKind::SquareWave { amplitude, period } => ts
                .map(|t| {
                    if ((t - 1) / period) % 2 == 0 {
                        *amplitude
                    } else {
                        -amplitude
                    }
                })
                .collect(),
            SignalKind::Replay { samples } => samples.iter().copied().cycle().take(horizon).collect(),
        };
        // sin can overshoot the amplitude by an ulp
        out.into_iter().map(clip).collect()
    }
}

/// Parses a replay file: one decimal real per line, no header. A single
/// trailing newline is allowed.
pub fn parse_replay(text: &str, bound_x: f64) -> Result<SignalSpec> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.trim().is_empty() {
        return Err(FilterError::EmptyReplay);
    }
    let mut samples = Vec::new();
    for (i, line) in body.split('\n').enumerate() {
        let cleaned = line.trim().replace('\u{2212}', "-");
        let x: f64 = cleaned.parse().map_err(|_| FilterError::Replay {
            line: i + 1,
            reason: format!("cannot parse `{line}` as a real"),
        })?;
        samples.push(x);
    }
    SignalSpec::new(SignalKind::Replay { samples }, bound_x)
}

pub fn load_replay(path: &Path, bound_x: f64) -> Result<SignalSpec> {
    parse_replay(&std::fs::read_to_string(path)?, bound_x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    /// Uniform on `[-B, B)`; variance `B^2 / 3`.
    Uniform,
    /// `+-B` with equal probability; variance `B^2`.
    Rademacher,
    /// `N(0, scale^2)` conditioned on `[-B, B]`.
    TruncatedGaussian { scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    kind: NoiseKind,
    bound_n: f64,
    sigma2: f64,
    seed: u64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, bound_n: f64, seed: u64) -> Result<Self> {
        if !(bound_n.is_finite() && bound_n >= 0.0) {
            return Err(FilterError::InvalidNoise(format!(
                "bound {bound_n} must be finite and nonnegative"
            )));
        }
        // bound 0 is the noiseless control: every draw is exactly zero
        let sigma2 = match kind {
            _ if bound_n == 0.0 => 0.0,
            NoiseKind::Uniform => bound_n * bound_n / 3.0,
            NoiseKind::Rademacher => bound_n * bound_n,
            NoiseKind::TruncatedGaussian { scale } => {
                if !(scale.is_finite() && scale > 0.0) {
                    return Err(FilterError::InvalidNoise(format!(
                        "gaussian scale {scale} must be finite and positive"
                    )));
                }
                truncated_gaussian_variance(scale, bound_n)
            }
        };
        Ok(Self {
            kind,
            bound_n,
            sigma2,
            seed,
        })
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }
    pub fn bound_n(&self) -> f64 {
        self.bound_n
    }
    /// The exact variance of one draw.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sampler(&self) -> NoiseSampler {
        NoiseSampler {
            kind: self.kind,
            bound: self.bound_n,
            rng: rng_for(self.seed, NOISE_STREAM),
        }
    }

    pub fn generate(&self, horizon: usize) -> Vec<f64> {
        self.sampler().take(horizon).collect()
    }
}

/// Infinite i.i.d. noise stream.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    kind: NoiseKind,
    bound: f64,
    rng: ChaCha8Rng,
}

impl Iterator for NoiseSampler {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let b = self.bound;
        if b == 0.0 {
            return Some(0.0);
        }
        Some(match self.kind {
            NoiseKind::Uniform => b * (2.0 * unit_uniform(&mut self.rng) - 1.0),
            NoiseKind::Rademacher => {
                if self.rng.next_u64() >> 63 == 1 {
                    b
                } else {
                    -b
                }
            }
            NoiseKind::TruncatedGaussian { scale } => loop {
                let z: f64 = self.rng.sample(StandardNormal);
                let n = scale * z;
                if n.abs() <= b {
                    break n;
                }
            },
        })
    }
}

/// Variance of `N(0, scale^2)` truncated to `[-bound, bound]`:
/// `scale^2 (1 - 2 beta phi(beta) / (2 Phi(beta) - 1))`, `beta = bound / scale`.
pub fn truncated_gaussian_variance(scale: f64, bound: f64) -> f64 {
    let std = Normal::standard();
    let beta = bound / scale;
    let mass = 2.0 * std.cdf(beta) - 1.0;
    scale * scale * (1.0 - 2.0 * beta * std.pdf(beta) / mass)
}

/// Observation windows for every step, zeros before the first sample.
pub fn build_windows(observations: &[f64], d: usize) -> Vec<ObservationWindow> {
    (0..observations.len())
        .map(|t| ObservationWindow::new((0..d).map(|i| if i <= t { observations[t - i] } else { 0.0 }).collect()))
        .collect()
}

/// An experiment's input: clean signal, noise and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub signal: Vec<f64>,
    pub noise: Vec<f64>,
    pub observations: Vec<f64>,
}

pub fn realize(signal: &SignalSpec, noise: &NoiseSpec, horizon: usize) -> Realization {
    let x = signal.generate(horizon);
    let n = noise.generate(horizon);
    let y = x.iter().zip(&n).map(|(a, b)| a + b).collect();
    Realization {
        signal: x,
        noise: n,
        observations: y,
    }
}
