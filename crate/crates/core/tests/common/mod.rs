#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unifilter::{BlockRecord, BlockSample, FilterWeights, ObservationWindow, ProblemConstants};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point in the centered ball of `radius`.
pub fn point_in_ball(rng: &mut ChaCha8Rng, d: usize, radius: f64) -> FilterWeights {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-radius..=radius)).collect();
        if v.iter().map(|x| x * x).sum::<f64>() <= radius * radius {
            return FilterWeights::new(v);
        }
    }
}

/// Random constants with `k = 2d`, plus a block of observations within the
/// bounds whose windows run across a random history.
pub fn random_instance(rng: &mut ChaCha8Rng, max_d: usize) -> (ProblemConstants, BlockRecord, FilterWeights) {
    let d = rng.random_range(1..=max_d);
    let sigma2 = rng.random_range(0.05..2.0);
    let bx = rng.random_range(0.2..2.0);
    let bn = rng.random_range(0.2..2.0);
    let c = ProblemConstants::builder(d, sigma2, bx, bn)
        .radius(rng.random_range(0.2..4.0))
        .build()
        .unwrap();
    let block = random_block(rng, &c);
    let w = point_in_ball(rng, d, c.radius());
    (c, block, w)
}

pub fn random_block(rng: &mut ChaCha8Rng, c: &ProblemConstants) -> BlockRecord {
    let (d, k) = (c.d(), c.k());
    let b = c.observation_bound();
    let stream: Vec<f64> = (0..k + d - 1).map(|_| rng.random_range(-b..=b)).collect();
    let samples = (d - 1..k + d - 1)
        .map(|t| BlockSample {
            y: stream[t],
            window: ObservationWindow::new((0..d).map(|i| stream[t - i]).collect()),
        })
        .collect();
    BlockRecord::new(1, samples, point_in_ball(rng, d, c.radius()))
}

pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut p = x.to_vec();
            p[i] += h;
            let mut m = x.to_vec();
            m[i] -= h;
            (f(&p) - f(&m)) / (2.0 * h)
        })
        .collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn true_losses(signal: &[f64], predictions: &[f64]) -> Vec<f64> {
    signal.iter().zip(predictions).map(|(x, p)| (x - p) * (x - p)).collect()
}
