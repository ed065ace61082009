mod common;

use common::*;
use rand::Rng;
use unifilter::kernels::count_ops;
use unifilter::signal::realize;
use unifilter::{
    block_loss_gradient, gd_run, interval_regret, project_to_ball, BlockRecord, BlockSample, FilterWeights, GdFilter,
    GradientPath, LossPrefix, NoiseKind, NoiseSpec, OnlineFilter, PrefixSummaries, ProblemConstants, SignalKind,
    SignalSpec,
};

fn stream(seed: u64, len: usize, bound: f64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..len).map(|_| r.random_range(-bound..=bound)).collect()
}

#[test]
fn filters_stay_in_ball_even_on_out_of_bound_input() {
    for d in [1, 2, 5] {
        let c = ProblemConstants::builder(d, 0.3, 1.0, 0.5).radius(0.7).build().unwrap();
        let obs = stream(d as u64, 2000, 4.0);
        let out = gd_run(&c, &obs).unwrap();
        assert!(out.block_filters.iter().all(|w| w.norm() <= c.radius() + 1e-12));
    }
}

#[test]
fn filter_on_block_depends_only_on_earlier_blocks() {
    let c = ProblemConstants::with_defaults(3, 0.4, 1.0, 1.0).unwrap();
    let k = c.k();
    let obs = stream(11, 40 * k, 2.0);
    let base = gd_run(&c, &obs).unwrap();
    for block in [1usize, 5, 17, 39] {
        let mut altered = obs.clone();
        let mut r = rng(block as u64);
        for y in &mut altered[(block - 1) * k..] {
            *y = r.random_range(-2.0..=2.0);
        }
        let out = gd_run(&c, &altered).unwrap();
        assert_eq!(out.block_filters[..block], base.block_filters[..block]);
        assert_eq!(out.predictions[..(block - 1) * k], base.predictions[..(block - 1) * k]);
    }
}

#[test]
fn identical_inputs_give_identical_runs() {
    let c = ProblemConstants::with_defaults(4, 0.5, 1.0, 1.0).unwrap();
    let obs = stream(3, 5000, 2.0);
    let a = gd_run(&c, &obs).unwrap();
    let b = gd_run(&c, &obs).unwrap();
    let bits = |v: &[FilterWeights]| -> Vec<u64> {
        v.iter()
            .flat_map(|w| w.as_slice().iter().map(|x| x.to_bits()))
            .collect()
    };
    assert_eq!(bits(&a.block_filters), bits(&b.block_filters));
}

#[test]
fn each_update_is_a_projected_step_of_size_one_over_hc() {
    let c = ProblemConstants::with_defaults(2, 0.5, 1.0, 1.0).unwrap();
    let (d, k) = (c.d(), c.k());
    let obs = stream(21, 30 * k, 2.0);
    let out = gd_run(&c, &obs).unwrap();
    let windows = unifilter::build_windows(&obs, d);
    for blk in 1..30 {
        let w = &out.block_filters[blk - 1];
        let samples = ((blk - 1) * k..blk * k)
            .map(|t| BlockSample {
                y: obs[t],
                window: windows[t].clone(),
            })
            .collect();
        let record = BlockRecord::new(blk, samples, w.clone());
        let g = block_loss_gradient(&record, w, &c).unwrap();
        let eta = 1.0 / (c.step_constant() * blk as f64);
        let stepped = FilterWeights::new(w.as_slice().iter().zip(&g).map(|(a, b)| a - eta * b).collect());
        let expected = project_to_ball(stepped, c.radius());
        for (x, y) in expected.as_slice().iter().zip(out.block_filters[blk].as_slice()) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }
}

#[test]
fn single_block_run_equals_manual_steps() {
    let c = ProblemConstants::with_defaults(2, 0.5, 1.0, 1.0).unwrap();
    let obs = stream(9, c.k(), 1.5);
    let run = gd_run(&c, &obs).unwrap();
    let mut f = GdFilter::new(c.clone());
    let manual: Vec<f64> = obs.iter().map(|&y| f.step(y)).collect();
    assert_eq!(run.predictions, manual);
}

#[test]
fn regret_grows_sublinearly_on_stationary_sinusoid() {
    let d = 2;
    let signal = SignalSpec::new(
        SignalKind::Sinusoid {
            amplitude: 1.0,
            period: 32.0,
            phase: 0.0,
        },
        1.0,
    )
    .unwrap();
    let noise = NoiseSpec::new(NoiseKind::Uniform, 1.0, 7).unwrap();
    let c = ProblemConstants::with_defaults(d, noise.sigma2(), 1.0, 1.0).unwrap();
    let horizon = 10_000;
    let re = realize(&signal, &noise, horizon);
    let out = gd_run(&c, &re.observations).unwrap();
    let losses = LossPrefix::new(&true_losses(&re.signal, &out.predictions));
    let prefix = PrefixSummaries::new(&re.signal, &re.observations, d);
    let full = interval_regret(&losses, &prefix, 1, horizon, c.radius()).unwrap();
    let half = interval_regret(&losses, &prefix, 1, horizon / 2, c.radius()).unwrap();
    assert!(full > 0.0 && half > 0.0);
    assert!(full / half < 1.5, "regret(T) = {full}, regret(T/2) = {half}");
}

#[test]
fn work_per_step_is_linear_in_order() {
    let per_step = |d: usize, path: GradientPath| -> f64 {
        let c = ProblemConstants::with_defaults(d, 0.5, 1.0, 1.0).unwrap();
        let obs = stream(d as u64, 8 * c.k(), 1.5);
        let mut f = GdFilter::new(c).with_gradient_path(path);
        let ((), ops) = count_ops(|| {
            for &y in &obs {
                f.step(y);
            }
        });
        ops as f64 / obs.len() as f64
    };
    let lin: Vec<f64> = [8, 16, 32]
        .iter()
        .map(|&d| per_step(d, GradientPath::MatrixFree))
        .collect();
    let dense: Vec<f64> = [8, 16, 32].iter().map(|&d| per_step(d, GradientPath::Dense)).collect();
    // doubling d roughly doubles matrix-free work and quadruples dense work
    for w in lin.windows(2) {
        assert!((w[1] / w[0] - 2.0).abs() < 0.2, "{lin:?}");
    }
    for w in dense.windows(2) {
        assert!(w[1] / w[0] > 3.5, "{dense:?}");
    }
}
