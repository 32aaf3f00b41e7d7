mod common;

use commdet::encoder::{self, Activation};
use commdet::membership::{SimilarityMode, SoftmaxSign};
use commdet::training::gradcheck::{check_gradient, relative_error};
use commdet::training::{Objective, TrainConfig};

const REL_TOL: f64 = 1e-5;

fn sampled_error(act: Activation, sim: SimilarityMode, sign: SoftmaxSign, alpha: f64, delta: f64, seed: u64) -> f64 {
    let (g, fr) = common::gradcheck_problem(seed);
    let cfg = TrainConfig {
        alpha,
        delta,
        activation: act,
        sim_mode: sim,
        sign,
        dim: 8,
        ..Default::default()
    };
    let pm = encoder::build_propagation(&g);
    let obj = Objective::<f64>::new(&g, &pm, &fr, &cfg);
    let w = encoder::init_weights::<f64>(12, 8, seed + 100);
    relative_error(&check_gradient(&obj, w.view(), 20, seed).unwrap())
}

#[test]
fn analytic_gradient_matches_finite_differences_everywhere() {
    for act in [Activation::Relu, Activation::Tanh, Activation::Identity] {
        for sim in [SimilarityMode::Cosine, SimilarityMode::Dot] {
            for sign in [SoftmaxSign::Plus, SoftmaxSign::Minus] {
                for seed in 0..3 {
                    let err = sampled_error(act, sim, sign, 1.0, 5.0, seed);
                    assert!(err <= REL_TOL, "{act:?} {sim:?} {sign:?} seed {seed}: {err:e}");
                }
            }
        }
    }
}

#[test]
fn gradient_check_at_default_temperature_and_scale() {
    for sim in [SimilarityMode::Cosine, SimilarityMode::Dot] {
        let err = sampled_error(Activation::Tanh, sim, SoftmaxSign::Plus, 0.001, 30.0, 7);
        assert!(err <= REL_TOL, "{sim:?}: {err:e}");
    }
}

#[test]
fn large_entries_also_agree_individually() {
    let (g, fr) = common::gradcheck_problem(11);
    let cfg = TrainConfig { alpha: 1.0, delta: 5.0, dim: 8, ..Default::default() };
    let pm = encoder::build_propagation(&g);
    let obj = Objective::<f64>::new(&g, &pm, &fr, &cfg);
    let samples = check_gradient(&obj, encoder::init_weights::<f64>(12, 8, 5).view(), 96, 0).unwrap();
    let largest = samples.iter().map(|s| s.numeric.abs()).fold(0.0, f64::max);
    for s in samples.iter().filter(|s| s.numeric.abs() > 0.01 * largest) {
        assert!(s.relative_error(0.0) <= REL_TOL, "{s:?}");
    }
}
