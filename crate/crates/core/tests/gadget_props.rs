//! Threshold gadgets decide `ell <= g(v)` and `g(v) <= u` exactly.

mod common;

use ensrob_core::attacks::zero_one_loss;
use ensrob_core::gadgets::{build_lower_gadget, build_reduction, build_upper_gadget};
use ensrob_core::{IntervalBox, Layer, NeuralNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CASES: usize = 1000;

fn loss_at(c: &NeuralNetwork, v: &[f64]) -> u8 {
    zero_one_loss(c, &vec![0.0; v.len()], v, 1, 0.0).unwrap()
}

/// Thresholds drawn near `gv`, with exact ties a quarter of the time.
fn threshold(rng: &mut impl Rng, gv: f64) -> f64 {
    if rng.gen_bool(0.25) {
        gv
    } else {
        gv + rng.gen_range(-2.0..2.0)
    }
}

fn check_gadgets(rng: &mut impl Rng, g: &NeuralNetwork, dim: usize) {
    for _ in 0..CASES {
        let v = common::random_point(rng, dim);
        let gv = g.forward(&v).unwrap()[0];
        let ell = threshold(rng, gv);
        let u = threshold(rng, gv);
        let lower = build_lower_gadget(g, ell).unwrap();
        let upper = build_upper_gadget(g, u).unwrap();
        assert_eq!(loss_at(&lower, &v) == 1, ell <= gv, "lower: ell {ell}, g(v) {gv}");
        assert_eq!(loss_at(&upper, &v) == 1, gv <= u, "upper: u {u}, g(v) {gv}");
    }
}

#[test]
fn identity_gadgets() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = NeuralNetwork::new(vec![1], vec![], 1).unwrap();
    check_gadgets(&mut rng, &g, 1);
}

#[test]
fn two_layer_gadgets() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let dim = 3;
    let g = NeuralNetwork::new(
        vec![dim],
        vec![common::random_dense(&mut rng, dim, 5), Layer::Relu, common::random_dense(&mut rng, 5, 1)],
        1,
    )
    .unwrap();
    check_gadgets(&mut rng, &g, dim);
}

#[test]
fn reduction_flags_box_membership() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let g = NeuralNetwork::new(
        vec![2],
        vec![common::random_dense(&mut rng, 2, 4), Layer::Relu, common::random_dense(&mut rng, 4, 1)],
        1,
    )
    .unwrap();
    let in_box = IntervalBox::new(vec![-0.5, -0.5], vec![0.5, 0.5]).unwrap();
    let out_box = IntervalBox::new(vec![-0.2], vec![0.3]).unwrap();
    let r = build_reduction(&g, &in_box, &out_box).unwrap();
    assert_eq!(r.epsilon, 1.0);
    for _ in 0..CASES {
        let v: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let gv = g.forward(&v).unwrap()[0];
        let inside = in_box.contains(&v, 0.0) && out_box.contains(&[gv], 0.0);
        let all_fooled = r.ensemble.networks().iter().all(|c| loss_at(c, &v) == 1);
        assert_eq!(all_fooled, inside, "v {v:?}, g(v) {gv}");
    }
}
