//! Workloads shared by the criterion benches.

use ensrob_core::{Ensemble, LabelledDataset, Layer, NeuralNetwork, Relation, StandardFormLP};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random bounded LP `max c.x, A x <= b, 0 <= x <= 10` with `n` columns and `m` rows.
pub fn random_lp(seed: u64, n: usize, m: usize) -> StandardFormLP {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lp = StandardFormLP::new(n);
    lp.objective = (0..n).map(|_| rng.gen_range(-1.0..3.0)).collect();
    lp.upper = vec![10.0; n];
    for _ in 0..m {
        let row = (0..n).map(|j| (j, rng.gen_range(-1.0..2.0))).collect();
        lp.add_row(row, Relation::Le, rng.gen_range(1.0..20.0));
    }
    lp
}

/// Random loss matrix with `attacks` rows and `classifiers` columns.
pub fn random_game(seed: u64, attacks: usize, classifiers: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..attacks)
        .map(|_| (0..classifiers).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect()
}

/// `classifiers` one-hidden-layer ReLU networks with `hidden` neurons each.
pub fn relu_instance(seed: u64, classifiers: usize, points: usize, dim: usize, hidden: usize) -> (Ensemble, LabelledDataset) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dense = |rng: &mut ChaCha8Rng, i: usize, o: usize| {
        Layer::dense(
            (0..o).map(|_| (0..i).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect(),
            (0..o).map(|_| rng.gen_range(-0.5..0.5)).collect(),
        )
    };
    let nets = (0..classifiers)
        .map(|_| {
            let layers = vec![dense(&mut rng, dim, hidden), Layer::Relu, dense(&mut rng, hidden, 2)];
            NeuralNetwork::new(vec![dim], layers, 2).expect("valid network")
        })
        .collect();
    let xs = (0..points).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let ys = (0..points).map(|_| rng.gen_range(1..=2)).collect();
    (
        Ensemble::new(nets).expect("valid ensemble"),
        LabelledDataset::new(xs, ys).expect("valid dataset"),
    )
}
