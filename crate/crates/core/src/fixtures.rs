//! Small hand-built instances shared by tests, benches and the CLI docs.

use crate::nnmodel::{Ensemble, LabelledDataset, Layer, NeuralNetwork};

/// Two linear classifiers on the plane and the point (3, 1) with label 1.
///
/// The first outputs `(x1, 2)`, so it mislabels any input with `x1 < 2`;
/// the second outputs `(4, x1)` and mislabels inputs with `x1 > 4`. Each
/// single perturbation of L1 size 2 fools at most one of them.
pub fn two_linear_classifiers() -> (Ensemble, LabelledDataset) {
    let left = NeuralNetwork::new(
        vec![2],
        vec![Layer::dense(vec![vec![1.0, 0.0], vec![0.0, 0.0]], vec![0.0, 2.0])],
        2,
    )
    .expect("valid network");
    let right = NeuralNetwork::new(
        vec![2],
        vec![Layer::dense(vec![vec![0.0, 0.0], vec![1.0, 0.0]], vec![4.0, 0.0])],
        2,
    )
    .expect("valid network");
    let ensemble = Ensemble::new(vec![left, right]).expect("valid ensemble");
    let data = LabelledDataset::new(vec![vec![3.0, 1.0]], vec![1]).expect("valid dataset");
    (ensemble, data)
}

/// Two constant classifiers that always output `(1, 0)`, with `num_points`
/// points in dimension `dim`, all labelled 1.
pub fn perfect_ensemble(dim: usize, num_points: usize) -> (Ensemble, LabelledDataset) {
    let constant = || {
        NeuralNetwork::new(
            vec![dim],
            vec![Layer::dense(vec![vec![0.0; dim]; 2], vec![1.0, 0.0])],
            2,
        )
        .expect("valid network")
    };
    let ensemble = Ensemble::new(vec![constant(), constant()]).expect("valid ensemble");
    let points = (0..num_points).map(|j| vec![j as f64; dim]).collect();
    let data = LabelledDataset::new(points, vec![1; num_points]).expect("valid dataset");
    (ensemble, data)
}
