#![allow(dead_code)]

use ensrob_core::{Ensemble, LabelledDataset, Layer, NeuralNetwork};
use rand::Rng;

/// Dense layer with weights and biases drawn from `[-1, 1]`.
pub fn random_dense(rng: &mut impl Rng, inputs: usize, outputs: usize) -> Layer {
    let w = (0..outputs)
        .map(|_| (0..inputs).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let b = (0..outputs).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Layer::dense(w, b)
}

/// Up to three dense layers with at most 16 hidden neurons in total, each
/// hidden layer followed by ReLU or a width-2 max-pool (or both).
pub fn random_network(rng: &mut impl Rng, dim: usize, labels: usize) -> NeuralNetwork {
    let hidden = rng.gen_range(0..=2);
    let mut layers = Vec::new();
    let mut width = dim;
    let mut budget = 16;
    for _ in 0..hidden {
        let out = rng.gen_range(2..=8.min(budget));
        budget -= out;
        layers.push(random_dense(rng, width, out));
        width = out;
        match rng.gen_range(0..3) {
            0 => layers.push(Layer::Relu),
            1 => {
                layers.push(Layer::MaxPool { window: [1, 2], stride: 1 });
                width -= 1;
            }
            _ => {
                layers.push(Layer::Relu);
                layers.push(Layer::MaxPool { window: [1, 2], stride: 2 });
                width = (width - 2) / 2 + 1;
            }
        }
        if budget < 2 {
            break;
        }
    }
    layers.push(random_dense(rng, width, labels));
    NeuralNetwork::new(vec![dim], layers, labels).expect("generated network is well formed")
}

pub fn random_point(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Perturbation with L1 norm at most `epsilon`.
pub fn random_delta(rng: &mut impl Rng, dim: usize, epsilon: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm: f64 = raw.iter().map(|v: &f64| v.abs()).sum();
    let scale = rng.gen_range(0.0..1.0) * epsilon / norm.max(1e-12);
    raw.iter().map(|v| v * scale).collect()
}

pub fn random_instance(
    rng: &mut impl Rng,
    classifiers: usize,
    points: usize,
    dim: usize,
    labels: usize,
) -> (Ensemble, LabelledDataset) {
    let nets = (0..classifiers).map(|_| random_network(rng, dim, labels)).collect();
    let xs = (0..points).map(|_| random_point(rng, dim)).collect();
    let ys = (0..points).map(|_| rng.gen_range(1..=labels)).collect();
    (
        Ensemble::new(nets).expect("valid ensemble"),
        LabelledDataset::new(xs, ys).expect("valid dataset"),
    )
}
