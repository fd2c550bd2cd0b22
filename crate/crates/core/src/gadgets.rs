//! Threshold gadgets that turn a scalar network `g` into a two-label
//! classifier whose truth-label-1 loss encodes `l <= g(v)` or `g(v) <= u`,
//! and the ensemble that combines them into a box-membership query.
//!
//! Both appended heads end in an affine layer (no trailing ReLU) so that a
//! negative threshold survives as an output value.

use crate::error::{Error, Result};
use crate::nnmodel::{Ensemble, IntervalBox, LabelledDataset, Layer, NeuralNetwork};

fn scalar_output(g: &NeuralNetwork) -> Result<()> {
    let out: usize = g.shapes().last().map_or(g.input_dim(), |s| s.iter().product());
    if out != 1 {
        return Err(Error::invalid(format!("gadget needs a scalar-output network, got {out} outputs")));
    }
    Ok(())
}

/// Outputs `(ell, g(v))`: label 2 when `g(v) > ell`, undefined at equality,
/// label 1 below.
pub fn build_lower_gadget(g: &NeuralNetwork, ell: f64) -> Result<NeuralNetwork> {
    scalar_output(g)?;
    g.with_layers(vec![Layer::dense(vec![vec![0.0], vec![1.0]], vec![ell, 0.0])], 2)
}

/// Outputs `(1, 1 - max(0, g(v) - u))`: undefined when `g(v) <= u`,
/// label 1 otherwise.
pub fn build_upper_gadget(g: &NeuralNetwork, u: f64) -> Result<NeuralNetwork> {
    scalar_output(g)?;
    g.with_layers(
        vec![
            Layer::dense(vec![vec![1.0]], vec![-u]),
            Layer::Relu,
            Layer::dense(vec![vec![0.0], vec![-1.0]], vec![1.0, 1.0]),
        ],
        2,
    )
}

/// Coordinate projection `v -> v_k` on an `n`-dimensional input.
fn projection(n: usize, k: usize) -> Layer {
    let mut row = vec![0.0; n];
    row[k] = 1.0;
    Layer::dense(vec![row], vec![0.0])
}

#[derive(Debug, Clone)]
pub struct Reduction {
    pub ensemble: Ensemble,
    pub data: LabelledDataset,
    pub epsilon: f64,
}

/// Ensemble whose members all misclassify the origin under perturbation `v`
/// exactly when `v` lies in `input_box` and `g(v)` lies in `output_box`.
pub fn build_reduction(g: &NeuralNetwork, input_box: &IntervalBox, output_box: &IntervalBox) -> Result<Reduction> {
    if g.input_shape().len() != 1 {
        return Err(Error::Shape("reduction needs a network with a flat input".into()));
    }
    let n = g.input_dim();
    let m: usize = g.shapes().last().map_or(n, |s| s.iter().product());
    if input_box.len() != n {
        return Err(Error::Shape(format!("input box has {} entries, network has {n} inputs", input_box.len())));
    }
    if output_box.len() != m {
        return Err(Error::Shape(format!("output box has {} entries, network has {m} outputs", output_box.len())));
    }
    if input_box.lower.iter().chain(&input_box.upper).any(|v| !v.is_finite()) {
        return Err(Error::invalid("input box must be bounded"));
    }
    let mut nets = Vec::with_capacity(2 * (n + m));
    for k in 0..n {
        let p = NeuralNetwork::new(vec![n], vec![projection(n, k)], 1)?;
        nets.push(build_lower_gadget(&p, input_box.lower[k])?);
        nets.push(build_upper_gadget(&p, input_box.upper[k])?);
    }
    for i in 0..m {
        let gi = g.with_layers(vec![projection(m, i)], 1)?;
        nets.push(build_lower_gadget(&gi, output_box.lower[i])?);
        nets.push(build_upper_gadget(&gi, output_box.upper[i])?);
    }
    let epsilon = input_box
        .lower
        .iter()
        .zip(&input_box.upper)
        .map(|(l, u)| l.abs().max(u.abs()))
        .sum();
    Ok(Reduction {
        ensemble: Ensemble::new(nets)?,
        data: LabelledDataset::new(vec![vec![0.0; n]], vec![1])?,
        epsilon,
    })
}
