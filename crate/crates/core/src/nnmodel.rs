//! ReLU feed-forward networks: layers, exact evaluation, argmax classification
//! with a margin, interval bound propagation and the JSON model formats.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 1-based class label.
pub type Label = usize;

/// Result of the partial argmax classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Label(Label),
    Undefined,
}

impl Classification {
    pub fn label(self) -> Option<Label> {
        match self {
            Classification::Label(l) => Some(l),
            Classification::Undefined => None,
        }
    }
}

fn default_stride() -> usize {
    1
}

/// One network layer. Dense and Conv2D are affine; ReLU and MaxPool are the
/// only non-linear pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Layer {
    /// `y = W x + b` over the flattened input; `w` is row-major.
    Dense { w: Vec<Vec<f64>>, b: Vec<f64> },
    /// Cross-correlation with zero padding. `kernel[oc][ic][kh][kw]`.
    Conv2d {
        kernel: Vec<Vec<Vec<Vec<f64>>>>,
        bias: Vec<f64>,
        #[serde(default = "default_stride")]
        stride: usize,
        #[serde(default)]
        padding: [usize; 2],
    },
    MaxPool {
        window: [usize; 2],
        #[serde(default = "default_stride")]
        stride: usize,
    },
    Relu,
}

/// Sparse affine row: `bias + sum(coef * input[idx])`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineRow {
    pub terms: Vec<(usize, f64)>,
    pub bias: f64,
}

/// Views a shape as (channels, height, width).
fn as_chw(shape: &[usize]) -> std::result::Result<(usize, usize, usize), String> {
    match shape {
        [n] => Ok((1, 1, *n)),
        [h, w] => Ok((1, *h, *w)),
        [c, h, w] => Ok((*c, *h, *w)),
        _ => Err(format!("unsupported tensor rank {} (shape {:?})", shape.len(), shape)),
    }
}

impl Layer {
    pub fn dense(w: Vec<Vec<f64>>, b: Vec<f64>) -> Self {
        Layer::Dense { w, b }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Layer::Dense { .. } => "dense",
            Layer::Conv2d { .. } => "conv2d",
            Layer::MaxPool { .. } => "maxpool",
            Layer::Relu => "relu",
        }
    }

    /// Output shape for a given input shape, checking the per-kind invariants.
    pub fn output_shape(&self, input: &[usize]) -> std::result::Result<Vec<usize>, String> {
        let size: usize = input.iter().product();
        match self {
            Layer::Dense { w, b } => {
                if w.len() != b.len() {
                    return Err(format!(
                        "weight matrix has {} rows but bias has {} entries",
                        w.len(),
                        b.len()
                    ));
                }
                if w.is_empty() {
                    return Err("dense layer has no rows".into());
                }
                for (r, row) in w.iter().enumerate() {
                    if row.len() != size {
                        return Err(format!(
                            "weight row {r} has length {} but the layer input has {size} entries",
                            row.len()
                        ));
                    }
                }
                Ok(vec![w.len()])
            }
            Layer::Conv2d {
                kernel,
                bias,
                stride,
                padding,
            } => {
                let (c, h, wd) = as_chw(input)?;
                if *stride < 1 {
                    return Err("conv2d stride must be at least 1".into());
                }
                if kernel.is_empty() || kernel.len() != bias.len() {
                    return Err(format!(
                        "conv2d has {} output channels but {} biases",
                        kernel.len(),
                        bias.len()
                    ));
                }
                let ic = kernel[0].len();
                let kh = kernel[0].first().map_or(0, |k| k.len());
                let kw = kernel[0]
                    .first()
                    .and_then(|k| k.first())
                    .map_or(0, |k| k.len());
                if ic != c {
                    return Err(format!("conv2d expects {ic} input channels, got {c}"));
                }
                if kh < 1 || kw < 1 {
                    return Err("conv2d kernel dims must be at least 1".into());
                }
                for oc in kernel {
                    if oc.len() != ic || oc.iter().any(|k| k.len() != kh || k.iter().any(|r| r.len() != kw)) {
                        return Err("conv2d kernel tensor is ragged".into());
                    }
                }
                let ph = h + 2 * padding[0];
                let pw = wd + 2 * padding[1];
                if ph < kh || pw < kw {
                    return Err("conv2d kernel larger than padded input".into());
                }
                Ok(vec![kernel.len(), (ph - kh) / stride + 1, (pw - kw) / stride + 1])
            }
            Layer::MaxPool { window, stride } => {
                let (c, h, wd) = as_chw(input)?;
                if window[0] < 1 || window[1] < 1 || *stride < 1 {
                    return Err("maxpool window and stride must be at least 1".into());
                }
                if h < window[0] || wd < window[1] {
                    return Err("maxpool window larger than input".into());
                }
                let oh = (h - window[0]) / stride + 1;
                let ow = (wd - window[1]) / stride + 1;
                Ok(match input.len() {
                    1 => vec![ow],
                    2 => vec![oh, ow],
                    _ => vec![c, oh, ow],
                })
            }
            Layer::Relu => Ok(input.to_vec()),
        }
    }

    /// Affine rows for Dense and Conv2D layers, `None` otherwise.
    pub fn affine_rows(&self, input: &[usize]) -> Option<Vec<AffineRow>> {
        match self {
            Layer::Dense { w, b } => Some(
                w.iter()
                    .zip(b)
                    .map(|(row, &bias)| AffineRow {
                        terms: row
                            .iter()
                            .enumerate()
                            .filter(|(_, &c)| c != 0.0)
                            .map(|(i, &c)| (i, c))
                            .collect(),
                        bias,
                    })
                    .collect(),
            ),
            Layer::Conv2d {
                kernel,
                bias,
                stride,
                padding,
            } => {
                let (c, h, wd) = as_chw(input).ok()?;
                let out = self.output_shape(input).ok()?;
                let (oh, ow) = (out[1], out[2]);
                let kh = kernel[0][0].len();
                let kw = kernel[0][0][0].len();
                let mut rows = Vec::with_capacity(kernel.len() * oh * ow);
                for (oc, kern) in kernel.iter().enumerate() {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let mut terms = Vec::new();
                            for (ic, plane) in kern.iter().enumerate().take(c) {
                                for ky in 0..kh {
                                    for kx in 0..kw {
                                        let iy = (oy * stride + ky) as isize - padding[0] as isize;
                                        let ix = (ox * stride + kx) as isize - padding[1] as isize;
                                        if iy < 0 || ix < 0 || iy >= h as isize || ix >= wd as isize {
                                            continue;
                                        }
                                        let coef = plane[ky][kx];
                                        if coef != 0.0 {
                                            let idx = (ic * h + iy as usize) * wd + ix as usize;
                                            terms.push((idx, coef));
                                        }
                                    }
                                }
                            }
                            rows.push(AffineRow {
                                terms,
                                bias: bias[oc],
                            });
                        }
                    }
                }
                Some(rows)
            }
            _ => None,
        }
    }

    /// Flat input indices per pooled output, `None` for non-pooling layers.
    pub fn pool_windows(&self, input: &[usize]) -> Option<Vec<Vec<usize>>> {
        let Layer::MaxPool { window, stride } = self else {
            return None;
        };
        let (c, h, wd) = as_chw(input).ok()?;
        let oh = (h - window[0]) / stride + 1;
        let ow = (wd - window[1]) / stride + 1;
        let mut out = Vec::with_capacity(c * oh * ow);
        for ch in 0..c {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut idx = Vec::with_capacity(window[0] * window[1]);
                    for ky in 0..window[0] {
                        for kx in 0..window[1] {
                            idx.push((ch * h + oy * stride + ky) * wd + ox * stride + kx);
                        }
                    }
                    out.push(idx);
                }
            }
        }
        Some(out)
    }

    fn apply(&self, input: &[f64], in_shape: &[usize]) -> Vec<f64> {
        match self {
            Layer::Dense { w, b } => w
                .iter()
                .zip(b)
                .map(|(row, bias)| row.iter().zip(input).map(|(a, x)| a * x).sum::<f64>() + bias)
                .collect(),
            Layer::Conv2d {
                kernel,
                bias,
                stride,
                padding,
            } => {
                let (_, h, wd) = as_chw(in_shape).expect("validated shape");
                let out = self.output_shape(in_shape).expect("validated shape");
                let (oh, ow) = (out[1], out[2]);
                let mut y = Vec::with_capacity(kernel.len() * oh * ow);
                for (oc, kern) in kernel.iter().enumerate() {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let mut acc = bias[oc];
                            for (ic, plane) in kern.iter().enumerate() {
                                for (ky, krow) in plane.iter().enumerate() {
                                    let iy = (oy * stride + ky) as isize - padding[0] as isize;
                                    if iy < 0 || iy >= h as isize {
                                        continue;
                                    }
                                    for (kx, &k) in krow.iter().enumerate() {
                                        let ix = (ox * stride + kx) as isize - padding[1] as isize;
                                        if ix < 0 || ix >= wd as isize {
                                            continue;
                                        }
                                        acc += k * input[(ic * h + iy as usize) * wd + ix as usize];
                                    }
                                }
                            }
                            y.push(acc);
                        }
                    }
                }
                y
            }
            Layer::MaxPool { .. } => self
                .pool_windows(in_shape)
                .expect("validated shape")
                .iter()
                .map(|win| win.iter().map(|&i| input[i]).fold(f64::NEG_INFINITY, f64::max))
                .collect(),
            Layer::Relu => input.iter().map(|&v| v.max(0.0)).collect(),
        }
    }
}

/// A feed-forward network `f: R^d -> R^num_labels`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralNetwork {
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
    num_labels: usize,
    shapes: Vec<Vec<usize>>,
}

impl NeuralNetwork {
    /// Builds a network, checking that consecutive layer shapes compose and
    /// that the final output has `num_labels` entries.
    ///
    /// `num_labels` may be 1 here so scalar functions (used by the hardness
    /// gadgets) can be represented; [`Ensemble`] requires at least 2.
    pub fn new(input_shape: Vec<usize>, layers: Vec<Layer>, num_labels: usize) -> Result<Self> {
        if input_shape.is_empty() || input_shape.contains(&0) {
            return Err(Error::invalid(format!("invalid input shape {input_shape:?}")));
        }
        if num_labels < 1 {
            return Err(Error::invalid("network must have at least one output"));
        }
        for (i, layer) in layers.iter().enumerate() {
            if let Layer::Dense { w, b } = layer {
                if w.iter().flatten().chain(b).any(|v| !v.is_finite()) {
                    return Err(Error::layer(i, "non-finite weight"));
                }
            }
            if let Layer::Conv2d { kernel, bias, .. } = layer {
                if kernel.iter().flatten().flatten().flatten().chain(bias).any(|v| !v.is_finite()) {
                    return Err(Error::layer(i, "non-finite weight"));
                }
            }
        }
        let mut shapes = vec![input_shape.clone()];
        for (i, layer) in layers.iter().enumerate() {
            let next = layer
                .output_shape(shapes.last().unwrap())
                .map_err(|m| Error::layer(i, m))?;
            shapes.push(next);
        }
        let out: usize = shapes.last().unwrap().iter().product();
        if out != num_labels {
            return Err(Error::invalid(format!(
                "final layer produces {out} outputs but num_labels is {num_labels}"
            )));
        }
        Ok(NeuralNetwork {
            input_shape,
            layers,
            num_labels,
            shapes,
        })
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn input_dim(&self) -> usize {
        self.input_shape.iter().product()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    /// Shape entering layer `i` (index 0 is the network input); the last entry
    /// is the output shape.
    pub fn shapes(&self) -> &[Vec<usize>] {
        &self.shapes
    }

    /// Returns a copy with extra layers appended, re-validated against
    /// the new output size.
    pub fn with_layers(&self, extra: Vec<Layer>, num_labels: usize) -> Result<Self> {
        let mut layers = self.layers.clone();
        layers.extend(extra);
        NeuralNetwork::new(self.input_shape.clone(), layers, num_labels)
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.input_dim() {
            return Err(Error::layer(
                0,
                format!("input has {len} entries, expected {}", self.input_dim()),
            ));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_trace(x)?.pop().unwrap())
    }

    /// All activations: entry 0 is the input, entry `i + 1` the output of layer `i`.
    pub fn forward_trace(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(x.len())?;
        let mut trace = Vec::with_capacity(self.layers.len() + 1);
        trace.push(x.to_vec());
        for (layer, shape) in self.layers.iter().zip(&self.shapes) {
            let next = layer.apply(trace.last().unwrap(), shape);
            trace.push(next);
        }
        Ok(trace)
    }

    pub fn classify(&self, x: &[f64], margin: f64) -> Result<Classification> {
        Ok(classify_output(&self.forward(x)?, margin))
    }
}

/// The partial argmax with a separation margin: label `t` iff
/// `out[t] > out[k] + margin` for every `k != t`.
pub fn classify_output(out: &[f64], margin: f64) -> Classification {
    let Some((best, &top)) = out
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
    else {
        return Classification::Undefined;
    };
    let separated = out
        .iter()
        .enumerate()
        .all(|(k, &v)| k == best || top - v > margin);
    if separated && !top.is_nan() {
        Classification::Label(best + 1)
    } else {
        Classification::Undefined
    }
}

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl IntervalBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Shape(format!(
                "interval bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] <= upper[i])) {
            return Err(Error::invalid(format!(
                "interval {i} is empty: [{}, {}]",
                lower[i], upper[i]
            )));
        }
        Ok(IntervalBox { lower, upper })
    }

    pub fn point(x: &[f64]) -> Self {
        IntervalBox {
            lower: x.to_vec(),
            upper: x.to_vec(),
        }
    }

    /// `x` widened by `radius` in every coordinate.
    pub fn around(x: &[f64], radius: f64) -> Self {
        IntervalBox {
            lower: x.iter().map(|v| v - radius).collect(),
            upper: x.iter().map(|v| v + radius).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.len()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= lo - tol && *v <= hi + tol)
    }
}

/// Interval propagation through every layer. Entry 0 is `input_box`, entry
/// `i + 1` bounds the output of layer `i`, so the pre-activation box of a
/// ReLU at layer `i` is entry `i` and its post-activation box is entry `i + 1`.
pub fn propagate_bounds(net: &NeuralNetwork, input_box: &IntervalBox) -> Result<Vec<IntervalBox>> {
    net.check_input(input_box.len())?;
    let mut boxes = vec![input_box.clone()];
    for (i, (layer, shape)) in net.layers.iter().zip(&net.shapes).enumerate() {
        let cur = boxes.last().unwrap();
        let next = match layer {
            Layer::Dense { .. } | Layer::Conv2d { .. } => {
                let rows = layer
                    .affine_rows(shape)
                    .ok_or_else(|| Error::layer(i, "no affine rows"))?;
                let (mut lo, mut hi) = (Vec::with_capacity(rows.len()), Vec::with_capacity(rows.len()));
                for row in rows {
                    let (mut l, mut h) = (row.bias, row.bias);
                    for (idx, c) in row.terms {
                        if c >= 0.0 {
                            l += c * cur.lower[idx];
                            h += c * cur.upper[idx];
                        } else {
                            l += c * cur.upper[idx];
                            h += c * cur.lower[idx];
                        }
                    }
                    lo.push(l);
                    hi.push(h);
                }
                IntervalBox { lower: lo, upper: hi }
            }
            Layer::MaxPool { .. } => {
                let windows = layer.pool_windows(shape).unwrap();
                let fold = |b: &[f64], w: &[usize]| w.iter().map(|&j| b[j]).fold(f64::NEG_INFINITY, f64::max);
                IntervalBox {
                    lower: windows.iter().map(|w| fold(&cur.lower, w)).collect(),
                    upper: windows.iter().map(|w| fold(&cur.upper, w)).collect(),
                }
            }
            Layer::Relu => IntervalBox {
                lower: cur.lower.iter().map(|v| v.max(0.0)).collect(),
                upper: cur.upper.iter().map(|v| v.max(0.0)).collect(),
            },
        };
        boxes.push(next);
    }
    Ok(boxes)
}

/// A nonempty set of classifiers sharing input shape and label set.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    networks: Vec<NeuralNetwork>,
}

impl Ensemble {
    pub fn new(networks: Vec<NeuralNetwork>) -> Result<Self> {
        let first = networks
            .first()
            .ok_or_else(|| Error::invalid("ensemble must contain at least one network"))?;
        if first.num_labels < 2 {
            return Err(Error::invalid("classifiers need at least 2 labels"));
        }
        for (i, n) in networks.iter().enumerate() {
            if n.input_shape != first.input_shape || n.num_labels != first.num_labels {
                return Err(Error::invalid(format!(
                    "network {i} disagrees with network 0 on input shape or label count"
                )));
            }
        }
        Ok(Ensemble { networks })
    }

    pub fn networks(&self) -> &[NeuralNetwork] {
        &self.networks
    }

    pub fn len(&self) -> usize {
        self.networks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.networks.is_empty()
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.networks[0].input_shape
    }

    pub fn input_dim(&self) -> usize {
        self.networks[0].input_dim()
    }

    pub fn num_labels(&self) -> usize {
        self.networks[0].num_labels
    }
}

/// Data points with their ground-truth labels (1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledDataset {
    points: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

impl LabelledDataset {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("dataset must contain at least one point"));
        }
        if points.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        if let Some(j) = labels.iter().position(|&l| l == 0) {
            return Err(Error::invalid(format!(
                "label out of range at point {j}: labels are 1-based"
            )));
        }
        let d = points[0].len();
        if d == 0 {
            return Err(Error::invalid("data points must have at least one coordinate"));
        }
        if let Some(j) = points.iter().position(|p| p.len() != d) {
            return Err(Error::invalid(format!(
                "point {j} has dimension {} but point 0 has {d}",
                points[j].len()
            )));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("data points must be finite"));
        }
        Ok(LabelledDataset { points, labels })
    }

    /// Checks dimension and label range against an ensemble.
    pub fn validate_for(&self, ensemble: &Ensemble) -> Result<()> {
        if self.dim() != ensemble.input_dim() {
            return Err(Error::Shape(format!(
                "data points have dimension {} but the ensemble expects {}",
                self.dim(),
                ensemble.input_dim()
            )));
        }
        if let Some(j) = self.labels.iter().position(|&l| l > ensemble.num_labels()) {
            return Err(Error::invalid(format!(
                "label out of range at point {j}: {} > {}",
                self.labels[j],
                ensemble.num_labels()
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    layers: Vec<Layer>,
}

#[derive(Serialize, Deserialize)]
struct EnsembleFile {
    input_shape: Vec<usize>,
    num_labels: usize,
    networks: Vec<NetworkFile>,
}

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    points: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

pub(crate) fn parse_json<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: format!("at `{}`: {}", e.path(), e.inner()),
    })
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl Ensemble {
    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_json_at(text, Path::new("<ensemble>"))
    }

    fn from_json_at(text: &str, path: &Path) -> Result<Self> {
        let file: EnsembleFile = parse_json(text, path)?;
        let networks = file
            .networks
            .into_iter()
            .enumerate()
            .map(|(i, n)| {
                NeuralNetwork::new(file.input_shape.clone(), n.layers, file.num_labels).map_err(|e| {
                    Error::invalid(format!("network {i}: {e}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ensemble::new(networks)
    }

    pub fn to_json(&self) -> String {
        let file = EnsembleFile {
            input_shape: self.input_shape().to_vec(),
            num_labels: self.num_labels(),
            networks: self
                .networks
                .iter()
                .map(|n| NetworkFile {
                    layers: n.layers.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("ensemble serializes")
    }
}

impl LabelledDataset {
    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_json_at(text, Path::new("<dataset>"))
    }

    fn from_json_at(text: &str, path: &Path) -> Result<Self> {
        let file: DatasetFile = parse_json(text, path)?;
        LabelledDataset::new(file.points, file.labels)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&DatasetFile {
            points: self.points.clone(),
            labels: self.labels.clone(),
        })
        .expect("dataset serializes")
    }
}

pub fn load_ensemble(path: impl AsRef<Path>) -> Result<Ensemble> {
    let path = path.as_ref();
    Ensemble::from_json_at(&read_file(path)?, path)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<LabelledDataset> {
    let path = path.as_ref();
    LabelledDataset::from_json_at(&read_file(path)?, path)
}

pub fn save_ensemble(ensemble: &Ensemble, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &ensemble.to_json())
}

pub fn save_dataset(data: &LabelledDataset, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &data.to_json())
}
