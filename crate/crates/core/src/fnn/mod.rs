//! Dense feedforward network: ReLU hidden layers, linear output, MSE loss,
//! backpropagation and mini-batch SGD.
//!
//! ```text
//! z_1 = normalize(x)
//! z_{l+1} = relu(W_l z_l + b_l)
//! y = W_{L-1} z_{L-1} + b_{L-1}
//! ```

mod train;

pub use train::{
    split_validation, train, EpochRecord, TrainConfig, TrainedModel, TrainingProvenance,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::FnnError;

/// Standard deviations below this are replaced by it.
pub const STD_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

/// Fully connected layer; `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            inputs,
            outputs,
            activation,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.inputs + col]
    }

    fn apply(&self, input: &[f64], output: &mut [f64]) {
        for (o, (row, b)) in output
            .iter_mut()
            .zip(self.weights.chunks_exact(self.inputs).zip(&self.biases))
        {
            let pre = b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
            *o = match self.activation {
                Activation::Relu => pre.max(0.0),
                Activation::Linear => pre,
            };
        }
    }
}

/// Per-feature input statistics, population convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalization {
    pub fn identity(n: usize) -> Self {
        Self {
            mean: vec![0.0; n],
            std: vec![1.0; n],
        }
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (((o, x), m), s) in out.iter_mut().zip(x).zip(&self.mean).zip(&self.std) {
            *o = (x - m) / s;
        }
    }
}

/// Mean and floored population standard deviation of every feature.
pub fn fit_normalization(samples: &Samples) -> Result<Normalization, FnnError> {
    if samples.len() < 2 {
        return Err(FnnError::Invalid(format!(
            "normalization needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let d = samples.n_features();
    let n = samples.len() as f64;
    let mut mean = vec![0.0; d];
    for i in 0..samples.len() {
        for (m, x) in mean.iter_mut().zip(samples.row(i)) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for i in 0..samples.len() {
        for ((v, x), m) in var.iter_mut().zip(samples.row(i)).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    let std = var.iter().map(|v| (v / n).sqrt().max(STD_FLOOR)).collect();
    Ok(Normalization { mean, std })
}

/// Feature rows and scalar targets stored contiguously.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Samples {
    n_features: usize,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Samples {
    pub fn new(n_features: usize) -> Self {
        Self {
            n_features,
            x: Vec::new(),
            y: Vec::new(),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>], targets: &[f64]) -> Result<Self, FnnError> {
        let n_features = rows.first().map_or(0, Vec::len);
        let mut samples = Self::new(n_features);
        if rows.len() != targets.len() {
            return Err(FnnError::Invalid(format!(
                "{} rows but {} targets",
                rows.len(),
                targets.len()
            )));
        }
        for (row, &y) in rows.iter().zip(targets) {
            samples.push(row, y)?;
        }
        Ok(samples)
    }

    pub fn push(&mut self, row: &[f64], y: f64) -> Result<(), FnnError> {
        if row.len() != self.n_features {
            return Err(FnnError::DimensionMismatch {
                expected: self.n_features,
                got: row.len(),
            });
        }
        self.x.extend_from_slice(row);
        self.y.push(y);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn target(&self, i: usize) -> f64 {
        self.y[i]
    }

    pub fn targets(&self) -> &[f64] {
        &self.y
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut out = Self::new(self.n_features);
        for &i in indices {
            out.x.extend_from_slice(self.row(i));
            out.y.push(self.y[i]);
        }
        out
    }

    /// Copy with every target replaced by `f(target)`.
    pub fn map_targets(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            n_features: self.n_features,
            x: self.x.clone(),
            y: self.y.iter().map(|&y| f(y)).collect(),
        }
    }

    /// Copy with every row passed through `norm`.
    pub fn normalized(&self, norm: &Normalization) -> Self {
        let mut x = vec![0.0; self.x.len()];
        for (src, dst) in self
            .x
            .chunks_exact(self.n_features.max(1))
            .zip(x.chunks_exact_mut(self.n_features.max(1)))
        {
            norm.apply(src, dst);
        }
        Self {
            n_features: self.n_features,
            x,
            y: self.y.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnnModel {
    pub layers: Vec<Layer>,
    pub norm: Normalization,
}

impl FnnModel {
    /// Zero network with the given layer widths, e.g. `[5, 32, 32, 1]`.
    pub fn zeros(widths: &[usize]) -> Result<Self, FnnError> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(FnnError::Invalid(format!(
                "layer widths must list at least input and output, all non-zero: {widths:?}"
            )));
        }
        if widths[widths.len() - 1] != 1 {
            return Err(FnnError::Invalid("the output layer must be scalar".into()));
        }
        let last = widths.len() - 2;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(l, w)| {
                let act = if l == last {
                    Activation::Linear
                } else {
                    Activation::Relu
                };
                Layer::zeros(w[0], w[1], act)
            })
            .collect();
        Ok(Self {
            layers,
            norm: Normalization::identity(widths[0]),
        })
    }

    /// He-normal weights (`std = sqrt(2 / fan_in)`), zero biases.
    pub fn he_init(widths: &[usize], seed: u64) -> Result<Self, FnnError> {
        let mut model = Self::zeros(widths)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut model.layers {
            let normal = Normal::new(0.0, (2.0 / layer.inputs as f64).sqrt())
                .expect("positive standard deviation");
            for w in &mut layer.weights {
                *w = normal.sample(&mut rng);
            }
        }
        Ok(model)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut widths = vec![self.input_dim()];
        widths.extend(self.layers.iter().map(|l| l.outputs));
        widths
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    pub fn validate(&self) -> Result<(), FnnError> {
        let Some(last) = self.layers.last() else {
            return Err(FnnError::Invalid("network has no layers".into()));
        };
        if last.activation != Activation::Linear || last.outputs != 1 {
            return Err(FnnError::Invalid(
                "the output layer must be scalar and linear".into(),
            ));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.weights.len() != layer.inputs * layer.outputs
                || layer.biases.len() != layer.outputs
            {
                return Err(FnnError::Invalid(format!(
                    "layer {l} has inconsistent shapes"
                )));
            }
            if l > 0 && self.layers[l - 1].outputs != layer.inputs {
                return Err(FnnError::Invalid(format!(
                    "layer {l} expects {} inputs but receives {}",
                    layer.inputs,
                    self.layers[l - 1].outputs
                )));
            }
        }
        let d = self.input_dim();
        if self.norm.mean.len() != d || self.norm.std.len() != d {
            return Err(FnnError::Invalid(
                "normalization does not match the input width".into(),
            ));
        }
        if self.norm.std.iter().any(|s| !(*s > 0.0)) {
            return Err(FnnError::Invalid(
                "normalization std must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Evaluate the network on a raw (unnormalized) feature vector.
    pub fn forward(&self, x: &[f64]) -> Result<f64, FnnError> {
        if x.len() != self.input_dim() {
            return Err(FnnError::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let mut z = vec![0.0; x.len()];
        self.norm.apply(x, &mut z);
        Ok(self.forward_normalized(&z))
    }

    pub(crate) fn forward_normalized(&self, z: &[f64]) -> f64 {
        let mut input = z.to_vec();
        let mut output = Vec::new();
        for layer in &self.layers {
            output.resize(layer.outputs, 0.0);
            layer.apply(&input, &mut output);
            std::mem::swap(&mut input, &mut output);
        }
        input[0]
    }

    /// Compose the output with `y -> scale * y + offset` by rewriting the
    /// last layer.
    pub fn rescale_output(&mut self, scale: f64, offset: f64) {
        let last = self.layers.last_mut().expect("validated model has layers");
        last.weights.iter_mut().for_each(|w| *w *= scale);
        last.biases
            .iter_mut()
            .for_each(|b| *b = scale * *b + offset);
    }

    /// Pre-activation values of every hidden layer for a raw input.
    pub fn pre_activations(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, FnnError> {
        if x.len() != self.input_dim() {
            return Err(FnnError::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let mut input = vec![0.0; x.len()];
        self.norm.apply(x, &mut input);
        let mut out = Vec::new();
        for layer in &self.layers[..self.layers.len() - 1] {
            let pre: Vec<f64> = layer
                .weights
                .chunks_exact(layer.inputs)
                .zip(&layer.biases)
                .map(|(row, b)| b + row.iter().zip(&input).map(|(w, x)| w * x).sum::<f64>())
                .collect();
            input = pre.iter().map(|p| p.max(0.0)).collect();
            out.push(pre);
        }
        Ok(out)
    }

    pub fn predict(&self, samples: &Samples) -> Result<Vec<f64>, FnnError> {
        (0..samples.len())
            .map(|i| self.forward(samples.row(i)))
            .collect()
    }
}

/// Mean squared error over a non-empty batch.
pub fn mse_loss(model: &FnnModel, batch: &Samples) -> Result<f64, FnnError> {
    if batch.is_empty() {
        return Err(FnnError::EmptyBatch);
    }
    let mut sum = 0.0;
    for i in 0..batch.len() {
        let e = model.forward(batch.row(i))? - batch.target(i);
        sum += e * e;
    }
    Ok(sum / batch.len() as f64)
}

/// Gradient of the MSE with the same layout as the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &FnnModel) -> Self {
        Self {
            weights: model
                .layers
                .iter()
                .map(|l| vec![0.0; l.weights.len()])
                .collect(),
            biases: model
                .layers
                .iter()
                .map(|l| vec![0.0; l.biases.len()])
                .collect(),
        }
    }

    fn add(&mut self, other: &Gradients) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.iter_mut().zip(b).for_each(|(a, b)| *a += b);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            a.iter_mut().zip(b).for_each(|(a, b)| *a += b);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.weights
            .iter()
            .chain(&self.biases)
            .flatten()
            .fold(0.0, |m, g| m.max(g.abs()))
    }
}

/// Per-layer activation buffers reused across samples.
struct Workspace {
    activations: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

impl Workspace {
    fn new(model: &FnnModel) -> Self {
        let widths = model.widths();
        Self {
            activations: widths.iter().map(|&w| vec![0.0; w]).collect(),
            deltas: widths.iter().map(|&w| vec![0.0; w]).collect(),
        }
    }
}

/// Accumulate `scale * d(g - y)^2` for one normalized sample into `grads` and
/// return the squared error.
fn accumulate_sample(
    model: &FnnModel,
    z: &[f64],
    y: f64,
    scale: f64,
    ws: &mut Workspace,
    grads: &mut Gradients,
) -> f64 {
    ws.activations[0].copy_from_slice(z);
    for (l, layer) in model.layers.iter().enumerate() {
        let (before, after) = ws.activations.split_at_mut(l + 1);
        layer.apply(&before[l], &mut after[0]);
    }
    let out = ws.activations[model.layers.len()][0];
    let err = out - y;
    ws.deltas[model.layers.len()][0] = 2.0 * err * scale;

    for l in (0..model.layers.len()).rev() {
        let layer = &model.layers[l];
        let (lower, upper) = ws.deltas.split_at_mut(l + 1);
        let delta = &upper[0];
        let input = &ws.activations[l];
        let gw = &mut grads.weights[l];
        for (i, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            grads.biases[l][i] += d;
            let row = &mut gw[i * layer.inputs..(i + 1) * layer.inputs];
            row.iter_mut().zip(input).for_each(|(g, x)| *g += d * x);
        }
        if l > 0 {
            let below = &mut lower[l];
            below.iter_mut().for_each(|v| *v = 0.0);
            for (i, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[i * layer.inputs..(i + 1) * layer.inputs];
                below.iter_mut().zip(row).for_each(|(b, w)| *b += w * d);
            }
            // relu' is 0 wherever the activation is 0, including the kink itself
            if model.layers[l - 1].activation == Activation::Relu {
                for (b, a) in below.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *b = 0.0;
                    }
                }
            }
        }
    }
    err * err
}

/// Loss and gradient over the rows `indices` of already-normalized samples.
pub(crate) fn loss_and_gradient(
    model: &FnnModel,
    normalized: &Samples,
    indices: &[usize],
) -> (f64, Gradients) {
    let mut grads = Gradients::zeros_like(model);
    let mut ws = Workspace::new(model);
    let scale = 1.0 / indices.len() as f64;
    let mut loss = 0.0;
    for &i in indices {
        loss += accumulate_sample(
            model,
            normalized.row(i),
            normalized.target(i),
            scale,
            &mut ws,
            &mut grads,
        );
    }
    (loss * scale, grads)
}

/// Same as [`loss_and_gradient`], split into `chunks` contiguous pieces that
/// are evaluated on separate threads and summed in chunk order.
pub(crate) fn loss_and_gradient_parallel(
    model: &FnnModel,
    normalized: &Samples,
    indices: &[usize],
    chunks: usize,
) -> (f64, Gradients) {
    if chunks <= 1 || indices.len() < 2 * chunks {
        return loss_and_gradient(model, normalized, indices);
    }
    let size = indices.len().div_ceil(chunks);
    let n = indices.len() as f64;
    let parts: Vec<(f64, Gradients)> = std::thread::scope(|scope| {
        let handles: Vec<_> = indices
            .chunks(size)
            .map(|part| {
                scope.spawn(move || {
                    let (loss, mut g) = loss_and_gradient(model, normalized, part);
                    // rescale the chunk mean to a share of the full-batch mean
                    let w = part.len() as f64 / n;
                    g.weights
                        .iter_mut()
                        .chain(g.biases.iter_mut())
                        .flatten()
                        .for_each(|v| *v *= w);
                    (loss * w, g)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("gradient worker panicked"))
            .collect()
    });
    let mut total = Gradients::zeros_like(model);
    let mut loss = 0.0;
    for (l, g) in &parts {
        loss += l;
        total.add(g);
    }
    (loss, total)
}

/// Exact gradient of [`mse_loss`] with respect to every weight and bias.
pub fn backward(model: &FnnModel, batch: &Samples) -> Result<Gradients, FnnError> {
    if batch.is_empty() {
        return Err(FnnError::EmptyBatch);
    }
    if batch.n_features() != model.input_dim() {
        return Err(FnnError::DimensionMismatch {
            expected: model.input_dim(),
            got: batch.n_features(),
        });
    }
    let normalized = batch.normalized(&model.norm);
    let indices: Vec<usize> = (0..batch.len()).collect();
    Ok(loss_and_gradient(model, &normalized, &indices).1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch() -> Samples {
        Samples::from_rows(
            &[
                vec![0.1, -0.3, 0.5, 1.0, 0.2],
                vec![-1.0, 0.4, 0.0, 0.3, 0.9],
                vec![0.7, 0.7, -0.2, -0.5, 0.1],
            ],
            &[0.5, -0.2, 1.1],
        )
        .unwrap()
    }

    #[test]
    fn zero_weights_output_the_last_bias() {
        let mut model = FnnModel::zeros(&[5, 4, 4, 1]).unwrap();
        model.layers[2].biases[0] = 0.75;
        assert_eq!(model.forward(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(), 0.75);
        assert_eq!(model.forward(&[-9.0; 5]).unwrap(), 0.75);
    }

    #[test]
    fn identity_network() {
        let mut model = FnnModel::zeros(&[1, 1]).unwrap();
        model.layers[0].weights[0] = 1.0;
        for x in [-3.0, 0.0, 2.5] {
            assert_eq!(model.forward(&[x]).unwrap(), x);
        }
    }

    #[test]
    fn forward_checks_dimension() {
        let model = FnnModel::zeros(&[5, 4, 1]).unwrap();
        assert!(matches!(
            model.forward(&[1.0, 2.0]),
            Err(FnnError::DimensionMismatch {
                expected: 5,
                got: 2
            })
        ));
    }

    #[test]
    fn mse_arithmetic() {
        let model = FnnModel::zeros(&[1, 1]).unwrap();
        let batch = Samples::from_rows(&[vec![0.0], vec![0.0]], &[1.0, 3.0]).unwrap();
        assert_eq!(mse_loss(&model, &batch).unwrap(), 5.0);
        let batch = Samples::from_rows(&[vec![1.0], vec![2.0]], &[2.0, 2.0]).unwrap();
        assert_eq!(mse_loss(&model, &batch).unwrap(), 4.0);
        assert!(matches!(
            mse_loss(&model, &Samples::new(1)),
            Err(FnnError::EmptyBatch)
        ));
    }

    #[test]
    fn zero_error_gives_zero_gradient() {
        let model = FnnModel::he_init(&[5, 8, 8, 1], 3).unwrap();
        let b = batch();
        let preds = model.predict(&b).unwrap();
        let rows: Vec<Vec<f64>> = (0..b.len()).map(|i| b.row(i).to_vec()).collect();
        let exact = Samples::from_rows(&rows, &preds).unwrap();
        assert_eq!(backward(&model, &exact).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn duplicated_batch_has_the_same_gradient() {
        let model = FnnModel::he_init(&[5, 8, 8, 1], 4).unwrap();
        let b = batch();
        let doubled = b.subset(&[0, 1, 2, 0, 1, 2]);
        let g1 = backward(&model, &b).unwrap();
        let g2 = backward(&model, &doubled).unwrap();
        for (a, c) in g1.weights.iter().flatten().zip(g2.weights.iter().flatten()) {
            assert!((a - c).abs() <= 1e-15 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn parallel_gradient_matches_serial() {
        let model = FnnModel::he_init(&[5, 8, 1], 9).unwrap();
        let b = batch().subset(&[0, 1, 2, 2, 1, 0, 0, 1, 2, 1]);
        let idx: Vec<usize> = (0..b.len()).collect();
        let (l1, g1) = loss_and_gradient(&model, &b, &idx);
        let (l2, g2) = loss_and_gradient_parallel(&model, &b, &idx, 3);
        assert!((l1 - l2).abs() < 1e-14);
        for (a, c) in g1.weights.iter().flatten().zip(g2.weights.iter().flatten()) {
            assert!((a - c).abs() < 1e-13);
        }
        assert_eq!(g2, loss_and_gradient_parallel(&model, &b, &idx, 3).1);
    }

    #[test]
    fn normalization_statistics() {
        let s = Samples::from_rows(&[vec![1.0, 0.0], vec![1.0, 2.0]], &[0.0, 0.0]).unwrap();
        let n = fit_normalization(&s).unwrap();
        assert_eq!(n.mean, vec![1.0, 1.0]);
        assert_eq!(n.std, vec![STD_FLOOR, 1.0]);
        assert!(fit_normalization(&s.subset(&[0])).is_err());
    }

    #[test]
    fn he_init_is_seeded() {
        let a = FnnModel::he_init(&[5, 32, 32, 1], 1).unwrap();
        assert_eq!(a, FnnModel::he_init(&[5, 32, 32, 1], 1).unwrap());
        assert_ne!(a, FnnModel::he_init(&[5, 32, 32, 1], 2).unwrap());
        assert_eq!(a.parameter_count(), 5 * 32 + 32 + 32 * 32 + 32 + 32 + 1);
        a.validate().unwrap();
    }
}
