#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spmt_hybrid::fnn::{backward, mse_loss, Activation, FnnModel, Samples};

/// Straight-line re-evaluation of a network, kept apart from the library's
/// forward pass so the two can be compared.
pub fn reference_forward(model: &FnnModel, x: &[f64]) -> f64 {
    let mut h: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(i, v)| (v - model.norm.mean[i]) / model.norm.std[i])
        .collect();
    for layer in &model.layers {
        let mut next = vec![0.0; layer.outputs];
        for (o, slot) in next.iter_mut().enumerate() {
            let mut s = layer.biases[o];
            for (i, hv) in h.iter().enumerate() {
                s += layer.weights[o * layer.inputs + i] * hv;
            }
            *slot = if layer.activation == Activation::Relu && s < 0.0 {
                0.0
            } else {
                s
            };
        }
        h = next;
    }
    h[0]
}

pub struct GradientCheck {
    pub checked: usize,
    pub skipped: usize,
    pub worst: f64,
}

/// Central differences against backprop at `points` random (network, input,
/// parameter) draws. Draws with a hidden pre-activation within `kink` of the
/// ReLU kink are redrawn.
pub fn gradient_check(
    widths: &[usize],
    points: usize,
    h: f64,
    kink: f64,
    seed: u64,
) -> GradientCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = GradientCheck {
        checked: 0,
        skipped: 0,
        worst: 0.0,
    };
    while out.checked < points {
        let mut model = FnnModel::he_init(widths, rng.random()).unwrap();
        for layer in &mut model.layers {
            layer
                .biases
                .iter_mut()
                .for_each(|b| *b = rng.random_range(-0.5..0.5));
        }
        let x: Vec<f64> = (0..widths[0])
            .map(|_| rng.random_range(-2.0..2.0))
            .collect();
        if model
            .pre_activations(&x)
            .unwrap()
            .iter()
            .flatten()
            .any(|p| p.abs() < kink)
        {
            out.skipped += 1;
            continue;
        }
        let batch = Samples::from_rows(&[x], &[rng.random_range(-1.0..1.0)]).unwrap();
        let grads = backward(&model, &batch).unwrap();
        let l = rng.random_range(0..model.layers.len());
        let bias = rng.random_bool(0.2);
        let (analytic, numeric) = if bias {
            let k = rng.random_range(0..model.layers[l].biases.len());
            let b = model.layers[l].biases[k];
            model.layers[l].biases[k] = b + h;
            let plus = mse_loss(&model, &batch).unwrap();
            model.layers[l].biases[k] = b - h;
            let minus = mse_loss(&model, &batch).unwrap();
            (grads.biases[l][k], (plus - minus) / (2.0 * h))
        } else {
            let k = rng.random_range(0..model.layers[l].weights.len());
            let w = model.layers[l].weights[k];
            model.layers[l].weights[k] = w + h;
            let plus = mse_loss(&model, &batch).unwrap();
            model.layers[l].weights[k] = w - h;
            let minus = mse_loss(&model, &batch).unwrap();
            (grads.weights[l][k], (plus - minus) / (2.0 * h))
        };
        let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
        out.worst = out.worst.max(rel);
        out.checked += 1;
    }
    out
}
