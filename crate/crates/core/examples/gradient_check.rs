//! Backpropagation against central finite differences on a 5-16-16-1 network.
//!
//! ```text
//! cargo run --release --example gradient_check
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spmt_hybrid::fnn::{backward, mse_loss, FnnModel, Samples};

const H: f64 = 1e-5;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut skipped = 0;
    while checked < 100 {
        let mut model = FnnModel::he_init(&[5, 16, 16, 1], rng.random())?;
        for layer in &mut model.layers {
            layer
                .biases
                .iter_mut()
                .for_each(|b| *b = rng.random_range(-0.5..0.5));
        }
        let x: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
        let near_kink = model
            .pre_activations(&x)?
            .iter()
            .flatten()
            .any(|p| p.abs() < 1e-6);
        if near_kink {
            skipped += 1;
            continue;
        }
        let batch = Samples::from_rows(&[x], &[rng.random_range(-1.0..1.0)])?;
        let grads = backward(&model, &batch)?;
        let l = rng.random_range(0..model.layers.len());
        let k = rng.random_range(0..model.layers[l].weights.len());
        let w = model.layers[l].weights[k];
        model.layers[l].weights[k] = w + H;
        let plus = mse_loss(&model, &batch)?;
        model.layers[l].weights[k] = w - H;
        let minus = mse_loss(&model, &batch)?;
        model.layers[l].weights[k] = w;
        let numeric = (plus - minus) / (2.0 * H);
        let analytic = grads.weights[l][k];
        let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-8);
        worst = worst.max(rel);
        checked += 1;
    }
    println!("{checked} points checked, {skipped} skipped near a ReLU kink");
    println!("worst relative error {worst:.2e}");
    Ok(())
}
