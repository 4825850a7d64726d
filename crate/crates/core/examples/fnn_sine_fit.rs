//! The from-scratch network on a toy problem: fit sin(x) on [-pi, pi].
//!
//! ```text
//! cargo run --release --example fnn_sine_fit
//! ```

use std::f64::consts::PI;

use spmt_hybrid::fnn::{fit_normalization, train, FnnModel, Samples, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = |n: usize| -> Result<Samples, spmt_hybrid::error::FnnError> {
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![-PI + 2.0 * PI * i as f64 / (n - 1) as f64])
            .collect();
        let ys: Vec<f64> = xs.iter().map(|x| x[0].sin()).collect();
        Samples::from_rows(&xs, &ys)
    };
    let train_set = grid(400)?;
    let val_set = grid(97)?;

    let mut model = FnnModel::he_init(&[1, 32, 32, 1], 3)?;
    model.norm = fit_normalization(&train_set)?;
    let config = TrainConfig {
        learning_rate: 0.02,
        batch_size: 16,
        epochs: 1000,
        patience: 200,
        ..TrainConfig::default()
    };
    let trained = train(model, &train_set, &val_set, &config)?;
    for r in trained.history.iter().step_by(100) {
        println!(
            "epoch {:4}  train mse {:.2e}  val rmse {:.4}",
            r.epoch, r.train_loss, r.val_rmse
        );
    }
    println!(
        "best epoch {} with validation RMSE {:.4}",
        trained.best_epoch, trained.best_val_rmse
    );
    for x in [-3.0, -1.5, 0.0, 1.0, 2.5] {
        println!(
            "  sin({x:5.2}) = {:7.4}   net {:7.4}",
            f64::sin(x),
            trained.model.forward(&[x])?
        );
    }
    Ok(())
}
