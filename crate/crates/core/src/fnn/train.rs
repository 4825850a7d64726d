use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{loss_and_gradient, loss_and_gradient_parallel, FnnModel, Samples};
use crate::error::FnnError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub shuffle: bool,
    /// Stop after this many epochs without a new best validation RMSE.
    pub patience: usize,
    /// Gradient workers per mini-batch; 1 keeps everything on the caller's thread.
    #[serde(default = "one")]
    pub threads: usize,
}

fn one() -> usize {
    1
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            batch_size: 64,
            epochs: 200,
            seed: 0,
            shuffle: true,
            patience: 20,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), FnnError> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(FnnError::Invalid(format!(
                "learning rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(FnnError::Invalid("batch size must be at least 1".into()));
        }
        if self.threads == 0 {
            return Err(FnnError::Invalid("threads must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean squared error over the epoch's mini-batches, before each update.
    pub train_loss: f64,
    pub val_rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    /// Snapshot with the lowest validation RMSE (the initial weights count).
    pub model: FnnModel,
    pub history: Vec<EpochRecord>,
    /// Epoch of the returned snapshot; 0 means the initial weights.
    pub best_epoch: usize,
    pub best_val_rmse: f64,
}

/// Training settings and outcome stored next to the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingProvenance {
    pub config: TrainConfig,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_rmse: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_manifest_hash: Option<String>,
}

impl TrainingProvenance {
    pub fn new(config: TrainConfig, trained: &TrainedModel, manifest_hash: Option<String>) -> Self {
        Self {
            config,
            epochs_run: trained.history.len(),
            best_epoch: trained.best_epoch,
            best_val_rmse: trained.best_val_rmse,
            dataset_manifest_hash: manifest_hash,
        }
    }
}

/// Split rows into training and validation indices. Rows come in contiguous
/// groups (one per dataset); each group gives up `round(fraction * len)` rows,
/// chosen with a seeded shuffle.
pub fn split_validation(
    group_sizes: &[usize],
    fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut offset = 0;
    for &len in group_sizes {
        let mut idx: Vec<usize> = (offset..offset + len).collect();
        idx.shuffle(&mut rng);
        let n_val = ((fraction * len as f64).round() as usize).min(len);
        let (v, t) = idx.split_at(n_val);
        val.extend_from_slice(v);
        train.extend_from_slice(t);
        offset += len;
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

fn rmse_normalized(model: &FnnModel, normalized: &Samples) -> f64 {
    let n = normalized.len();
    let sum: f64 = (0..n)
        .map(|i| {
            let e = model.forward_normalized(normalized.row(i)) - normalized.target(i);
            e * e
        })
        .sum();
    (sum / n as f64).sqrt()
}

/// Mini-batch SGD with early stopping on validation RMSE. The model's
/// normalization is used as is; fit it on `train_set` beforehand. An empty
/// `val_set` falls back to the training RMSE.
pub fn train(
    model: FnnModel,
    train_set: &Samples,
    val_set: &Samples,
    config: &TrainConfig,
) -> Result<TrainedModel, FnnError> {
    config.validate()?;
    model.validate()?;
    if train_set.is_empty() {
        return Err(FnnError::EmptyBatch);
    }
    for set in [train_set, val_set] {
        if !set.is_empty() && set.n_features() != model.input_dim() {
            return Err(FnnError::DimensionMismatch {
                expected: model.input_dim(),
                got: set.n_features(),
            });
        }
    }
    let train_n = train_set.normalized(&model.norm);
    let val_n = val_set.normalized(&model.norm);
    let monitor = if val_n.is_empty() { &train_n } else { &val_n };

    let mut current = model;
    let mut best = current.clone();
    let mut best_val = rmse_normalized(&current, monitor);
    let mut best_epoch = 0;
    let mut history = Vec::with_capacity(config.epochs);
    let mut stale = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train_n.len()).collect();

    for epoch in 1..=config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let (loss, grads) = if config.threads > 1 {
                loss_and_gradient_parallel(&current, &train_n, batch, config.threads)
            } else {
                loss_and_gradient(&current, &train_n, batch)
            };
            loss_sum += loss * batch.len() as f64;
            if config.learning_rate == 0.0 {
                continue;
            }
            for (layer, (gw, gb)) in current
                .layers
                .iter_mut()
                .zip(grads.weights.iter().zip(&grads.biases))
            {
                layer
                    .weights
                    .iter_mut()
                    .zip(gw)
                    .for_each(|(w, g)| *w -= config.learning_rate * g);
                layer
                    .biases
                    .iter_mut()
                    .zip(gb)
                    .for_each(|(b, g)| *b -= config.learning_rate * g);
            }
        }
        let train_loss = loss_sum / train_n.len() as f64;
        let val_rmse = rmse_normalized(&current, monitor);
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_rmse,
        });
        if !train_loss.is_finite() || !val_rmse.is_finite() {
            return Err(FnnError::Diverged {
                epoch,
                loss: train_loss,
                history,
            });
        }
        if val_rmse < best_val {
            best_val = val_rmse;
            best = current.clone();
            best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    Ok(TrainedModel {
        model: best,
        history,
        best_epoch,
        best_val_rmse: best_val,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fnn::fit_normalization;

    fn line_data() -> Samples {
        let rows: Vec<Vec<f64>> = (0..201).map(|i| vec![-1.0 + i as f64 * 0.01]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 2.0 * r[0] + 1.0).collect();
        Samples::from_rows(&rows, &y).unwrap()
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let model = FnnModel::he_init(&[1, 4, 1], 5).unwrap();
        let config = TrainConfig {
            learning_rate: 0.0,
            epochs: 3,
            patience: 10,
            ..TrainConfig::default()
        };
        let out = train(model.clone(), &line_data(), &Samples::new(1), &config).unwrap();
        assert_eq!(out.model, model);
        assert_eq!(out.history.len(), 3);
    }

    #[test]
    fn linear_fit_recovers_slope_and_intercept() {
        let data = line_data();
        let mut model = FnnModel::zeros(&[1, 1]).unwrap();
        model.norm = fit_normalization(&data).unwrap();
        let config = TrainConfig {
            learning_rate: 0.05,
            batch_size: 16,
            epochs: 300,
            patience: 300,
            ..TrainConfig::default()
        };
        let out = train(model, &data, &Samples::new(1), &config).unwrap();
        let m = &out.model;
        let slope = m.layers[0].weights[0] / m.norm.std[0];
        let intercept = m.layers[0].biases[0] - slope * m.norm.mean[0];
        assert!((slope - 2.0).abs() < 1e-3, "{slope}");
        assert!((intercept - 1.0).abs() < 1e-3, "{intercept}");
    }

    #[test]
    fn divergence_is_reported() {
        let data = line_data();
        let model = FnnModel::he_init(&[1, 8, 1], 1).unwrap();
        let config = TrainConfig {
            learning_rate: 1e6,
            epochs: 50,
            patience: 50,
            ..TrainConfig::default()
        };
        match train(model, &data, &Samples::new(1), &config) {
            Err(FnnError::Diverged { history, epoch, .. }) => assert_eq!(history.len(), epoch),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn validation_split_is_stratified_and_seeded() {
        let (train_idx, val_idx) = split_validation(&[100, 50, 7], 0.1, 3);
        assert_eq!(val_idx.len(), 10 + 5 + 1);
        assert_eq!(train_idx.len() + val_idx.len(), 157);
        assert_eq!(val_idx.iter().filter(|&&i| i < 100).count(), 10);
        assert_eq!(
            val_idx.iter().filter(|&&i| (100..150).contains(&i)).count(),
            5
        );
        assert_eq!(split_validation(&[100, 50, 7], 0.1, 3).1, val_idx);
        assert_ne!(split_validation(&[100, 50, 7], 0.1, 4).1, val_idx);
    }
}
