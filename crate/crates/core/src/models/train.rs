//! Supervised training loop for the regression networks.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::dataset::Dataset;
use super::mlp::{MlpGrads, MlpParams};
use crate::error::{Error, Result};

/// Fraction of the corpus used for training under hold-out validation.
pub const TRAIN_FRACTION: f64 = 0.70;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            learning_rate: 1e-3,
            batch_size: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean squared training loss per epoch.
    pub epoch_losses: Vec<f64>,
    /// Held-out mean absolute error per output dimension.
    pub test_mae: Vec<f64>,
    pub test_mae_mean: f64,
    pub train_rows: usize,
    pub test_rows: usize,
}

/// Trains `params` on a 70/30 hold-out split of `data` with MSE loss
/// and Adam, returning the held-out MAE. Dropout is active during
/// training and disabled for evaluation.
pub fn mlp_train(params: &mut MlpParams, data: &Dataset, cfg: &TrainConfig) -> Result<TrainReport> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.feature_dim() != params.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: params.input_dim(),
            got: data.feature_dim(),
            context: "dataset features".into(),
        });
    }
    if data.label_dim() != params.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: params.output_dim(),
            got: data.label_dim(),
            context: "dataset labels".into(),
        });
    }

    let (train, test) = data.split(TRAIN_FRACTION, cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7a11_0f5e);
    let mut opt = Adam::new(params, cfg.learning_rate);
    let mut grads = MlpGrads::zeros_like(params);
    let out_dim = params.output_dim();

    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for _epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            grads.reset();
            let inv = 1.0 / chunk.len() as f64;
            let mut batch_loss = 0.0;
            for &i in chunk {
                let pass = params.forward_cached(&train.features[i], Some(&mut rng))?;
                let y = pass.output();
                let t = &train.labels[i];
                let mut d_out = vec![0.0; out_dim];
                for d in 0..out_dim {
                    let err = y[d] - t[d];
                    batch_loss += err * err * inv / out_dim as f64;
                    d_out[d] = 2.0 * err * inv / out_dim as f64;
                }
                params.backward(&pass, &d_out, &mut grads);
            }
            if !batch_loss.is_finite() {
                return Err(Error::TrainingDiverged(format!(
                    "non-finite loss {batch_loss} at epoch {_epoch}"
                )));
            }
            epoch_loss += batch_loss * chunk.len() as f64;
            opt.step(params, &grads);
        }
        epoch_losses.push(epoch_loss / train.len().max(1) as f64);
    }

    let test_mae = held_out_mae(params, &test)?;
    let test_mae_mean = test_mae.iter().sum::<f64>() / out_dim as f64;
    Ok(TrainReport {
        epoch_losses,
        test_mae,
        test_mae_mean,
        train_rows: train.len(),
        test_rows: test.len(),
    })
}

/// Per-output-dimension mean absolute error on a dataset.
pub fn held_out_mae(params: &MlpParams, data: &Dataset) -> Result<Vec<f64>> {
    let out_dim = params.output_dim();
    let mut mae = vec![0.0; out_dim];
    for (f, t) in data.features.iter().zip(&data.labels) {
        let y = params.forward(f)?;
        for d in 0..out_dim {
            mae[d] += (y[d] - t[d]).abs();
        }
    }
    let n = data.len().max(1) as f64;
    for m in &mut mae {
        *m /= n;
    }
    Ok(mae)
}

/// Transfer learning: copy the pretrained weights, then fine-tune on
/// the new corpus. Zero epochs returns the pretrained weights verbatim.
pub fn transfer_mlp(
    pretrained: &MlpParams,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<(MlpParams, TrainReport)> {
    if data.feature_dim() != pretrained.input_dim() || data.label_dim() != pretrained.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: pretrained.input_dim(),
            got: data.feature_dim(),
            context: "transfer corpus must match the pretrained architecture".into(),
        });
    }
    let mut params = pretrained.clone();
    if cfg.epochs == 0 {
        let (_, test) = data.split(TRAIN_FRACTION, cfg.seed);
        let test_mae = held_out_mae(&params, &test)?;
        let mean = test_mae.iter().sum::<f64>() / test_mae.len().max(1) as f64;
        return Ok((
            params,
            TrainReport {
                epoch_losses: vec![],
                test_mae,
                test_mae_mean: mean,
                train_rows: 0,
                test_rows: test.len(),
            },
        ));
    }
    let report = mlp_train(&mut params, data, cfg)?;
    Ok((params, report))
}
