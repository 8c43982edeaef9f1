//! The QoS-predicting model: a single regression head producing the
//! latency/target ratio expected after a to-be-conducted allocation.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::mlp::{Activation, MlpParams, DEFAULT_DROPOUT};
use super::train::{mlp_train, TrainConfig, TrainReport};
use crate::error::{Error, Result};
use crate::features::{FeatureVector, ModelKind};

/// Predicted ratios are clipped to this ceiling; anything above it is
/// a violation by an order of magnitude regardless.
pub const QOS_RATIO_CLIP: f64 = 10.0;

/// Predicted latency normalized by the QoS target. At or below 1 the
/// target is met.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QosPrediction {
    pub predicted_qos: f64,
    pub met: bool,
}

impl QosPrediction {
    pub fn from_ratio(ratio: f64) -> Self {
        let predicted_qos = ratio.clamp(0.0, QOS_RATIO_CLIP);
        Self {
            predicted_qos,
            met: predicted_qos <= 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModelB {
    pub net: MlpParams,
}

impl ModelB {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = MlpParams::new(
            ModelKind::B.input_dim(),
            1,
            Activation::Linear,
            DEFAULT_DROPOUT,
            &mut rng,
        );
        Self { net }
    }

    pub fn from_net(net: MlpParams) -> Result<Self> {
        if net.input_dim() != ModelKind::B.input_dim() || net.output_dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: ModelKind::B.input_dim(),
                got: net.input_dim(),
                context: "QoS model network".into(),
            });
        }
        Ok(Self { net })
    }

    /// Labels are latency/target ratios clipped to `[0, 10]`.
    pub fn train(&mut self, data: &Dataset, cfg: &TrainConfig) -> Result<TrainReport> {
        mlp_train(&mut self.net, data, cfg)
    }

    pub fn predict(&self, features: &FeatureVector) -> Result<QosPrediction> {
        if features.model != ModelKind::B {
            return Err(Error::Config(
                "QoS model needs the 14-field projection".into(),
            ));
        }
        let out = self.net.forward(&features.values)?;
        Ok(QosPrediction::from_ratio(out[0]))
    }
}

/// Classification accuracy of the met/violated indicator on a dataset
/// whose single label column is the true ratio.
pub fn indicator_accuracy(model: &ModelB, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut correct = 0usize;
    for (f, l) in data.features.iter().zip(&data.labels) {
        let pred = model.predict(&FeatureVector {
            model: ModelKind::B,
            values: f.clone(),
        })?;
        let truly_met = l[0] <= 1.0;
        if pred.met == truly_met {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}
