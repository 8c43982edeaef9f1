//! The allocation-predicting model: five regression heads for the OAA
//! core/way/bandwidth requirement and the cliff position, on normalized
//! scales.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::mlp::{Activation, MlpParams, DEFAULT_DROPOUT};
use super::train::{mlp_train, TrainConfig, TrainReport};
use crate::error::{Error, Result};
use crate::features::{FeatureVector, ModelKind};
use crate::simenv::{OaaResult, ServerSpec};

pub const MODEL_A_LABELS: [&str; 5] = [
    "oaa_cores",
    "oaa_ways",
    "oaa_bw_units",
    "rcliff_cores",
    "rcliff_ways",
];

/// Raw (real-valued) prediction in resource units. Rounding to counts
/// happens at the scheduler boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OaaPrediction {
    pub oaa_cores: f64,
    pub oaa_ways: f64,
    pub oaa_bw_units: f64,
    pub rcliff_cores: f64,
    pub rcliff_ways: f64,
}

impl OaaPrediction {
    /// Rounds up (erring toward QoS safety) and clamps into the
    /// platform's valid range.
    pub fn to_counts(&self, spec: &ServerSpec) -> OaaResult {
        let up = |v: f64, max: u32| (v.ceil().max(1.0) as u32).min(max);
        OaaResult {
            oaa_cores: up(self.oaa_cores, spec.n_cores),
            oaa_ways: up(self.oaa_ways, spec.n_llc_ways),
            oaa_bw_units: up(self.oaa_bw_units, spec.mem_bw_units),
            rcliff_cores: up(self.rcliff_cores, spec.n_cores),
            rcliff_ways: up(self.rcliff_ways, spec.n_llc_ways),
        }
    }
}

/// Label scales: labels are stored normalized by the platform totals.
pub fn label_scales(spec: &ServerSpec) -> [f64; 5] {
    [
        spec.n_cores as f64,
        spec.n_llc_ways as f64,
        spec.mem_bw_units as f64,
        spec.n_cores as f64,
        spec.n_llc_ways as f64,
    ]
}

/// Normalized label row for one oracle result.
pub fn normalized_labels(oracle: &OaaResult, spec: &ServerSpec) -> Vec<f64> {
    let s = label_scales(spec);
    vec![
        oracle.oaa_cores as f64 / s[0],
        oracle.oaa_ways as f64 / s[1],
        oracle.oaa_bw_units as f64 / s[2],
        oracle.rcliff_cores as f64 / s[3],
        oracle.rcliff_ways as f64 / s[4],
    ]
}

#[derive(Debug, Clone)]
pub struct ModelA {
    pub net: MlpParams,
    pub platform: ServerSpec,
}

impl ModelA {
    pub fn new(platform: ServerSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = MlpParams::new(
            ModelKind::A.input_dim(),
            MODEL_A_LABELS.len(),
            Activation::Linear,
            DEFAULT_DROPOUT,
            &mut rng,
        );
        Self { net, platform }
    }

    pub fn from_net(net: MlpParams, platform: ServerSpec) -> Result<Self> {
        if net.input_dim() != ModelKind::A.input_dim()
            || net.output_dim() != MODEL_A_LABELS.len()
        {
            return Err(Error::DimensionMismatch {
                expected: ModelKind::A.input_dim(),
                got: net.input_dim(),
                context: "allocation model network".into(),
            });
        }
        Ok(Self { net, platform })
    }

    /// Trains on normalized labels; the returned MAE is converted back
    /// to resource units per output head.
    pub fn train(&mut self, data: &Dataset, cfg: &TrainConfig) -> Result<TrainReport> {
        let mut report = mlp_train(&mut self.net, data, cfg)?;
        let scales = label_scales(&self.platform);
        for (mae, scale) in report.test_mae.iter_mut().zip(scales) {
            *mae *= scale;
        }
        report.test_mae_mean = report.test_mae.iter().sum::<f64>() / scales.len() as f64;
        Ok(report)
    }

    pub fn predict(&self, features: &FeatureVector) -> Result<OaaPrediction> {
        if features.model != ModelKind::A {
            return Err(Error::Config(
                "allocation model needs the 12-field projection".into(),
            ));
        }
        let out = self.net.forward(&features.values)?;
        let s = label_scales(&self.platform);
        Ok(OaaPrediction {
            oaa_cores: (out[0] * s[0]).clamp(0.0, s[0]),
            oaa_ways: (out[1] * s[1]).clamp(0.0, s[1]),
            oaa_bw_units: (out[2] * s[2]).clamp(0.0, s[2]),
            rcliff_cores: (out[3] * s[3]).clamp(0.0, s[3]),
            rcliff_ways: (out[4] * s[4]).clamp(0.0, s[4]),
        })
    }
}
