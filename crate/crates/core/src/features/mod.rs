//! Feature extraction and normalization for the three models.
//!
//! All models consume slices of one fixed 14-entry telemetry vector.
//! The allocation-predicting model sees everything except the two
//! "expected" entries (12 features); the QoS-predicting model sees all
//! 14; the shepherd agent sees the 8 service-local signals. The field
//! order below is frozen and recorded in every dataset header.

mod normalization;

pub use normalization::{
    denormalize, normalize, FeatureBounds, NormalizationSpec, NORMALIZATION_SCHEMA_VERSION,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simenv::TelemetryRecord;

/// Canonical feature order. Indices into this table are frozen.
pub const FEATURE_NAMES: [&str; 14] = [
    "ipc",
    "cache_misses",
    "mbl",
    "cpu_usage",
    "virt_mem",
    "res_mem",
    "allocated_cores",
    "allocated_cache",
    "core_frequency",
    "expected_cores",
    "expected_cache",
    "neighbor_cores",
    "neighbor_cache",
    "neighbor_mbl",
];

pub const FEATURE_COUNT: usize = FEATURE_NAMES.len();

/// Which model a projection is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    A,
    B,
    C,
}

impl ModelKind {
    /// Feature indices used by this model, in canonical order.
    pub fn projection(&self) -> &'static [usize] {
        match self {
            // everything except the two expected-allocation entries
            ModelKind::A => &[0, 1, 2, 3, 4, 5, 6, 7, 8, 11, 12, 13],
            ModelKind::B => &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13],
            // service-local signals plus neighbor bandwidth pressure
            ModelKind::C => &[0, 1, 2, 3, 6, 7, 8, 13],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.projection().len()
    }

    pub fn feature_names(&self) -> Vec<&'static str> {
        self.projection().iter().map(|&i| FEATURE_NAMES[i]).collect()
    }
}

/// A normalized, model-specific feature projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub model: ModelKind,
    pub values: Vec<f64>,
}

/// Expected post-action allocation, fed only to the QoS model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedAllocation {
    pub cores: f64,
    pub ways: f64,
}

/// Assembles the full 14-entry raw vector from one telemetry record.
pub fn raw_vector(record: &TelemetryRecord, expected: Option<ExpectedAllocation>) -> [f64; 14] {
    let e = expected.unwrap_or(ExpectedAllocation {
        cores: 0.0,
        ways: 0.0,
    });
    [
        record.ipc,
        record.cache_misses_per_s,
        record.mbl_gbs,
        record.cpu_usage,
        record.virt_mem_mb,
        record.res_mem_mb,
        record.allocated_cores,
        record.allocated_ways,
        record.core_frequency_ghz,
        e.cores,
        e.ways,
        record.neighbor_cores,
        record.neighbor_ways,
        record.neighbor_mbl_gbs,
    ]
}

/// Builds the normalized projection for one model from a telemetry
/// record. `expected` must be supplied exactly when `model` is the QoS
/// model.
pub fn extract(
    record: &TelemetryRecord,
    model: ModelKind,
    expected: Option<ExpectedAllocation>,
    norm: &NormalizationSpec,
) -> Result<FeatureVector> {
    match (model, expected.is_some()) {
        (ModelKind::B, false) => {
            return Err(Error::Config(
                "QoS model projection requires an expected allocation".into(),
            ))
        }
        (ModelKind::A | ModelKind::C, true) => {
            return Err(Error::Config(
                "expected allocation is only meaningful for the QoS model".into(),
            ))
        }
        _ => {}
    }
    let raw = raw_vector(record, expected);
    let values = model
        .projection()
        .iter()
        .map(|&i| normalize(raw[i], norm.bounds(i)))
        .collect();
    Ok(FeatureVector { model, values })
}

/// Looks a service up in a tick's record set and extracts its features.
pub fn extract_from_tick(
    records: &[TelemetryRecord],
    service_id: &str,
    model: ModelKind,
    expected: Option<ExpectedAllocation>,
    norm: &NormalizationSpec,
) -> Result<FeatureVector> {
    let record = records
        .iter()
        .find(|r| r.service_id == service_id)
        .ok_or_else(|| Error::UnknownService(service_id.to_string()))?;
    extract(record, model, expected, norm)
}

/// Recovers raw feature values from a normalized projection (the
/// inverse only holds for values that were within bounds).
pub fn denormalize_projection(fv: &FeatureVector, norm: &NormalizationSpec) -> Vec<f64> {
    fv.model
        .projection()
        .iter()
        .zip(&fv.values)
        .map(|(&i, &v)| denormalize(v, norm.bounds(i)))
        .collect()
}
