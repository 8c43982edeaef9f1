//! Min/max normalization bounds, frozen per platform.
//!
//! The bounds are derived from the simulator's attainable extremes by
//! scanning a canonical set of generated service profiles over the
//! allocation grid, then persisted as a versioned TOML file keyed by
//! platform id and feature name.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FEATURE_COUNT, FEATURE_NAMES};
use crate::error::{Error, Result};
use crate::simenv::{
    base_frequency_ghz, generate_profile, moses_profile, EffectiveGrant, ServerSpec,
    MBL_PER_UNIT_GBS,
};

pub const NORMALIZATION_SCHEMA_VERSION: u32 = 1;

/// Number of generated profiles scanned when deriving bounds.
const DERIVE_PROFILES: u64 = 12;
const DERIVE_SALT: u64 = 0x6e0c_a11b;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureBounds {
    pub min: f64,
    pub max: f64,
}

/// Per-feature (min, max) bounds for one platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationSpec {
    pub schema_version: u32,
    pub platform_id: String,
    pub features: BTreeMap<String, FeatureBounds>,
}

impl NormalizationSpec {
    /// Validates structure; max <= min is a configuration error caught
    /// at load time, never at runtime.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != NORMALIZATION_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported normalization schema version {}",
                self.schema_version
            )));
        }
        for name in FEATURE_NAMES {
            let b = self
                .features
                .get(name)
                .ok_or_else(|| Error::Config(format!("missing bounds for feature `{name}`")))?;
            if !(b.max > b.min) {
                return Err(Error::Config(format!(
                    "feature `{name}`: max ({}) must exceed min ({})",
                    b.max, b.min
                )));
            }
        }
        Ok(())
    }

    pub fn bounds(&self, index: usize) -> FeatureBounds {
        self.features[FEATURE_NAMES[index]]
    }

    /// Scans the platform's attainable telemetry extremes and freezes
    /// them as bounds.
    pub fn derive(spec: &ServerSpec) -> Self {
        let mut lo = [f64::INFINITY; FEATURE_COUNT];
        let mut hi = [f64::NEG_INFINITY; FEATURE_COUNT];
        let mut take = |i: usize, v: f64| {
            lo[i] = lo[i].min(v);
            hi[i] = hi[i].max(v);
        };

        let mut profiles: Vec<_> = (0..DERIVE_PROFILES)
            .map(|i| generate_profile(spec, DERIVE_SALT.wrapping_add(i)))
            .collect();
        if spec.platform_id == "alpha" {
            profiles.push(moses_profile());
        }

        for p in &profiles {
            let coeffs = crate::simenv::LcTelemetryCoeffs::from_seed(p.surface.noise_seed);
            for c in (1..=spec.n_cores).step_by(2) {
                for w in (1..=spec.n_llc_ways).step_by(2) {
                    for b in [1, spec.mem_bw_units / 2, spec.mem_bw_units] {
                        for load in [0.05, 0.5, 1.0] {
                            for queue in [0.0, 1.0] {
                                let eff = EffectiveGrant {
                                    cores: c as f64,
                                    ways: w as f64,
                                    bw_units: b as f64,
                                };
                                let sig = crate::simenv::lc_signals_for_bounds(
                                    &p.surface, &coeffs, &eff, load, queue, spec,
                                );
                                take(0, sig.0);
                                take(1, sig.1);
                                take(2, sig.2);
                                take(3, sig.3);
                                take(4, sig.4);
                                take(5, sig.5);
                                take(8, sig.6);
                            }
                        }
                    }
                }
            }
        }

        // Structural bounds for allocation-valued and neighbor features.
        let cores_max = spec.n_cores as f64;
        let ways_max = spec.n_llc_ways as f64;
        take(6, 0.0);
        take(6, cores_max);
        take(7, 0.0);
        take(7, ways_max);
        take(9, 0.0);
        take(9, cores_max);
        take(10, 0.0);
        take(10, ways_max);
        take(11, 0.0);
        take(11, cores_max);
        take(12, 0.0);
        take(12, ways_max);
        take(13, 0.0);
        take(13, spec.mem_bw_units as f64 * MBL_PER_UNIT_GBS);
        // frequency floor can be reached by any busy service
        take(8, base_frequency_ghz(&spec.platform_id));
        // signals bottom out at zero grants
        for i in [0, 1, 2, 3] {
            take(i, 0.0);
        }

        let mut features = BTreeMap::new();
        for (i, name) in FEATURE_NAMES.iter().enumerate() {
            // pad so clamping only bites for genuinely out-of-family inputs
            let span = (hi[i] - lo[i]).max(1e-9);
            features.insert(
                name.to_string(),
                FeatureBounds {
                    min: lo[i] - 0.02 * span,
                    max: hi[i] + 0.02 * span,
                },
            );
        }
        Self {
            schema_version: NORMALIZATION_SCHEMA_VERSION,
            platform_id: spec.platform_id.clone(),
            features,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

/// `clamp((raw - min) / (max - min), 0, 1)`.
pub fn normalize(raw: f64, bounds: FeatureBounds) -> f64 {
    ((raw - bounds.min) / (bounds.max - bounds.min)).clamp(0.0, 1.0)
}

/// Inverse of [`normalize`] for in-range values.
pub fn denormalize(value: f64, bounds: FeatureBounds) -> f64 {
    bounds.min + value * (bounds.max - bounds.min)
}
