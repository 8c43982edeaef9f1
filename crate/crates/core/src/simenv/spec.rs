//! Platform description and resource grants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Memory bandwidth is partitioned in 10% granules, so every platform
/// exposes exactly ten bandwidth units.
pub const BW_UNITS: u32 = 10;

/// Total partitionable resources of a simulated platform.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServerSpec {
    pub platform_id: String,
    pub n_cores: u32,
    pub n_llc_ways: u32,
    pub mem_bw_units: u32,
}

impl ServerSpec {
    pub fn new(platform_id: impl Into<String>, n_cores: u32, n_llc_ways: u32) -> Self {
        Self {
            platform_id: platform_id.into(),
            n_cores,
            n_llc_ways,
            mem_bw_units: BW_UNITS,
        }
    }

    /// Reference platform presets used throughout the test suites.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "alpha" => Ok(Self::new("alpha", 36, 20)),
            "beta" => Ok(Self::new("beta", 64, 12)),
            "gamma" => Ok(Self::new("gamma", 48, 11)),
            other => Err(Error::Config(format!("unknown platform preset `{other}`"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cores < 1 || self.n_llc_ways < 1 {
            return Err(Error::Config(
                "platform needs at least one core and one LLC way".into(),
            ));
        }
        if self.mem_bw_units != BW_UNITS {
            return Err(Error::Config(format!(
                "mem_bw_units must be {BW_UNITS} (10% granules)"
            )));
        }
        Ok(())
    }

    pub fn full_grant(&self) -> Grant {
        Grant {
            cores: self.n_cores,
            ways: self.n_llc_ways,
            bw_units: self.mem_bw_units,
        }
    }

    pub fn totals(&self) -> [u32; 3] {
        [self.n_cores, self.n_llc_ways, self.mem_bw_units]
    }
}

/// A per-service resource grant in whole units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Grant {
    pub cores: u32,
    pub ways: u32,
    pub bw_units: u32,
}

impl Grant {
    pub fn new(cores: u32, ways: u32, bw_units: u32) -> Self {
        Self {
            cores,
            ways,
            bw_units,
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.cores == 0 && self.ways == 0 && self.bw_units == 0
    }

    pub fn within(&self, spec: &ServerSpec) -> bool {
        self.cores <= spec.n_cores
            && self.ways <= spec.n_llc_ways
            && self.bw_units <= spec.mem_bw_units
    }

    pub fn as_array(&self) -> [u32; 3] {
        [self.cores, self.ways, self.bw_units]
    }

    /// Saturating element-wise subtraction.
    pub fn saturating_sub(&self, other: &Grant) -> Grant {
        Grant {
            cores: self.cores.saturating_sub(other.cores),
            ways: self.ways.saturating_sub(other.ways),
            bw_units: self.bw_units.saturating_sub(other.bw_units),
        }
    }

    pub fn checked_add(&self, other: &Grant) -> Grant {
        Grant {
            cores: self.cores + other.cores,
            ways: self.ways + other.ways,
            bw_units: self.bw_units + other.bw_units,
        }
    }
}

/// Fractional view of a grant, used where sharing splits units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EffectiveGrant {
    pub cores: f64,
    pub ways: f64,
    pub bw_units: f64,
}

impl From<Grant> for EffectiveGrant {
    fn from(g: Grant) -> Self {
        Self {
            cores: g.cores as f64,
            ways: g.ways as f64,
            bw_units: g.bw_units as f64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        for name in ["alpha", "beta", "gamma"] {
            let spec = ServerSpec::preset(name).unwrap();
            spec.validate().unwrap();
            assert_eq!(spec.mem_bw_units, 10);
        }
        assert!(ServerSpec::preset("delta").is_err());
    }

    #[test]
    fn grant_bounds() {
        let spec = ServerSpec::preset("alpha").unwrap();
        assert!(Grant::new(36, 20, 10).within(&spec));
        assert!(!Grant::new(37, 20, 10).within(&spec));
    }
}
