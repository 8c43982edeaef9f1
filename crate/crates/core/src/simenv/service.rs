//! Service descriptions: latency-critical and best-effort.

use serde::{Deserialize, Serialize};

use super::surface::{BeProfile, ServiceProfile};
use crate::error::{Error, Result};

pub type ServiceId = String;

/// Piecewise-constant load over simulated time, as a fraction of the
/// service's max load. Segments are `(start_ms, fraction)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSchedule(pub Vec<(u64, f64)>);

impl LoadSchedule {
    pub fn constant(frac: f64) -> Self {
        Self(vec![(0, frac)])
    }

    pub fn at(&self, t_ms: u64) -> f64 {
        let mut level = 0.0;
        for &(start, frac) in &self.0 {
            if start <= t_ms {
                level = frac;
            } else {
                break;
            }
        }
        level
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::Config("empty load schedule".into()));
        }
        let mut prev = None;
        for &(start, frac) in &self.0 {
            if !(0.0..=1.0).contains(&frac) {
                return Err(Error::Config(format!("load fraction {frac} out of [0,1]")));
            }
            if let Some(p) = prev {
                if start <= p {
                    return Err(Error::Config("load schedule not strictly increasing".into()));
                }
            }
            prev = Some(start);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ServiceKind {
    Lc {
        profile: ServiceProfile,
        load: LoadSchedule,
    },
    Be {
        profile: BeProfile,
    },
}

/// One service of a workload: identity, kind and arrival time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ServiceSpec {
    pub service_id: ServiceId,
    pub arrival_ms: u64,
    pub kind: ServiceKind,
}

impl ServiceSpec {
    pub fn is_lc(&self) -> bool {
        matches!(self.kind, ServiceKind::Lc { .. })
    }

    pub fn qos_target_ms(&self) -> Option<f64> {
        match &self.kind {
            ServiceKind::Lc { profile, .. } => Some(profile.qos_target_ms),
            ServiceKind::Be { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ServiceKind::Lc { profile, load } => {
                profile.surface.validate()?;
                if profile.qos_target_ms <= 0.0 {
                    return Err(Error::Config("qos_target_ms must be positive".into()));
                }
                load.validate()
            }
            ServiceKind::Be { .. } => Ok(()),
        }
    }
}
