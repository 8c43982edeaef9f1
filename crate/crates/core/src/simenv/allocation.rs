//! The global resource partition among services.
//!
//! Latency-critical services hold exclusive grants (possibly extended by
//! two-party sharing), while best-effort services jointly occupy whatever
//! the LC services do not hold. Representing the BE side as the
//! complement makes it structurally impossible for a BE service to take
//! resources away from an LC service.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::service::ServiceId;
use super::spec::{EffectiveGrant, Grant, ServerSpec};
use crate::error::{Error, Result};

/// Fraction of a shared unit each of the two sharers effectively gets.
pub const SHARE_SPLIT: f64 = 0.5;

/// Two services jointly using the same cores/ways.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharingPair {
    pub first: ServiceId,
    pub second: ServiceId,
    pub shared_cores: u32,
    pub shared_ways: u32,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Allocation {
    /// Exclusive grants of latency-critical services.
    pub lc_grants: BTreeMap<ServiceId, Grant>,
    /// Two-party sharing agreements between LC services.
    pub sharing_pairs: Vec<SharingPair>,
    /// Best-effort services, all sharing the complement pool.
    pub be_members: Vec<ServiceId>,
}

impl Allocation {
    pub fn new() -> Self {
        Self::default()
    }

    fn shared_totals(&self) -> (u32, u32) {
        self.sharing_pairs
            .iter()
            .fold((0, 0), |(c, w), p| (c + p.shared_cores, w + p.shared_ways))
    }

    /// Resources held by LC services (exclusive grants plus shared units).
    pub fn lc_usage(&self) -> Grant {
        let mut total = Grant::zero();
        for g in self.lc_grants.values() {
            total = total.checked_add(g);
        }
        let (sc, sw) = self.shared_totals();
        total.cores += sc;
        total.ways += sw;
        total
    }

    /// The complement pool jointly used by best-effort services.
    pub fn be_pool(&self, spec: &ServerSpec) -> Grant {
        spec.full_grant().saturating_sub(&self.lc_usage())
    }

    /// Effective fractional resources a service can use, accounting for
    /// sharing splits and the BE pool division.
    pub fn effective(&self, id: &ServiceId, spec: &ServerSpec) -> EffectiveGrant {
        if let Some(g) = self.lc_grants.get(id) {
            let mut eff = EffectiveGrant::from(*g);
            for p in &self.sharing_pairs {
                if &p.first == id || &p.second == id {
                    eff.cores += SHARE_SPLIT * p.shared_cores as f64;
                    eff.ways += SHARE_SPLIT * p.shared_ways as f64;
                }
            }
            return eff;
        }
        if self.be_members.iter().any(|m| m == id) {
            let pool = EffectiveGrant::from(self.be_pool(spec));
            let k = self.be_members.len() as f64;
            return EffectiveGrant {
                cores: pool.cores / k,
                ways: pool.ways / k,
                bw_units: pool.bw_units / k,
            };
        }
        EffectiveGrant::default()
    }

    pub fn grant_of(&self, id: &ServiceId) -> Option<Grant> {
        self.lc_grants.get(id).copied()
    }

    pub fn holds(&self, id: &ServiceId) -> bool {
        self.lc_grants.contains_key(id) || self.be_members.iter().any(|m| m == id)
    }

    /// Checks every partition invariant against the platform.
    pub fn validate(&self, spec: &ServerSpec) -> Result<()> {
        for (id, g) in &self.lc_grants {
            if !g.within(spec) {
                return Err(Error::InvalidAllocation(format!(
                    "grant of `{id}` exceeds platform totals"
                )));
            }
        }
        for p in &self.sharing_pairs {
            if p.first == p.second {
                return Err(Error::InvalidAllocation(
                    "sharing pair must involve two distinct services".into(),
                ));
            }
            for id in [&p.first, &p.second] {
                if !self.lc_grants.contains_key(id) {
                    return Err(Error::InvalidAllocation(format!(
                        "sharing pair references non-LC service `{id}`"
                    )));
                }
            }
        }
        let used = self.lc_usage();
        let totals = spec.totals();
        let used_arr = used.as_array();
        for (i, name) in ["cores", "ways", "bw_units"].iter().enumerate() {
            if used_arr[i] > totals[i] {
                return Err(Error::InvalidAllocation(format!(
                    "{name} over-subscribed: {} > {}",
                    used_arr[i], totals[i]
                )));
            }
        }
        Ok(())
    }

    /// Pairs materialized for the decision log, including the chain of
    /// pairs that records BE co-occupancy of the pool.
    pub fn all_sharing_pairs(&self, spec: &ServerSpec) -> Vec<SharingPair> {
        let mut pairs = self.sharing_pairs.clone();
        let pool = self.be_pool(spec);
        for window in self.be_members.windows(2) {
            pairs.push(SharingPair {
                first: window[0].clone(),
                second: window[1].clone(),
                shared_cores: pool.cores,
                shared_ways: pool.ways,
            });
        }
        pairs
    }
}
