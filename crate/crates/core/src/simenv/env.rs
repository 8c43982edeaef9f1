//! The discrete-time server simulator.
//!
//! All state transitions are serialized through [`SimEnv::step`]; the
//! telemetry it emits is immutable and safe to hand to any consumer.
//! Simulated time is completely decoupled from wall time.

use std::collections::BTreeMap;

use super::allocation::Allocation;
use super::service::{ServiceId, ServiceKind, ServiceSpec};
use super::spec::{EffectiveGrant, Grant, ServerSpec};
use super::surface::UNSERVED_LATENCY_MS;
use super::telemetry::{
    be_signals, lc_signals, BeTelemetryCoeffs, LcTelemetryCoeffs, ServiceClass, TelemetryRecord,
};
use crate::error::{Error, Result};

/// Upper bound on accumulated backlog, in load-seconds.
const QUEUE_CAP: f64 = 1.0e6;

#[derive(Debug, Clone)]
enum Coeffs {
    Lc(LcTelemetryCoeffs),
    Be(BeTelemetryCoeffs),
}

#[derive(Debug, Clone)]
struct ServiceState {
    spec: ServiceSpec,
    queue_len: f64,
    coeffs: Coeffs,
}

/// Deterministic simulator of one server and its co-located services.
#[derive(Debug, Clone)]
pub struct SimEnv {
    spec: ServerSpec,
    services: BTreeMap<ServiceId, ServiceState>,
    allocation: Allocation,
    now_ms: u64,
}

impl SimEnv {
    pub fn new(spec: ServerSpec, services: Vec<ServiceSpec>) -> Result<Self> {
        spec.validate()?;
        let mut map = BTreeMap::new();
        for s in services {
            s.validate()?;
            let coeffs = match &s.kind {
                ServiceKind::Lc { profile, .. } => {
                    Coeffs::Lc(LcTelemetryCoeffs::from_seed(profile.surface.noise_seed))
                }
                ServiceKind::Be { profile } => {
                    Coeffs::Be(BeTelemetryCoeffs::from_seed(profile.seed))
                }
            };
            if map
                .insert(
                    s.service_id.clone(),
                    ServiceState {
                        spec: s,
                        queue_len: 0.0,
                        coeffs,
                    },
                )
                .is_some()
            {
                return Err(Error::Config("duplicate service id".into()));
            }
        }
        Ok(Self {
            spec,
            services: map,
            allocation: Allocation::new(),
            now_ms: 0,
        })
    }

    pub fn server_spec(&self) -> &ServerSpec {
        &self.spec
    }

    pub fn now_ms(&self) -> u64 {
        self.now_ms
    }

    pub fn allocation(&self) -> &Allocation {
        &self.allocation
    }

    pub fn service_spec(&self, id: &ServiceId) -> Result<&ServiceSpec> {
        self.services
            .get(id)
            .map(|s| &s.spec)
            .ok_or_else(|| Error::UnknownService(id.clone()))
    }

    pub fn service_ids(&self) -> impl Iterator<Item = &ServiceId> {
        self.services.keys()
    }

    pub fn queue_len(&self, id: &ServiceId) -> f64 {
        self.services.get(id).map(|s| s.queue_len).unwrap_or(0.0)
    }

    /// Services whose arrival time has been reached.
    pub fn arrived_services(&self) -> Vec<&ServiceSpec> {
        self.services
            .values()
            .filter(|s| s.spec.arrival_ms <= self.now_ms)
            .map(|s| &s.spec)
            .collect()
    }

    /// Atomically replaces the allocation. On any invariant violation
    /// the previous allocation is retained untouched.
    pub fn install_allocation(&mut self, alloc: Allocation) -> Result<()> {
        alloc.validate(&self.spec)?;
        for id in alloc.lc_grants.keys().chain(alloc.be_members.iter()) {
            if !self.services.contains_key(id) {
                return Err(Error::InvalidAllocation(format!(
                    "allocation references unknown service `{id}`"
                )));
            }
        }
        self.allocation = alloc;
        Ok(())
    }

    fn load_at(&self, state: &ServiceState, t_ms: u64) -> f64 {
        match &state.spec.kind {
            ServiceKind::Lc { load, .. } if state.spec.arrival_ms <= t_ms => load.at(t_ms),
            _ => 0.0,
        }
    }

    /// Current load level of a service (0 for BE or not-yet-arrived).
    pub fn current_load(&self, id: &ServiceId) -> f64 {
        self.services
            .get(id)
            .map(|s| self.load_at(s, self.now_ms))
            .unwrap_or(0.0)
    }

    /// Steady-state latency plus backlog drain time for an LC service
    /// under an effective grant.
    fn lc_latency_ms(
        state: &ServiceState,
        eff: &EffectiveGrant,
        load: f64,
        queue_len: f64,
    ) -> f64 {
        let ServiceKind::Lc { profile, .. } = &state.spec.kind else {
            return 0.0;
        };
        let steady = profile.surface.latency_ms(eff, load);
        if queue_len <= 0.0 {
            return steady;
        }
        let cap = profile.surface.capacity(eff.cores, eff.ways, eff.bw_units);
        if cap <= 0.0 {
            return UNSERVED_LATENCY_MS;
        }
        (steady + 1000.0 * queue_len / cap).min(UNSERVED_LATENCY_MS)
    }

    fn record_for(
        &self,
        state: &ServiceState,
        alloc: &Allocation,
        t_ms: u64,
        mbl_by_id: &BTreeMap<ServiceId, (f64, EffectiveGrant)>,
    ) -> TelemetryRecord {
        let id = &state.spec.service_id;
        let eff = alloc.effective(id, &self.spec);
        let load = self.load_at(state, t_ms);

        let (neighbor_cores, neighbor_ways, neighbor_mbl) = mbl_by_id
            .iter()
            .filter(|(other, _)| *other != id)
            .fold((0.0, 0.0, 0.0), |(c, w, m), (_, (mbl, e))| {
                (c + e.cores, w + e.ways, m + mbl)
            });

        match &state.spec.kind {
            ServiceKind::Lc { profile, .. } => {
                let sig = lc_signals(
                    &profile.surface,
                    match &state.coeffs {
                        Coeffs::Lc(c) => c,
                        Coeffs::Be(_) => unreachable!("LC service with BE coefficients"),
                    },
                    &eff,
                    load,
                    state.queue_len,
                    &self.spec,
                );
                let latency = Self::lc_latency_ms(state, &eff, load, state.queue_len);
                TelemetryRecord {
                    t_ms,
                    service_id: id.clone(),
                    class: ServiceClass::Lc,
                    ipc: sig.ipc,
                    cache_misses_per_s: sig.misses,
                    mbl_gbs: sig.mbl,
                    cpu_usage: sig.cpu_usage,
                    virt_mem_mb: sig.virt_mem,
                    res_mem_mb: sig.res_mem,
                    allocated_cores: eff.cores,
                    allocated_ways: eff.ways,
                    core_frequency_ghz: sig.freq,
                    neighbor_cores,
                    neighbor_ways,
                    neighbor_mbl_gbs: neighbor_mbl,
                    load,
                    queue_len: state.queue_len,
                    latency_ms: latency,
                    qos_target_ms: profile.qos_target_ms,
                    qos_met: latency <= profile.qos_target_ms,
                    exclusive_grant: alloc.grant_of(id).unwrap_or(Grant::zero()),
                    be_throughput: 0.0,
                }
            }
            ServiceKind::Be { profile } => {
                let (sig, thr) = be_signals(
                    profile,
                    match &state.coeffs {
                        Coeffs::Be(c) => c,
                        Coeffs::Lc(_) => unreachable!("BE service with LC coefficients"),
                    },
                    &eff,
                    &self.spec,
                );
                TelemetryRecord {
                    t_ms,
                    service_id: id.clone(),
                    class: ServiceClass::Be,
                    ipc: sig.ipc,
                    cache_misses_per_s: sig.misses,
                    mbl_gbs: sig.mbl,
                    cpu_usage: sig.cpu_usage,
                    virt_mem_mb: sig.virt_mem,
                    res_mem_mb: sig.res_mem,
                    allocated_cores: eff.cores,
                    allocated_ways: eff.ways,
                    core_frequency_ghz: sig.freq,
                    neighbor_cores,
                    neighbor_ways,
                    neighbor_mbl_gbs: neighbor_mbl,
                    load: 0.0,
                    queue_len: 0.0,
                    latency_ms: 0.0,
                    qos_target_ms: 0.0,
                    qos_met: true,
                    exclusive_grant: Grant::zero(),
                    be_throughput: thr,
                }
            }
        }
    }

    fn all_records(&self, alloc: &Allocation, t_ms: u64) -> Vec<TelemetryRecord> {
        // First pass: effective grants and bandwidth per service, needed
        // for the neighbor aggregates.
        let mut mbl_by_id: BTreeMap<ServiceId, (f64, EffectiveGrant)> = BTreeMap::new();
        for state in self.services.values() {
            if state.spec.arrival_ms > t_ms {
                continue;
            }
            let id = &state.spec.service_id;
            let eff = alloc.effective(id, &self.spec);
            let mbl = match (&state.spec.kind, &state.coeffs) {
                (ServiceKind::Lc { profile, .. }, Coeffs::Lc(c)) => {
                    lc_signals(
                        &profile.surface,
                        c,
                        &eff,
                        self.load_at(state, t_ms),
                        state.queue_len,
                        &self.spec,
                    )
                    .mbl
                }
                (ServiceKind::Be { profile }, Coeffs::Be(c)) => {
                    be_signals(profile, c, &eff, &self.spec).0.mbl
                }
                _ => unreachable!("service kind / coefficient mismatch"),
            };
            mbl_by_id.insert(id.clone(), (mbl, eff));
        }

        self.services
            .values()
            .filter(|s| s.spec.arrival_ms <= t_ms)
            .map(|s| self.record_for(s, alloc, t_ms, &mbl_by_id))
            .collect()
    }

    /// Advances the clock by exactly `dt_ms`, updates queues with the
    /// load level in force over the interval, and emits one record per
    /// arrived service at the new timestamp.
    pub fn step(&mut self, dt_ms: u64) -> Vec<TelemetryRecord> {
        assert!(dt_ms > 0, "dt_ms must be positive");
        debug_assert!(self.allocation.validate(&self.spec).is_ok());

        let t_start = self.now_ms;
        let dt_s = dt_ms as f64 / 1000.0;
        let updates: Vec<(ServiceId, f64)> = self
            .services
            .values()
            .filter(|s| s.spec.arrival_ms <= t_start && s.spec.is_lc())
            .map(|s| {
                let id = &s.spec.service_id;
                let eff = self.allocation.effective(id, &self.spec);
                let cap = match &s.spec.kind {
                    ServiceKind::Lc { profile, .. } => {
                        profile.surface.capacity(eff.cores, eff.ways, eff.bw_units)
                    }
                    ServiceKind::Be { .. } => 0.0,
                };
                let load = self.load_at(s, t_start);
                let q = (s.queue_len + (load - cap) * dt_s).clamp(0.0, QUEUE_CAP);
                (id.clone(), q)
            })
            .collect();
        for (id, q) in updates {
            self.services.get_mut(&id).expect("known service").queue_len = q;
        }

        self.now_ms = t_start + dt_ms;
        self.all_records(&self.allocation, self.now_ms)
    }

    /// Computes the record a service would emit right now under a
    /// hypothetical allocation, without mutating any state.
    pub fn peek_record(&self, id: &ServiceId, alloc: &Allocation) -> Result<TelemetryRecord> {
        if !self.services.contains_key(id) {
            return Err(Error::UnknownService(id.clone()));
        }
        self.all_records(alloc, self.now_ms)
            .into_iter()
            .find(|r| &r.service_id == id)
            .ok_or_else(|| Error::UnknownService(id.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simenv::service::LoadSchedule;
    use crate::simenv::surface::{moses_profile, BeProfile};

    fn lc(id: &str, load: f64) -> ServiceSpec {
        ServiceSpec {
            service_id: id.into(),
            arrival_ms: 0,
            kind: ServiceKind::Lc {
                profile: moses_profile(),
                load: LoadSchedule::constant(load),
            },
        }
    }

    fn env_with(services: Vec<ServiceSpec>) -> SimEnv {
        SimEnv::new(ServerSpec::preset("alpha").unwrap(), services).unwrap()
    }

    #[test]
    fn queue_stays_empty_with_headroom() {
        let mut env = env_with(vec![lc("a", 0.5)]);
        let mut alloc = Allocation::new();
        alloc.lc_grants.insert("a".into(), Grant::new(12, 12, 10));
        env.install_allocation(alloc).unwrap();
        for _ in 0..20 {
            env.step(100);
        }
        assert_eq!(env.queue_len(&"a".into()), 0.0);
    }

    #[test]
    fn queue_accumulates_linearly_at_half_capacity() {
        // Grant with capacity exactly half the load: queue grows by
        // 0.5 * load per second.
        let mut env = env_with(vec![lc("a", 0.9)]);
        let profile = moses_profile();
        // find a grant whose capacity is below the load
        let mut grant = None;
        'outer: for c in 1..=36u32 {
            for w in 1..=20u32 {
                let cap = profile.surface.capacity_grant(&Grant::new(c, w, 10));
                if (cap - 0.45).abs() < 0.08 {
                    grant = Some((Grant::new(c, w, 10), cap));
                    break 'outer;
                }
            }
        }
        let (g, cap) = grant.expect("alpha grid has a half-capacity cell");
        let mut alloc = Allocation::new();
        alloc.lc_grants.insert("a".into(), g);
        env.install_allocation(alloc).unwrap();
        for _ in 0..10 {
            env.step(100);
        }
        let expected = (0.9 - cap) * 1.0;
        assert!((env.queue_len(&"a".into()) - expected).abs() < 1e-9);
    }

    #[test]
    fn queue_drains_and_latency_recovers() {
        let mut env = env_with(vec![lc("a", 0.9)]);
        let mut starve = Allocation::new();
        starve.lc_grants.insert("a".into(), Grant::new(1, 1, 1));
        env.install_allocation(starve).unwrap();
        for _ in 0..10 {
            env.step(100);
        }
        let q0 = env.queue_len(&"a".into());
        assert!(q0 > 0.0);

        let mut generous = Allocation::new();
        generous.lc_grants.insert("a".into(), Grant::new(20, 16, 10));
        env.install_allocation(generous).unwrap();
        let profile = moses_profile();
        let cap = profile.surface.capacity_grant(&Grant::new(20, 16, 10));

        // Closed-form recursion: q(t) = max(0, q0 - (cap - load) * t)
        let mut q_expected = q0;
        for _ in 0..200 {
            let recs = env.step(100);
            q_expected = (q_expected - (cap - 0.9) * 0.1).max(0.0);
            let q = env.queue_len(&"a".into());
            assert!((q - q_expected).abs() < 1e-9);
            if q == 0.0 {
                let r = recs.iter().find(|r| r.service_id == "a").unwrap();
                assert!(r.latency_ms < profile.qos_target_ms);
                return;
            }
        }
        panic!("queue never drained");
    }

    #[test]
    fn ungranted_service_reports_unserved() {
        let mut env = env_with(vec![lc("a", 0.9)]);
        let recs = env.step(100);
        let r = recs.iter().find(|r| r.service_id == "a").unwrap();
        assert_eq!(r.latency_ms, UNSERVED_LATENCY_MS);
        assert!(!r.qos_met);
    }

    #[test]
    fn determinism_bit_identical() {
        let build = || {
            let mut env = env_with(vec![
                lc("a", 0.8),
                lc("b", 0.6),
                ServiceSpec {
                    service_id: "be".into(),
                    arrival_ms: 0,
                    kind: ServiceKind::Be {
                        profile: BeProfile::from_seed(4),
                    },
                },
            ]);
            let mut alloc = Allocation::new();
            alloc.lc_grants.insert("a".into(), Grant::new(8, 10, 4));
            alloc.lc_grants.insert("b".into(), Grant::new(8, 6, 4));
            alloc.be_members.push("be".into());
            env.install_allocation(alloc).unwrap();
            let mut out = Vec::new();
            for _ in 0..50 {
                out.extend(env.step(100));
            }
            serde_json::to_string(&out).unwrap()
        };
        assert_eq!(build(), build());
    }

    #[test]
    fn install_rejects_and_retains_previous() {
        let mut env = env_with(vec![lc("a", 0.5)]);
        let mut good = Allocation::new();
        good.lc_grants.insert("a".into(), Grant::new(4, 4, 4));
        env.install_allocation(good.clone()).unwrap();

        let mut bad = Allocation::new();
        bad.lc_grants.insert("a".into(), Grant::new(99, 4, 4));
        assert!(env.install_allocation(bad).is_err());
        assert_eq!(env.allocation(), &good);
    }

    #[test]
    fn peek_does_not_mutate() {
        let env = env_with(vec![lc("a", 0.5)]);
        let mut alloc = Allocation::new();
        alloc.lc_grants.insert("a".into(), Grant::new(10, 10, 10));
        let before = env.allocation().clone();
        let rec = env.peek_record(&"a".into(), &alloc).unwrap();
        assert!(rec.allocated_cores > 0.0);
        assert_eq!(env.allocation(), &before);
        assert!(env.peek_record(&"nope".into(), &alloc).is_err());
    }
}
