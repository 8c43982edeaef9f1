//! The central control framework coordinating the three models.
//!
//! Every monitor tick (100 ms simulated by default) the framework:
//! detects arrivals, QoS violations and over-provision; places new
//! services via the allocation model (depriving neighbors through the
//! QoS model when idle resources fall short); and lets the shepherd
//! agent correct one under-/over-provisioned service per tick, with a
//! one-tick rollback window for actions that trigger new violations.

mod deprivation;
mod log;

pub use deprivation::{
    best_fit_victims, cuts_by_service, plan_deprivation, plan_summary, score_neighbors,
    DeprivationPlan, SharingPlan, VictimCut, VictimScores, MAX_VICTIMS,
};
pub use log::{DecisionLog, DecisionRecord};

use std::collections::{BTreeMap, BTreeSet};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract, ExpectedAllocation, ModelKind, NormalizationSpec};
use crate::models::{
    compute_reward, ModelA, ModelB, RewardInputs, SchedulingAction, Transition,
};
use crate::models::AgentState;
use crate::simenv::{
    oracle_oaa_rcliff, Allocation, Grant, OaaResult, OracleOutcome, ServiceId, ServiceKind,
    SharingPair, SimEnv, TelemetryRecord,
};

/// Something the monitor noticed at a tick.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SchedulerEvent {
    pub timestamp_ms: u64,
    pub service_id: ServiceId,
    pub kind: SchedulerEventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchedulerEventKind {
    NewLc,
    NewBe,
    QosViolation,
    OverProvision,
}

/// Drives one scheduler implementation from the simulation loop.
pub trait Scheduler {
    fn name(&self) -> &'static str;
    fn on_tick(
        &mut self,
        env: &mut SimEnv,
        records: &[TelemetryRecord],
        log: &mut DecisionLog,
    ) -> Result<()>;
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MmsConfig {
    /// Victims' predicted latency/target ratio must stay at or below
    /// this bound for a deprivation plan to be acceptable.
    pub allowable_slowdown: f64,
    /// The upper-scheduler policy stub: whether sharing fallbacks that
    /// report a potential slowdown are allowed to proceed.
    pub allow_sharing: bool,
    /// Grant the cliff point instead of the OAA for new arrivals.
    pub use_rcliff_allocation: bool,
    /// Withdraw an action when the following tick shows a new violation.
    pub rollback_enabled: bool,
    /// Store transitions and update the agent online.
    pub online_learning: bool,
    /// Query the ground-truth oracle instead of the allocation model
    /// (used while training the shepherd before the model exists).
    pub use_oracle_oaa: bool,
    /// Act every tick on a round-robin focus service even without
    /// flagged events (episode training mode).
    pub train_mode: bool,
    /// Exploration noise sigma on the policy logits; 0 disables.
    pub noise_sigma: f64,
}

impl Default for MmsConfig {
    fn default() -> Self {
        Self {
            allowable_slowdown: 1.0,
            allow_sharing: true,
            use_rcliff_allocation: false,
            rollback_enabled: true,
            online_learning: true,
            use_oracle_oaa: false,
            train_mode: false,
            noise_sigma: 0.0,
        }
    }
}

struct PendingTransition {
    service: ServiceId,
    state: Vec<f64>,
    action_probs: Vec<f64>,
    action_id: usize,
    predicted_met: bool,
    log_index: usize,
}

struct RollbackWatch {
    snapshot: Allocation,
    violated_before: BTreeSet<ServiceId>,
    service: ServiceId,
}

/// The multi-model scheduler.
pub struct MultiModelScheduler {
    pub cfg: MmsConfig,
    pub model_a: ModelA,
    pub model_b: ModelB,
    pub agent: AgentState,
    norm: NormalizationSpec,
    stored_oaa: BTreeMap<ServiceId, OaaResult>,
    last_load: BTreeMap<ServiceId, f64>,
    handled: BTreeSet<ServiceId>,
    pending: Option<PendingTransition>,
    watch: Option<RollbackWatch>,
    rng_noise: ChaCha8Rng,
    rng_update: ChaCha8Rng,
    tick_counter: u64,
    last_step_reward: Option<f64>,
}

impl MultiModelScheduler {
    pub fn new(
        model_a: ModelA,
        model_b: ModelB,
        agent: AgentState,
        norm: NormalizationSpec,
        cfg: MmsConfig,
        seed: u64,
    ) -> Self {
        Self {
            cfg,
            model_a,
            model_b,
            agent,
            norm,
            stored_oaa: BTreeMap::new(),
            last_load: BTreeMap::new(),
            handled: BTreeSet::new(),
            pending: None,
            watch: None,
            rng_noise: ChaCha8Rng::seed_from_u64(seed ^ 0x6e01_5e11),
            rng_update: ChaCha8Rng::seed_from_u64(seed ^ 0x0bda_7e5f),
            tick_counter: 0,
            last_step_reward: None,
        }
    }

    /// Reward credited when the last action's transition completed, if
    /// one completed this tick. Consumed by the episode trainer.
    pub fn take_step_reward(&mut self) -> Option<f64> {
        self.last_step_reward.take()
    }

    pub fn set_noise_sigma(&mut self, sigma: f64) {
        self.cfg.noise_sigma = sigma;
    }

    pub fn stored_oaa(&self, id: &ServiceId) -> Option<&OaaResult> {
        self.stored_oaa.get(id)
    }

    fn violated_now(_env: &SimEnv, records: &[TelemetryRecord]) -> BTreeSet<ServiceId> {
        records
            .iter()
            .filter(|r| r.qos_target_ms > 0.0 && r.latency_ms > r.qos_target_ms)
            .map(|r| r.service_id.clone())
            .collect()
    }

    fn lc_reward_inputs(
        env: &SimEnv,
        records: &[TelemetryRecord],
    ) -> (Vec<f64>, Vec<f64>, [f64; 3], [f64; 3]) {
        let mut lats = Vec::new();
        let mut targets = Vec::new();
        for r in records {
            if r.qos_target_ms > 0.0 {
                lats.push(r.latency_ms);
                targets.push(r.qos_target_ms);
            }
        }
        let usage = env.allocation().lc_usage();
        let totals = env.server_spec().totals();
        (
            lats,
            targets,
            [usage.cores as f64, usage.ways as f64, usage.bw_units as f64],
            [totals[0] as f64, totals[1] as f64, totals[2] as f64],
        )
    }

    /// The monitor: arrivals, violations, over-provision, ordered by
    /// (timestamp, service id).
    pub fn detect_events(&self, env: &SimEnv, records: &[TelemetryRecord]) -> Vec<SchedulerEvent> {
        let mut events = Vec::new();
        let now = env.now_ms();
        for spec in env.arrived_services() {
            let id = &spec.service_id;
            if !self.handled.contains(id) {
                events.push(SchedulerEvent {
                    timestamp_ms: spec.arrival_ms,
                    service_id: id.clone(),
                    kind: if spec.is_lc() {
                        SchedulerEventKind::NewLc
                    } else {
                        SchedulerEventKind::NewBe
                    },
                });
                continue;
            }
            if !spec.is_lc() {
                continue;
            }
            let Some(record) = records.iter().find(|r| &r.service_id == id) else {
                continue;
            };
            if record.latency_ms > record.qos_target_ms {
                events.push(SchedulerEvent {
                    timestamp_ms: now,
                    service_id: id.clone(),
                    kind: SchedulerEventKind::QosViolation,
                });
            } else if let (Some(grant), Some(oaa)) =
                (env.allocation().grant_of(id), self.stored_oaa.get(id))
            {
                let ge = grant.cores >= oaa.oaa_cores
                    && grant.ways >= oaa.oaa_ways
                    && grant.bw_units >= oaa.oaa_bw_units;
                let strict = grant.cores > oaa.oaa_cores
                    || grant.ways > oaa.oaa_ways
                    || grant.bw_units > oaa.oaa_bw_units;
                if ge && strict {
                    events.push(SchedulerEvent {
                        timestamp_ms: now,
                        service_id: id.clone(),
                        kind: SchedulerEventKind::OverProvision,
                    });
                }
            }
        }
        events.sort();
        events
    }

    fn predict_oaa(
        &self,
        env: &SimEnv,
        id: &ServiceId,
        probe_record: &TelemetryRecord,
    ) -> Result<OaaResult> {
        if self.cfg.use_oracle_oaa {
            let spec = env.service_spec(id)?;
            if let ServiceKind::Lc { profile, .. } = &spec.kind {
                let load = env.current_load(id).max(1e-3);
                return match oracle_oaa_rcliff(
                    &profile.surface,
                    env.server_spec(),
                    load,
                    profile.qos_target_ms,
                ) {
                    OracleOutcome::Feasible(r) => Ok(r),
                    OracleOutcome::Infeasible => Ok(OaaResult {
                        oaa_cores: env.server_spec().n_cores,
                        oaa_ways: env.server_spec().n_llc_ways,
                        oaa_bw_units: env.server_spec().mem_bw_units,
                        rcliff_cores: env.server_spec().n_cores,
                        rcliff_ways: env.server_spec().n_llc_ways,
                    }),
                };
            }
            return Err(Error::Config("oracle OAA queried for a BE service".into()));
        }
        let fv = extract(probe_record, ModelKind::A, None, &self.norm)?;
        Ok(self.model_a.predict(&fv)?.to_counts(env.server_spec()))
    }

    /// Frees (if needed) and installs `want` for `requester`. Returns
    /// false when the request had to be queued (no bandwidth, or the
    /// deprivation plan is infeasible).
    fn acquire_and_grant(
        &mut self,
        env: &mut SimEnv,
        records: &[TelemetryRecord],
        requester: &ServiceId,
        mut want: Grant,
        event: &str,
        algorithm: &str,
        log: &mut DecisionLog,
    ) -> Result<bool> {
        let spec = env.server_spec().clone();
        let before = env.allocation().clone();
        let pool = before.be_pool(&spec);
        let cur = before.grant_of(requester).unwrap_or(Grant::zero());

        // bandwidth comes straight from the pool
        if want.bw_units > cur.bw_units {
            let avail = cur.bw_units + pool.bw_units;
            want.bw_units = want.bw_units.min(avail);
            if want.bw_units == 0 {
                log.push(DecisionRecord {
                    t_ms: env.now_ms(),
                    scheduler: self.name().into(),
                    event: event.into(),
                    algorithm: algorithm.into(),
                    service: requester.clone(),
                    action: "queued_no_bandwidth".into(),
                    allocation_before: before.clone(),
                    allocation_after: before,
                    reward: None,
                    rollback: false,
                });
                return Ok(false);
            }
        }

        let needed_c = want.cores.saturating_sub(cur.cores);
        let needed_w = want.ways.saturating_sub(cur.ways);
        let mut alloc = before.clone();

        let action: String;
        if needed_c == 0 && needed_w == 0 {
            alloc.lc_grants.insert(requester.clone(), want);
            action = format!("grant {}c/{}w/{}b", want.cores, want.ways, want.bw_units);
        } else {
            let plan = match plan_deprivation(
                env,
                records,
                needed_c,
                needed_w,
                requester,
                &self.model_b,
                &self.norm,
                self.cfg.allowable_slowdown,
                self.cfg.allow_sharing,
            ) {
                Ok(p) => p,
                Err(Error::DeprivationInfeasible(msg)) => {
                    log.push(DecisionRecord {
                        t_ms: env.now_ms(),
                        scheduler: self.name().into(),
                        event: event.into(),
                        algorithm: "deprivation".into(),
                        service: requester.clone(),
                        action: format!("queued_infeasible: {msg}"),
                        allocation_before: before.clone(),
                        allocation_after: before,
                        reward: None,
                        rollback: false,
                    });
                    return Ok(false);
                }
                Err(e) => return Err(e),
            };
            for (victim, cut) in cuts_by_service(&plan) {
                let g = alloc
                    .lc_grants
                    .get_mut(&victim)
                    .expect("victims hold grants");
                g.cores -= cut.cores;
                g.ways -= cut.ways;
            }
            let mut exclusive = want;
            if let Some(s) = &plan.sharing {
                let pg = alloc
                    .lc_grants
                    .get_mut(&s.partner)
                    .expect("sharing partner holds a grant");
                pg.cores -= s.cores;
                pg.ways -= s.ways;
                exclusive.cores -= s.cores;
                exclusive.ways -= s.ways;
                alloc.sharing_pairs.push(SharingPair {
                    first: s.partner.clone(),
                    second: requester.clone(),
                    shared_cores: s.cores,
                    shared_ways: s.ways,
                });
            }
            alloc.lc_grants.insert(requester.clone(), exclusive);
            action = format!(
                "grant {}c/{}w/{}b via [{}]",
                want.cores,
                want.ways,
                want.bw_units,
                plan_summary(&plan)
            );
        }

        env.install_allocation(alloc)?;
        log.push(DecisionRecord {
            t_ms: env.now_ms(),
            scheduler: self.name().into(),
            event: event.into(),
            algorithm: algorithm.into(),
            service: requester.clone(),
            action,
            allocation_before: before,
            allocation_after: env.allocation().clone(),
            reward: None,
            rollback: false,
        });
        Ok(true)
    }

    /// Algorithm for newly arrived services: LC placement through the
    /// allocation model, BE services onto the complement pool.
    fn handle_new_service(
        &mut self,
        env: &mut SimEnv,
        records: &[TelemetryRecord],
        id: &ServiceId,
        log: &mut DecisionLog,
    ) -> Result<()> {
        let spec = env.server_spec().clone();
        let service = env.service_spec(id)?.clone();
        match &service.kind {
            ServiceKind::Be { .. } => {
                let before = env.allocation().clone();
                let mut alloc = before.clone();
                alloc.be_members.push(id.clone());
                env.install_allocation(alloc)?;
                let shared_with = before.be_members.len();
                log.push(DecisionRecord {
                    t_ms: env.now_ms(),
                    scheduler: self.name().into(),
                    event: "new_be".into(),
                    algorithm: "placement".into(),
                    service: id.clone(),
                    action: if shared_with == 0 {
                        "map_to_non_lc_resources".into()
                    } else {
                        format!("share_be_pool_with_{shared_with}")
                    },
                    allocation_before: before,
                    allocation_after: env.allocation().clone(),
                    reward: None,
                    rollback: false,
                });
                self.handled.insert(id.clone());
            }
            ServiceKind::Lc { .. } => {
                let pool = env.allocation().be_pool(&spec);
                if pool.cores == 0 || pool.ways == 0 || pool.bw_units == 0 {
                    // nothing to probe on; retry next tick
                    let before = env.allocation().clone();
                    log.push(DecisionRecord {
                        t_ms: env.now_ms(),
                        scheduler: self.name().into(),
                        event: "new_lc".into(),
                        algorithm: "placement".into(),
                        service: id.clone(),
                        action: "queued_no_idle_resources".into(),
                        allocation_before: before.clone(),
                        allocation_after: before,
                        reward: None,
                        rollback: false,
                    });
                    return Ok(());
                }
                // map onto the idle resources and capture model inputs
                let mut probe = env.allocation().clone();
                probe.lc_grants.insert(id.clone(), pool);
                let probe_record = env.peek_record(id, &probe)?;
                let oaa = self.predict_oaa(env, id, &probe_record)?;
                let want = if self.cfg.use_rcliff_allocation {
                    Grant::new(oaa.rcliff_cores, oaa.rcliff_ways, oaa.oaa_bw_units)
                } else {
                    Grant::new(oaa.oaa_cores, oaa.oaa_ways, oaa.oaa_bw_units)
                };
                if self.acquire_and_grant(env, records, id, want, "new_lc", "model_a_placement", log)? {
                    self.handled.insert(id.clone());
                    self.stored_oaa.insert(id.clone(), oaa);
                    self.last_load.insert(id.clone(), env.current_load(id));
                }
            }
        }
        Ok(())
    }

    /// Picks the service the shepherd should act on.
    fn shepherd_focus(&self, env: &SimEnv, records: &[TelemetryRecord]) -> Option<ServiceId> {
        let mut worst_violation: Option<(f64, ServiceId)> = None;
        let mut worst_over: Option<(f64, ServiceId)> = None;
        for r in records {
            if r.qos_target_ms <= 0.0 || !self.handled.contains(&r.service_id) {
                continue;
            }
            if env.allocation().grant_of(&r.service_id).is_none() {
                continue;
            }
            let ratio = r.latency_ms / r.qos_target_ms;
            if ratio > 1.0 {
                if worst_violation
                    .as_ref()
                    .map_or(true, |(best, bid)| ratio > *best + 1e-12
                        || ((ratio - *best).abs() <= 1e-12 && r.service_id < *bid))
                {
                    worst_violation = Some((ratio, r.service_id.clone()));
                }
            } else if let (Some(grant), Some(oaa)) = (
                env.allocation().grant_of(&r.service_id),
                self.stored_oaa.get(&r.service_id),
            ) {
                let spec = env.server_spec();
                let excess = (grant.cores.saturating_sub(oaa.oaa_cores)) as f64
                    / spec.n_cores as f64
                    + (grant.ways.saturating_sub(oaa.oaa_ways)) as f64 / spec.n_llc_ways as f64
                    + (grant.bw_units.saturating_sub(oaa.oaa_bw_units)) as f64
                        / spec.mem_bw_units as f64;
                let ge = grant.cores >= oaa.oaa_cores
                    && grant.ways >= oaa.oaa_ways
                    && grant.bw_units >= oaa.oaa_bw_units;
                if ge && excess > 0.0 {
                    if worst_over
                        .as_ref()
                        .map_or(true, |(best, bid)| excess > *best + 1e-12
                            || ((excess - *best).abs() <= 1e-12 && r.service_id < *bid))
                    {
                        worst_over = Some((excess, r.service_id.clone()));
                    }
                }
            }
        }
        if let Some((_, id)) = worst_violation {
            return Some(id);
        }
        if let Some((_, id)) = worst_over {
            return Some(id);
        }
        if self.cfg.train_mode {
            // round-robin focus keeps the agent training every tick
            let granted: Vec<&ServiceId> = env.allocation().lc_grants.keys().collect();
            if granted.is_empty() {
                return None;
            }
            let i = (self.tick_counter as usize) % granted.len();
            return Some(granted[i].clone());
        }
        None
    }

    /// One shepherd step: select an action for the focus service,
    /// conduct it (through deprivation if idle resources fall short),
    /// arm the rollback watch and remember the pending transition.
    fn shepherd(
        &mut self,
        env: &mut SimEnv,
        records: &[TelemetryRecord],
        id: &ServiceId,
        log: &mut DecisionLog,
    ) -> Result<()> {
        let state = extract(
            records
                .iter()
                .find(|r| &r.service_id == id)
                .ok_or_else(|| Error::UnknownService(id.clone()))?,
            ModelKind::C,
            None,
            &self.norm,
        )?;
        let noise = if self.cfg.noise_sigma > 0.0 {
            Some((&mut self.rng_noise, self.cfg.noise_sigma))
        } else {
            None
        };
        let (chosen, probs) = self.agent.select_action(&state.values, noise)?;

        let before = env.allocation().clone();
        let violated_before = Self::violated_now(env, records);
        let cur = before.grant_of(id).unwrap_or(Grant::zero());
        let pool = before.be_pool(env.server_spec());

        // work out the post-action grant; infeasible actions degrade to
        // idle and still produce a transition (the reward carries the
        // penalty of having achieved nothing)
        let mut executed = chosen;
        let mut want = cur;
        match chosen {
            SchedulingAction::CoreUp => {
                if cur.cores < env.server_spec().n_cores {
                    want.cores += 1;
                } else {
                    executed = SchedulingAction::Idle;
                }
            }
            SchedulingAction::CoreDown => {
                if cur.cores > 1 {
                    want.cores -= 1;
                } else {
                    executed = SchedulingAction::Idle;
                }
            }
            SchedulingAction::WayUp => {
                if cur.ways < env.server_spec().n_llc_ways {
                    want.ways += 1;
                } else {
                    executed = SchedulingAction::Idle;
                }
            }
            SchedulingAction::WayDown => {
                if cur.ways > 1 {
                    want.ways -= 1;
                } else {
                    executed = SchedulingAction::Idle;
                }
            }
            SchedulingAction::BwUp => {
                if pool.bw_units >= 1 && cur.bw_units < env.server_spec().mem_bw_units {
                    want.bw_units += 1;
                } else {
                    executed = SchedulingAction::Idle;
                }
            }
            SchedulingAction::BwDown => {
                if cur.bw_units > 1 {
                    want.bw_units -= 1;
                } else {
                    executed = SchedulingAction::Idle;
                }
            }
            SchedulingAction::Idle => {}
        }

        // QoS-model indicator for the to-be-conducted allocation
        let expected = ExpectedAllocation {
            cores: want.cores as f64,
            ways: want.ways as f64,
        };
        let predicted_met = {
            let record = records.iter().find(|r| &r.service_id == id).unwrap();
            let fv = extract(record, ModelKind::B, Some(expected), &self.norm)?;
            self.model_b.predict(&fv)?.met
        };

        let mut changed = false;
        if executed != SchedulingAction::Idle && want != cur {
            match self.acquire_and_grant(
                env,
                records,
                id,
                want,
                "shepherd",
                "model_c",
                log,
            )? {
                true => changed = true,
                false => executed = SchedulingAction::Idle,
            }
        }

        let log_index = log.push(DecisionRecord {
            t_ms: env.now_ms(),
            scheduler: self.name().into(),
            event: "shepherd".into(),
            algorithm: "model_c".into(),
            service: id.clone(),
            action: if executed == chosen {
                chosen.name().to_string()
            } else {
                format!("{}->idle", chosen.name())
            },
            allocation_before: before.clone(),
            allocation_after: env.allocation().clone(),
            reward: None,
            rollback: false,
        });

        if changed && self.cfg.rollback_enabled {
            self.watch = Some(RollbackWatch {
                snapshot: before,
                violated_before,
                service: id.clone(),
            });
        }
        self.pending = Some(PendingTransition {
            service: id.clone(),
            state: state.values,
            action_probs: probs,
            action_id: chosen.id(),
            predicted_met,
            log_index,
        });
        Ok(())
    }

    fn complete_pending(
        &mut self,
        env: &SimEnv,
        records: &[TelemetryRecord],
        log: &mut DecisionLog,
    ) -> Result<()> {
        let Some(p) = self.pending.take() else {
            return Ok(());
        };
        let Ok(next_state) = extract(
            match records.iter().find(|r| r.service_id == p.service) {
                Some(r) => r,
                None => return Ok(()),
            },
            ModelKind::C,
            None,
            &self.norm,
        ) else {
            return Ok(());
        };
        let (lats, targets, usage, limits) = Self::lc_reward_inputs(env, records);
        if lats.is_empty() {
            return Ok(());
        }
        let reward = compute_reward(&RewardInputs {
            predicted_met: p.predicted_met,
            latencies_ms: &lats,
            targets_ms: &targets,
            lc_usage: usage,
            limits,
        });
        log.set_reward(p.log_index, reward);
        self.last_step_reward = Some(reward);
        if self.cfg.online_learning {
            self.agent.remember(Transition {
                state: p.state,
                action_probs: p.action_probs,
                action_id: p.action_id,
                reward,
                next_state: next_state.values,
            });
            self.agent.update(&mut self.rng_update)?;
        }
        Ok(())
    }

    fn maybe_rollback(
        &mut self,
        env: &mut SimEnv,
        records: &[TelemetryRecord],
        log: &mut DecisionLog,
    ) -> Result<bool> {
        let Some(w) = self.watch.take() else {
            return Ok(false);
        };
        let violated_now = Self::violated_now(env, records);
        let new_violation = violated_now.difference(&w.violated_before).next().is_some();
        if new_violation {
            let before = env.allocation().clone();
            env.install_allocation(w.snapshot.clone())?;
            log.push(DecisionRecord {
                t_ms: env.now_ms(),
                scheduler: self.name().into(),
                event: "rollback".into(),
                algorithm: "model_c".into(),
                service: w.service,
                action: "withdraw_last_action".into(),
                allocation_before: before,
                allocation_after: env.allocation().clone(),
                reward: None,
                rollback: true,
            });
            return Ok(true);
        }
        Ok(false)
    }

    /// Refresh stored OAA estimates when a service's load level moved.
    fn refresh_oaa_on_load_change(
        &mut self,
        env: &mut SimEnv,
        records: &[TelemetryRecord],
    ) -> Result<()> {
        let ids: Vec<ServiceId> = self.stored_oaa.keys().cloned().collect();
        for id in ids {
            let load = env.current_load(&id);
            let last = self.last_load.get(&id).copied().unwrap_or(load);
            if (load - last).abs() > 1e-9 {
                if let Some(record) = records.iter().find(|r| r.service_id == id) {
                    let oaa = self.predict_oaa(env, &id, record)?;
                    self.stored_oaa.insert(id.clone(), oaa);
                }
                self.last_load.insert(id, load);
            }
        }
        Ok(())
    }
}

impl Scheduler for MultiModelScheduler {
    fn name(&self) -> &'static str {
        "mms"
    }

    fn on_tick(
        &mut self,
        env: &mut SimEnv,
        records: &[TelemetryRecord],
        log: &mut DecisionLog,
    ) -> Result<()> {
        self.tick_counter += 1;
        self.last_step_reward = None;

        // close out the previous action: reward, replay, learning, then
        // the rollback window
        self.complete_pending(env, records, log)?;
        let rolled_back = self.maybe_rollback(env, records, log)?;
        self.refresh_oaa_on_load_change(env, records)?;

        let events = self.detect_events(env, records);
        let mut placed = false;
        for e in &events {
            match e.kind {
                SchedulerEventKind::NewLc | SchedulerEventKind::NewBe => {
                    self.handle_new_service(env, records, &e.service_id, log)?;
                    placed = true;
                }
                _ => {}
            }
        }

        // one shepherd action per tick, but only on a tick whose records
        // reflect the current allocation (placements and rollbacks get a
        // fresh observation first)
        if !placed && !rolled_back {
            if let Some(focus) = self.shepherd_focus(env, records) {
                self.shepherd(env, records, &focus, log)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
