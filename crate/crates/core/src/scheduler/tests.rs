use super::*;
use crate::features::NormalizationSpec;
use crate::models::{AgentConfig, ModelA, ModelB, ACTION_COUNT};
use crate::simenv::{moses_profile, LoadSchedule, ServerSpec, ServiceSpec};

fn lc(id: &str, load: f64, arrival_ms: u64) -> ServiceSpec {
    ServiceSpec {
        service_id: id.into(),
        arrival_ms,
        kind: ServiceKind::Lc {
            profile: moses_profile(),
            load: LoadSchedule::constant(load),
        },
    }
}

fn be(id: &str, arrival_ms: u64) -> ServiceSpec {
    ServiceSpec {
        service_id: id.into(),
        arrival_ms,
        kind: ServiceKind::Be {
            profile: crate::simenv::BeProfile::from_seed(1),
        },
    }
}

/// A QoS model that predicts the same ratio for every input.
fn const_model_b(ratio: f64) -> ModelB {
    let mut b = ModelB::new(0);
    for w in &mut b.net.weights {
        w.fill(0.0);
    }
    for bias in &mut b.net.biases {
        bias.fill(0.0);
    }
    let last = b.net.biases.len() - 1;
    b.net.biases[last][0] = ratio;
    b
}

/// An agent whose actor always prefers one action.
fn biased_agent(action: SchedulingAction) -> AgentState {
    let mut agent = AgentState::new(8, AgentConfig::default(), 0);
    for w in &mut agent.actor.weights {
        w.fill(0.0);
    }
    for b in &mut agent.actor.biases {
        b.fill(0.0);
    }
    let last = agent.actor.biases.len() - 1;
    agent.actor.biases[last][action.id()] = 5.0;
    agent
}

fn scheduler(spec: &ServerSpec, cfg: MmsConfig, agent: AgentState) -> MultiModelScheduler {
    MultiModelScheduler::new(
        ModelA::new(spec.clone(), 0),
        const_model_b(0.5),
        agent,
        NormalizationSpec::derive(spec),
        cfg,
        7,
    )
}

fn oracle_cfg() -> MmsConfig {
    MmsConfig {
        use_oracle_oaa: true,
        ..Default::default()
    }
}

#[test]
fn arrival_gets_oracle_oaa_grant() {
    let spec = ServerSpec::preset("alpha").unwrap();
    let mut env = SimEnv::new(spec.clone(), vec![lc("svc", 0.9, 0)]).unwrap();
    let mut sched = scheduler(&spec, oracle_cfg(), biased_agent(SchedulingAction::Idle));
    let mut log = DecisionLog::new();

    let records = env.step(100);
    sched.on_tick(&mut env, &records, &mut log).unwrap();
    let grant = env.allocation().grant_of(&"svc".into()).unwrap();
    assert_eq!((grant.cores, grant.ways), (6, 10), "placement at the OAA");
    assert!(log.records.iter().any(|r| r.event == "new_lc"));

    // stable afterwards: no violations, no over-provision
    let records = env.step(100);
    let events = sched.detect_events(&env, &records);
    assert!(events.is_empty(), "stable service emits no events: {events:?}");
}

#[test]
fn violation_and_overprovision_events() {
    let spec = ServerSpec::preset("alpha").unwrap();
    let mut env = SimEnv::new(spec.clone(), vec![lc("svc", 0.9, 0)]).unwrap();
    let mut sched = scheduler(&spec, oracle_cfg(), biased_agent(SchedulingAction::Idle));
    let mut log = DecisionLog::new();
    let records = env.step(100);
    sched.on_tick(&mut env, &records, &mut log).unwrap();

    // one extra core on top of the stored OAA -> over-provision
    let mut over = env.allocation().clone();
    over.lc_grants.get_mut(&"svc".to_string()).unwrap().cores += 1;
    env.install_allocation(over).unwrap();
    let records = env.step(100);
    let events = sched.detect_events(&env, &records);
    assert_eq!(events.len(), 1);
    assert_eq!(events[0].kind, SchedulerEventKind::OverProvision);

    // one way below the cliff -> exactly one violation
    let mut starved = env.allocation().clone();
    let g = starved.lc_grants.get_mut(&"svc".to_string()).unwrap();
    g.cores -= 1;
    g.ways -= 1;
    env.install_allocation(starved).unwrap();
    let records = env.step(100);
    let events = sched.detect_events(&env, &records);
    assert_eq!(events.len(), 1);
    assert_eq!(events[0].kind, SchedulerEventKind::QosViolation);
}

#[test]
fn second_be_shares_pool_lc_untouched() {
    let spec = ServerSpec::preset("alpha").unwrap();
    let mut env = SimEnv::new(
        spec.clone(),
        vec![lc("svc", 0.9, 0), be("be0", 0), be("be1", 300)],
    )
    .unwrap();
    let mut sched = scheduler(&spec, oracle_cfg(), biased_agent(SchedulingAction::Idle));
    let mut log = DecisionLog::new();
    for _ in 0..5 {
        let records = env.step(100);
        sched.on_tick(&mut env, &records, &mut log).unwrap();
    }
    let alloc = env.allocation();
    assert_eq!(alloc.be_members, vec!["be0".to_string(), "be1".to_string()]);
    let grant = alloc.grant_of(&"svc".into()).unwrap();
    assert_eq!((grant.cores, grant.ways), (6, 10), "LC grant untouched");
    assert_eq!(alloc.all_sharing_pairs(&spec).len(), 1);
    // each BE sees half the pool
    let eff = alloc.effective(&"be0".into(), &spec);
    assert_eq!(eff.cores, (36.0 - 6.0) / 2.0);
}

#[test]
fn insufficient_idle_triggers_deprivation() {
    // tiny platform: the second service's OAA cannot fit in what is
    // left, so the plan must cut the first service
    let spec = ServerSpec::new("tiny", 12, 12);
    let mut env = SimEnv::new(spec.clone(), vec![lc("a", 0.9, 0), lc("b", 0.9, 300)]).unwrap();
    let mut sched = scheduler(&spec, oracle_cfg(), biased_agent(SchedulingAction::Idle));
    let mut log = DecisionLog::new();
    for _ in 0..5 {
        let records = env.step(100);
        sched.on_tick(&mut env, &records, &mut log).unwrap();
    }
    let b_grant = env.allocation().grant_of(&"b".into());
    assert!(b_grant.is_some(), "second arrival must be placed");
    let via = log
        .records
        .iter()
        .find(|r| r.service == "b" && r.action.contains("via ["))
        .expect("placement went through a deprivation plan");
    assert!(via.action.contains("a:-"), "plan cuts the neighbor: {}", via.action);
    env.allocation().validate(&spec).unwrap();
}

#[test]
fn harmful_scale_down_rolls_back_exactly() {
    let spec = ServerSpec::preset("alpha").unwrap();
    let mut env = SimEnv::new(spec.clone(), vec![lc("svc", 0.9, 0)]).unwrap();
    let cfg = MmsConfig {
        train_mode: true,
        ..oracle_cfg()
    };
    let mut sched = scheduler(&spec, cfg, biased_agent(SchedulingAction::WayDown));
    let mut log = DecisionLog::new();

    let records = env.step(100);
    sched.on_tick(&mut env, &records, &mut log).unwrap(); // placement
    let before = env.allocation().clone();

    let records = env.step(100);
    sched.on_tick(&mut env, &records, &mut log).unwrap(); // way_down off the cliff
    assert_eq!(
        env.allocation().grant_of(&"svc".into()).unwrap().ways,
        9,
        "scale-down executed"
    );

    let records = env.step(100);
    sched.on_tick(&mut env, &records, &mut log).unwrap(); // violation observed -> rollback
    assert_eq!(env.allocation(), &before, "rollback restores bit-identically");
    let rb = log.records.iter().find(|r| r.rollback).expect("rollback logged");
    assert_eq!(rb.service, "svc");
    // the transition that caused it is still in the pool with its reward
    assert!(sched.agent.pool.len() >= 1);
    let stored_reward = log
        .records
        .iter()
        .find(|r| r.event == "shepherd" && r.reward.is_some())
        .and_then(|r| r.reward)
        .expect("completed transition carries its reward");
    assert!(stored_reward < 2.0, "violating action earns a QoS-branch reward");
}

#[test]
fn idle_action_stores_transition_and_changes_nothing() {
    let spec = ServerSpec::preset("alpha").unwrap();
    let mut env = SimEnv::new(spec.clone(), vec![lc("svc", 0.9, 0)]).unwrap();
    let cfg = MmsConfig {
        train_mode: true,
        ..oracle_cfg()
    };
    let mut sched = scheduler(&spec, cfg, biased_agent(SchedulingAction::Idle));
    let mut log = DecisionLog::new();
    let records = env.step(100);
    sched.on_tick(&mut env, &records, &mut log).unwrap();
    let alloc_after_placement = env.allocation().clone();
    for _ in 0..3 {
        let records = env.step(100);
        sched.on_tick(&mut env, &records, &mut log).unwrap();
    }
    assert_eq!(env.allocation(), &alloc_after_placement);
    assert!(sched.agent.pool.len() >= 2, "idle transitions are stored");
    assert!(sched.take_step_reward().is_some() || !log.records.is_empty());
}

#[test]
fn be_pool_sufficient_plan_has_no_victims() {
    let spec = ServerSpec::preset("alpha").unwrap();
    let mut env = SimEnv::new(spec.clone(), vec![lc("a", 0.9, 0), be("be0", 0)]).unwrap();
    let mut alloc = Allocation::new();
    alloc.lc_grants.insert("a".into(), Grant::new(6, 10, 6));
    alloc.be_members.push("be0".into());
    env.install_allocation(alloc).unwrap();
    let records = env.step(100);
    let norm = NormalizationSpec::derive(&spec);
    let model_b = const_model_b(0.5);
    let plan = plan_deprivation(
        &env, &records, 4, 3, &"a".into(), &model_b, &norm, 1.0, true,
    )
    .unwrap();
    assert_eq!((plan.be_cores, plan.be_ways), (4, 3));
    assert!(plan.victims.is_empty());
    assert!(plan.sharing.is_none());
}

#[test]
fn zero_request_rejected() {
    let spec = ServerSpec::preset("alpha").unwrap();
    let mut env = SimEnv::new(spec.clone(), vec![lc("a", 0.9, 0)]).unwrap();
    let records = env.step(100);
    let norm = NormalizationSpec::derive(&spec);
    let model_b = const_model_b(0.5);
    assert!(plan_deprivation(&env, &records, 0, 0, &"a".into(), &model_b, &norm, 1.0, true).is_err());
}

#[test]
fn unallowable_slowdown_falls_back_to_sharing_then_infeasible() {
    let spec = ServerSpec::new("tiny", 12, 12);
    let mut env = SimEnv::new(spec.clone(), vec![lc("a", 0.9, 0), lc("b", 0.9, 0)]).unwrap();
    let mut alloc = Allocation::new();
    alloc.lc_grants.insert("a".into(), Grant::new(12, 12, 10));
    env.install_allocation(alloc).unwrap();
    let records = env.step(100);
    let norm = NormalizationSpec::derive(&spec);
    // every prediction violates the allowable bound
    let model_b = const_model_b(3.0);
    let plan = plan_deprivation(
        &env, &records, 4, 2, &"b".into(), &model_b, &norm, 1.0, true,
    )
    .unwrap();
    let sharing = plan.sharing.expect("falls back to sharing");
    assert_eq!(sharing.partner, "a");
    assert_eq!((sharing.cores, sharing.ways), (4, 2));

    let err = plan_deprivation(
        &env, &records, 4, 2, &"b".into(), &model_b, &norm, 1.0, false,
    );
    assert!(matches!(err, Err(Error::DeprivationInfeasible(_))));
}

#[test]
fn best_fit_prefers_fewer_victims_on_ties() {
    let mk = |id: &str, max_c: u32, max_w: u32, s: f64| VictimScores {
        service_id: id.into(),
        max_cores: max_c,
        max_ways: max_w,
        score: vec![vec![s; max_w as usize + 1]; max_c as usize + 1],
    };
    let scores = vec![mk("a", 2, 2, 0.5), mk("b", 2, 2, 0.5)];
    let victims = best_fit_victims(&scores, 2, 0, 1.0).unwrap();
    assert_eq!(victims.len(), 1, "single victim beats splitting on equal scores");
    assert_eq!(victims[0].service_id, "a");
    assert_eq!((victims[0].cores, victims[0].ways), (2, 0));

    // infeasible when over the allowable bound
    assert!(best_fit_victims(&scores, 2, 0, 0.4).is_none());
    // more than the victims can give
    assert!(best_fit_victims(&scores, 7, 0, 1.0).is_none());
}

#[test]
fn shepherd_scales_up_violating_service() {
    // start the service below its OAA via the rcliff flag, then let the
    // shepherd fix the violation with scale-ups
    let spec = ServerSpec::preset("alpha").unwrap();
    let mut env = SimEnv::new(spec.clone(), vec![lc("svc", 0.9, 0)]).unwrap();
    let cfg = MmsConfig {
        use_rcliff_allocation: true,
        rollback_enabled: false,
        ..oracle_cfg()
    };
    let mut sched = scheduler(&spec, cfg, biased_agent(SchedulingAction::WayUp));
    let mut log = DecisionLog::new();
    let records = env.step(100);
    sched.on_tick(&mut env, &records, &mut log).unwrap();
    let g0 = env.allocation().grant_of(&"svc".into()).unwrap();
    assert_eq!((g0.cores, g0.ways), (6, 9), "rcliff allocation flag honored");

    let records = env.step(100);
    sched.on_tick(&mut env, &records, &mut log).unwrap();
    let g1 = env.allocation().grant_of(&"svc".into()).unwrap();
    assert_eq!(g1.ways, g0.ways + 1, "exactly one step unit added");
}

#[test]
fn events_are_totally_ordered() {
    let a = SchedulerEvent {
        timestamp_ms: 100,
        service_id: "b".into(),
        kind: SchedulerEventKind::QosViolation,
    };
    let b = SchedulerEvent {
        timestamp_ms: 100,
        service_id: "a".into(),
        kind: SchedulerEventKind::OverProvision,
    };
    let c = SchedulerEvent {
        timestamp_ms: 50,
        service_id: "z".into(),
        kind: SchedulerEventKind::NewLc,
    };
    let mut v = vec![a.clone(), b.clone(), c.clone()];
    v.sort();
    assert_eq!(v, vec![c, b, a], "ordered by (timestamp, service_id)");
}

#[test]
fn action_count_is_seven() {
    assert_eq!(ACTION_COUNT, 7);
    assert_eq!(SchedulingAction::all().len(), 7);
    assert_eq!(SchedulingAction::Idle.id(), 6);
}
