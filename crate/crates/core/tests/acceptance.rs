//! Acceptance suite. Each test covers one numbered criterion and prints
//! a single PASS line on success (run with `--nocapture` to see them).
//!
//! Heavier criteria (model training, scheduler suites) share fixtures
//! via `OnceLock` so the corpus generation and supervised training run
//! once per test binary.

mod common;

use colosim::models::{compute_reward, RewardInputs};
use colosim::simenv::{
    generate_profile, moses_profile, oracle_oaa_rcliff, EffectiveGrant, Grant, OracleOutcome,
    ServerSpec,
};

fn pass(n: u32, name: &str) {
    println!("CRITERION {n} ({name}): PASS");
}

/// Criterion 1: the calibrated preset reproduces the published cells
/// 34 ms at (6 cores, 10 ways) and 4644 ms at (6 cores, 9 ways), both
/// within +-5%.
#[test]
fn criterion_01_calibration_anchor() {
    let p = moses_profile();
    let lat = |c: f64, w: f64| {
        p.surface.latency_ms(
            &EffectiveGrant {
                cores: c,
                ways: w,
                bw_units: 10.0,
            },
            p.reference_load,
        )
    };
    let a = lat(6.0, 10.0);
    let b = lat(6.0, 9.0);
    assert!(
        (a - 34.0).abs() / 34.0 <= 0.05,
        "corner cell {a} ms, want 34 ms +-5%"
    );
    assert!(
        (b - 4644.0).abs() / 4644.0 <= 0.05,
        "one way below {b} ms, want 4644 ms +-5%"
    );
    pass(1, "calibration anchor");
}

/// Criterion 2: for 100 seeded random surfaces the oracle's OAA
/// satisfies QoS while every cell dominated below it violates,
/// verified by exhaustive grid scan.
#[test]
fn criterion_02_oracle_soundness() {
    let spec = ServerSpec::preset("alpha").unwrap();
    for seed in 0..100u64 {
        let p = generate_profile(&spec, 0x0a_c1e_00 + seed);
        let out = oracle_oaa_rcliff(&p.surface, &spec, p.reference_load, p.qos_target_ms);
        let OracleOutcome::Feasible(r) = out else {
            panic!("generated surface {seed} must be feasible");
        };
        let lat = |c: u32, w: u32, b: u32| {
            p.surface
                .latency_grant_ms(&Grant::new(c, w, b), p.reference_load)
        };
        assert!(
            lat(r.oaa_cores, r.oaa_ways, r.oaa_bw_units) <= p.qos_target_ms,
            "seed {seed}: OAA violates QoS"
        );
        // exhaustive: everything dominated below the OAA is infeasible
        for c in 1..=r.oaa_cores {
            for w in 1..=r.oaa_ways {
                if c == r.oaa_cores && w == r.oaa_ways {
                    continue;
                }
                assert!(
                    lat(c, w, spec.mem_bw_units) > p.qos_target_ms,
                    "seed {seed}: ({c},{w}) feasible below OAA ({},{})",
                    r.oaa_cores,
                    r.oaa_ways
                );
            }
        }
        // the cliff cell itself violates
        if (r.rcliff_cores, r.rcliff_ways) != (r.oaa_cores, r.oaa_ways) {
            assert!(lat(r.rcliff_cores, r.rcliff_ways, spec.mem_bw_units) > p.qos_target_ms);
        }
        assert!(r.rcliff_cores <= r.oaa_cores && r.rcliff_ways <= r.oaa_ways);
    }
    pass(2, "oracle soundness on 100 surfaces");
}

/// Criterion 3: analytic gradients match central finite differences
/// (relative error < 1e-4) for the MSE training loss, the critic loss
/// and the actor loss, on 50 random instances each.
#[test]
fn criterion_03_gradient_checks() {
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        worst = worst.max(common::gradcheck::check_mse_loss(seed));
        worst = worst.max(common::gradcheck::check_critic_loss(seed));
        worst = worst.max(common::gradcheck::check_actor_loss(seed));
    }
    assert!(worst < 1e-4, "worst relative gradient error {worst}");
    pass(3, "gradient checks (worst rel err < 1e-4)");
}

/// Criterion 6: the reward matches hand-derived values on an enumerated
/// table spanning both pieces of the definition, with exact equality.
#[test]
fn criterion_06_reward_table() {
    let limits = [36.0, 20.0, 10.0];
    let r = |met: bool, lat: &[f64], tgt: &[f64], usage: [f64; 3]| {
        compute_reward(&RewardInputs {
            predicted_met: met,
            latencies_ms: lat,
            targets_ms: tgt,
            lc_usage: usage,
            limits,
        })
    };
    let u0 = [18.0, 10.0, 5.0];

    // violated branch: r = I + (1/N) sum min(1, target/latency)
    let cases_violated: Vec<(f64, f64)> = vec![
        (r(false, &[100.0], &[50.0], u0), 50.0 / 100.0),
        (r(true, &[100.0], &[50.0], u0), 1.0 + 50.0 / 100.0),
        (r(false, &[100.0, 25.0], &[50.0, 50.0], u0), (50.0 / 100.0 + 1.0) / 2.0),
        (r(true, &[100.0, 25.0], &[50.0, 50.0], u0), 1.0 + (50.0 / 100.0 + 1.0) / 2.0),
        (r(false, &[1.0e9], &[50.0], u0), 50.0 / 1.0e9),
        (
            r(false, &[60.0, 30.0, 30.0], &[50.0, 30.0, 40.0], u0),
            (50.0 / 60.0 + 1.0 + 1.0) / 3.0,
        ),
        (
            r(false, &[200.0, 400.0], &[50.0, 40.0], u0),
            (50.0 / 200.0 + 40.0 / 400.0) / 2.0,
        ),
        (
            r(true, &[200.0, 400.0], &[50.0, 40.0], u0),
            1.0 + (50.0 / 200.0 + 40.0 / 400.0) / 2.0,
        ),
        (r(false, &[0.0, 100.0], &[50.0, 50.0], u0), (1.0 + 50.0 / 100.0) / 2.0),
        (
            r(false, &[55.0, 45.0, 80.0, 20.0], &[50.0; 4], u0),
            (50.0 / 55.0 + 1.0 + 50.0 / 80.0 + 1.0) / 4.0,
        ),
        (
            r(false, &[1.0e9, 1.0e9], &[1.0, 1.0], u0),
            (1.0 / 1.0e9 + 1.0 / 1.0e9) / 2.0,
        ),
        (r(true, &[75.0], &[50.0], u0), 1.0 + 50.0 / 75.0),
    ];

    // met branch: r = 2 + (1/3) sum (1 - usage/limit)
    let met_lat = [40.0, 20.0];
    let met_tgt = [50.0, 30.0];
    let res = |usage: [f64; 3]| {
        ((1.0 - usage[0] / limits[0]) + (1.0 - usage[1] / limits[1]) + (1.0 - usage[2] / limits[2]))
            / 3.0
    };
    let cases_met: Vec<(f64, f64)> = vec![
        (r(true, &met_lat, &met_tgt, [18.0, 10.0, 5.0]), 2.0 + res([18.0, 10.0, 5.0])),
        (r(true, &met_lat, &met_tgt, [0.0, 0.0, 0.0]), 3.0),
        (r(true, &met_lat, &met_tgt, [36.0, 20.0, 10.0]), 2.0),
        (r(true, &met_lat, &met_tgt, [27.0, 15.0, 7.5]), 2.0 + res([27.0, 15.0, 7.5])),
        (r(true, &met_lat, &met_tgt, [9.0, 5.0, 2.5]), 2.0 + res([9.0, 5.0, 2.5])),
        (r(true, &met_lat, &met_tgt, [36.0, 0.0, 0.0]), 2.0 + res([36.0, 0.0, 0.0])),
        (r(true, &met_lat, &met_tgt, [12.0, 5.0, 1.0]), 2.0 + res([12.0, 5.0, 1.0])),
        // latency exactly at target counts as met
        (r(true, &[50.0, 30.0], &[50.0, 30.0], u0), 2.0 + res(u0)),
        // the indicator plays no role in the met branch
        (r(false, &met_lat, &met_tgt, u0), 2.0 + res(u0)),
        (
            r(true, &met_lat, &met_tgt, [35.0, 19.0, 9.0]),
            2.0 + res([35.0, 19.0, 9.0]),
        ),
    ];

    for (i, (got, want)) in cases_violated.iter().chain(&cases_met).enumerate() {
        assert_eq!(got, want, "reward case {i}");
    }
    assert!(cases_violated.len() + cases_met.len() >= 20);
    pass(6, "reward table exact on 22 configurations");
}
