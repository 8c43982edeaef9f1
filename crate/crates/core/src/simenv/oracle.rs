//! Brute-force ground truth for the optimal allocation area and the
//! resource cliff.
//!
//! The oracle scans the full (cores x ways) grid at full bandwidth,
//! takes the Pareto-minimal QoS-satisfying cells, and picks the one
//! with the smallest normalized resource footprint as the OAA. The
//! RCliff is the one-step reduction from the OAA with the largest
//! latency ratio jump. Bandwidth is resolved afterwards as the minimal
//! number of units that still satisfies QoS at the OAA core/way point.

use serde::{Deserialize, Serialize};

use super::spec::{Grant, ServerSpec};
use super::surface::LatencySurface;

/// Optimal allocation area and resource cliff for one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OaaResult {
    pub oaa_cores: u32,
    pub oaa_ways: u32,
    pub oaa_bw_units: u32,
    pub rcliff_cores: u32,
    pub rcliff_ways: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleOutcome {
    Feasible(OaaResult),
    /// No grid cell meets the QoS target at this load.
    Infeasible,
}

impl OracleOutcome {
    pub fn feasible(&self) -> Option<&OaaResult> {
        match self {
            OracleOutcome::Feasible(r) => Some(r),
            OracleOutcome::Infeasible => None,
        }
    }
}

pub fn oracle_oaa_rcliff(
    surface: &LatencySurface,
    spec: &ServerSpec,
    load: f64,
    qos_target_ms: f64,
) -> OracleOutcome {
    let n_c = spec.n_cores as usize;
    let n_w = spec.n_llc_ways as usize;
    let full_b = spec.mem_bw_units;

    // lat[c-1][w-1] at full bandwidth
    let mut lat = vec![vec![0.0f64; n_w]; n_c];
    for c in 1..=n_c {
        for w in 1..=n_w {
            lat[c - 1][w - 1] =
                surface.latency_grant_ms(&Grant::new(c as u32, w as u32, full_b), load);
        }
    }
    let feasible = |c: usize, w: usize| lat[c - 1][w - 1] <= qos_target_ms;

    if !feasible(n_c, n_w) {
        // Latency is monotone, so the full grant is the best cell.
        return OracleOutcome::Infeasible;
    }

    // Pareto-minimal feasible cells. Feasibility is upward closed, so
    // checking the two immediate predecessors suffices.
    let mut best: Option<(f64, usize, usize)> = None;
    for c in 1..=n_c {
        for w in 1..=n_w {
            if !feasible(c, w) {
                continue;
            }
            if c > 1 && feasible(c - 1, w) {
                continue;
            }
            if w > 1 && feasible(c, w - 1) {
                continue;
            }
            let footprint = c as f64 / n_c as f64 + w as f64 / n_w as f64;
            let key = (footprint, c, w);
            if best.map_or(true, |(bf, bc, bw)| key < (bf, bc, bw)) {
                best = Some(key);
            }
        }
    }
    let (_, oc, ow) = best.expect("feasible grid has a minimal cell");

    // The cliff is the one-step reduction with the largest latency jump.
    let here = lat[oc - 1][ow - 1];
    let jump_core = if oc > 1 {
        lat[oc - 2][ow - 1] / here
    } else {
        f64::NEG_INFINITY
    };
    let jump_way = if ow > 1 {
        lat[oc - 1][ow - 2] / here
    } else {
        f64::NEG_INFINITY
    };
    let (rc, rw) = if jump_way >= jump_core && ow > 1 {
        (oc, ow - 1)
    } else if oc > 1 {
        (oc - 1, ow)
    } else {
        (oc, ow)
    };

    // Minimal bandwidth that still meets QoS at the OAA core/way point.
    let mut oaa_bw = full_b;
    for b in 1..=full_b {
        if surface.latency_grant_ms(&Grant::new(oc as u32, ow as u32, b), load) <= qos_target_ms {
            oaa_bw = b;
            break;
        }
    }

    OracleOutcome::Feasible(OaaResult {
        oaa_cores: oc as u32,
        oaa_ways: ow as u32,
        oaa_bw_units: oaa_bw,
        rcliff_cores: rc as u32,
        rcliff_ways: rw as u32,
    })
}

/// Index of the maximum-curvature point of a discrete convex curve.
pub fn knee_index(ys: &[f64]) -> usize {
    if ys.len() < 3 {
        return ys.len().saturating_sub(1);
    }
    let mut best = 1;
    let mut best_k = f64::NEG_INFINITY;
    for i in 1..ys.len() - 1 {
        let d1 = (ys[i + 1] - ys[i - 1]) / 2.0;
        let d2 = ys[i + 1] - 2.0 * ys[i] + ys[i - 1];
        let k = d2.abs() / (1.0 + d1 * d1).powf(1.5);
        if k > best_k {
            best_k = k;
            best = i;
        }
    }
    best
}

/// QoS target derived as the latency at the knee of the latency-vs-load
/// curve under the full-server allocation.
pub fn knee_qos_target(surface: &LatencySurface, spec: &ServerSpec) -> f64 {
    let full = spec.full_grant();
    let loads: Vec<f64> = (1..=99).map(|i| i as f64 / 100.0).collect();
    let lats: Vec<f64> = loads
        .iter()
        .map(|&l| surface.latency_grant_ms(&full, l))
        .collect();
    lats[knee_index(&lats)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simenv::surface::{generate_profile, moses_profile};

    #[test]
    fn moses_oaa_and_rcliff() {
        let spec = ServerSpec::preset("alpha").unwrap();
        let p = moses_profile();
        let out = oracle_oaa_rcliff(&p.surface, &spec, p.reference_load, p.qos_target_ms);
        let r = out.feasible().expect("moses reference load is feasible");
        assert_eq!((r.oaa_cores, r.oaa_ways), (6, 10));
        assert_eq!((r.rcliff_cores, r.rcliff_ways), (6, 9));
    }

    #[test]
    fn infinite_target_is_minimal_cell() {
        let spec = ServerSpec::preset("alpha").unwrap();
        let p = moses_profile();
        let out = oracle_oaa_rcliff(&p.surface, &spec, 0.5, f64::INFINITY);
        let r = out.feasible().unwrap();
        assert_eq!(
            (r.oaa_cores, r.oaa_ways, r.oaa_bw_units),
            (1, 1, 1),
            "everything satisfies an infinite target"
        );
    }

    #[test]
    fn impossible_target_is_infeasible() {
        let spec = ServerSpec::preset("alpha").unwrap();
        let p = moses_profile();
        let out = oracle_oaa_rcliff(&p.surface, &spec, 0.9, 1e-3);
        assert_eq!(out, OracleOutcome::Infeasible);
    }

    #[test]
    fn oaa_is_minimal_on_random_surfaces() {
        let spec = ServerSpec::preset("alpha").unwrap();
        for seed in 0..25u64 {
            let p = generate_profile(&spec, seed);
            let out = oracle_oaa_rcliff(&p.surface, &spec, p.reference_load, p.qos_target_ms);
            let r = out.feasible().expect("generated surfaces are feasible");
            let lat = |c: u32, w: u32, b: u32| {
                p.surface
                    .latency_grant_ms(&Grant::new(c, w, b), p.reference_load)
            };
            assert!(lat(r.oaa_cores, r.oaa_ways, r.oaa_bw_units) <= p.qos_target_ms);
            // one unit less in any dimension violates QoS
            if r.oaa_cores > 1 {
                assert!(lat(r.oaa_cores - 1, r.oaa_ways, 10) > p.qos_target_ms);
            }
            if r.oaa_ways > 1 {
                assert!(lat(r.oaa_cores, r.oaa_ways - 1, 10) > p.qos_target_ms);
            }
            assert!(r.rcliff_cores <= r.oaa_cores && r.rcliff_ways <= r.oaa_ways);
        }
    }

    #[test]
    fn knee_of_quadratic() {
        // hockey-stick curve: flat then steep; knee at the bend
        let ys: Vec<f64> = (0..20)
            .map(|i| if i < 10 { i as f64 * 0.1 } else { (i - 10) as f64 * (i - 10) as f64 + 1.0 })
            .collect();
        let k = knee_index(&ys);
        assert!((9..=12).contains(&k), "knee at {k}");
    }
}
