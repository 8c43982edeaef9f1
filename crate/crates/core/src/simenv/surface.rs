//! Parametric tail-latency surfaces for latency-critical services.
//!
//! A surface maps a resource grant and an offered load to a tail latency.
//! The model is queueing-flavored: each grant yields a service *capacity*
//! in load-fraction units, and latency blows up as load approaches that
//! capacity. Capacity is a product of per-resource factors that grow
//! concavely above a knee and collapse exponentially below it; the
//! collapse is what produces the resource cliff.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::spec::{EffectiveGrant, Grant, ServerSpec};
use crate::error::{Error, Result};

/// Latency reported when a grant cannot serve any load at all
/// (for example zero cores). Also the cap for finite latencies.
pub const UNSERVED_LATENCY_MS: f64 = 1.0e9;

/// Smallest headroom used when load sits essentially at capacity.
const MIN_HEADROOM: f64 = 1.0e-9;

/// Shape of one resource's contribution to capacity.
///
/// At the knee the factor is exactly 1. Above it, returns diminish as
/// `(x/knee)^concavity`; below it, capacity decays as
/// `exp(-sharpness * cliff_weight * (knee - x))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceCurve {
    pub knee: f64,
    pub concavity: f64,
    pub cliff_weight: f64,
}

impl ResourceCurve {
    pub fn factor(&self, x: f64, sharpness: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= self.knee {
            (x / self.knee).powf(self.concavity)
        } else {
            (-sharpness * self.cliff_weight * (self.knee - x)).exp()
        }
    }
}

/// Per-service latency surface with an embedded resource cliff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencySurface {
    pub base_latency_ms: f64,
    /// Overall capacity scale, in load-fraction units at the knee corner.
    pub cap_scale: f64,
    pub cores: ResourceCurve,
    pub ways: ResourceCurve,
    pub bw: ResourceCurve,
    pub cliff_sharpness: f64,
    pub noise_seed: u64,
}

impl LatencySurface {
    /// Effective service capacity (in load-fraction units) of a grant.
    pub fn capacity(&self, cores: f64, ways: f64, bw_units: f64) -> f64 {
        if cores <= 0.0 || ways <= 0.0 || bw_units <= 0.0 {
            return 0.0;
        }
        self.cap_scale
            * self.cores.factor(cores, self.cliff_sharpness)
            * self.ways.factor(ways, self.cliff_sharpness)
            * self.bw.factor(bw_units, self.cliff_sharpness)
    }

    pub fn capacity_grant(&self, grant: &Grant) -> f64 {
        self.capacity(grant.cores as f64, grant.ways as f64, grant.bw_units as f64)
    }

    /// Steady-state latency of a grant at the given load, without any
    /// queue backlog. Saturated or zero grants yield the unserved
    /// sentinel rather than an error.
    pub fn latency_ms(&self, grant: &EffectiveGrant, load: f64) -> f64 {
        let cap = self.capacity(grant.cores, grant.ways, grant.bw_units);
        if cap <= 0.0 {
            return UNSERVED_LATENCY_MS;
        }
        let headroom = 1.0 - load / cap;
        if headroom <= MIN_HEADROOM {
            return UNSERVED_LATENCY_MS;
        }
        (self.base_latency_ms / headroom).min(UNSERVED_LATENCY_MS)
    }

    pub fn latency_grant_ms(&self, grant: &Grant, load: f64) -> f64 {
        self.latency_ms(&EffectiveGrant::from(*grant), load)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.base_latency_ms > 0.0
            && self.cap_scale > 0.0
            && self.cliff_sharpness > 0.0
            && [&self.cores, &self.ways, &self.bw].iter().all(|c| {
                c.knee >= 1.0 && c.concavity > 0.0 && c.concavity < 1.0 && c.cliff_weight >= 0.0
            });
        if ok {
            Ok(())
        } else {
            Err(Error::Config("invalid latency surface parameters".into()))
        }
    }
}

/// The latency anchors a calibrated surface must reproduce: latency at
/// the knee corner and latency one way below it, at `reference_load`.
#[derive(Debug, Clone, Copy)]
pub struct CalibrationAnchors {
    pub reference_load: f64,
    pub latency_at_corner_ms: f64,
    pub latency_one_way_below_ms: f64,
}

/// A surface together with the operating point it was calibrated for.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ServiceProfile {
    pub surface: LatencySurface,
    pub reference_load: f64,
    pub qos_target_ms: f64,
}

/// Builds a surface whose capacity at the knee corner `(knee_c, knee_w,
/// full bw)` reproduces the two latency anchors exactly.
///
/// The two anchor equations are solved in closed form: the corner
/// capacity fixes `cap_scale` and the one-way-below capacity fixes the
/// way-cliff sharpness.
pub fn calibrate_surface(
    base_latency_ms: f64,
    anchors: CalibrationAnchors,
    cores: ResourceCurve,
    ways: ResourceCurve,
    bw: ResourceCurve,
    bw_total: f64,
    core_cliff_rate: f64,
    bw_cliff_rate: f64,
    noise_seed: u64,
) -> Result<LatencySurface> {
    let load = anchors.reference_load;
    if !(0.0..1.0).contains(&load)
        || anchors.latency_at_corner_ms <= base_latency_ms
        || anchors.latency_one_way_below_ms <= anchors.latency_at_corner_ms
    {
        return Err(Error::Config("unsatisfiable calibration anchors".into()));
    }
    // capacity needed so that base / (1 - load/cap) equals the anchor
    let cap_for = |lat_ms: f64| load / (1.0 - base_latency_ms / lat_ms);
    let cap_corner = cap_for(anchors.latency_at_corner_ms);
    let cap_below = cap_for(anchors.latency_one_way_below_ms);
    let sharpness = (cap_corner / cap_below).ln();

    let ways = ResourceCurve {
        cliff_weight: 1.0,
        ..ways
    };
    let cores = ResourceCurve {
        cliff_weight: core_cliff_rate / sharpness,
        ..cores
    };
    let bw = ResourceCurve {
        cliff_weight: bw_cliff_rate / sharpness,
        ..bw
    };

    // cap_scale so that capacity at (knee_c, knee_w, bw_total) = cap_corner
    let bw_factor = bw.factor(bw_total, sharpness);
    let surface = LatencySurface {
        base_latency_ms,
        cap_scale: cap_corner / bw_factor,
        cores,
        ways,
        bw,
        cliff_sharpness: sharpness,
        noise_seed,
    };
    surface.validate()?;
    Ok(surface)
}

/// The preset calibrated against the published translation-service
/// cells: 34 ms at (6 cores, 10 ways, full bw) and 4644 ms after
/// dropping a single way, both at 90% load.
pub fn moses_profile() -> ServiceProfile {
    let surface = calibrate_surface(
        20.0,
        CalibrationAnchors {
            reference_load: 0.9,
            latency_at_corner_ms: 34.0,
            latency_one_way_below_ms: 4644.0,
        },
        ResourceCurve {
            knee: 6.0,
            concavity: 0.30,
            cliff_weight: 0.0,
        },
        ResourceCurve {
            knee: 10.0,
            concavity: 0.15,
            cliff_weight: 0.0,
        },
        ResourceCurve {
            knee: 6.0,
            concavity: 0.20,
            cliff_weight: 0.0,
        },
        10.0,
        0.65,
        0.45,
        7,
    )
    .expect("moses preset must calibrate");
    ServiceProfile {
        surface,
        reference_load: 0.9,
        qos_target_ms: 60.0,
    }
}

pub fn surface_preset(name: &str) -> Result<ServiceProfile> {
    match name {
        "moses" => Ok(moses_profile()),
        other => Err(Error::Config(format!("unknown surface preset `{other}`"))),
    }
}

/// Draws a random calibrated surface for the platform. Every generated
/// surface has a guaranteed >= `min_cliff_ratio` adjacent-cell latency
/// jump at its reference load and a feasible full-allocation operating
/// point, or the candidate seed is rejected and the next one tried.
pub fn generate_profile(spec: &ServerSpec, seed: u64) -> ServiceProfile {
    for attempt in 0..64 {
        if let Some(p) = try_generate(spec, seed, attempt) {
            return p;
        }
    }
    // The acceptance ranges below make rejection extremely rare; fall
    // back to the calibrated preset rather than loop forever.
    moses_profile()
}

fn try_generate(spec: &ServerSpec, seed: u64, attempt: u64) -> Option<ServiceProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(attempt));
    let c_max = spec.n_cores as f64;
    let w_max = spec.n_llc_ways as f64;
    let b_max = spec.mem_bw_units as f64;

    let base = rng.gen_range(5.0..40.0);
    let knee_c = rng.gen_range(2..=(c_max as u32 / 3).max(3)) as f64;
    let knee_w = rng.gen_range(2..=(w_max as u32 * 2 / 3).max(3)) as f64;
    let knee_b = rng.gen_range(2..=7) as f64;
    let conc_c = rng.gen_range(0.20..0.45);
    let conc_w = rng.gen_range(0.10..0.30);
    let conc_b = rng.gen_range(0.10..0.30);
    let load = rng.gen_range(0.55..0.95);

    let lat_corner = base * rng.gen_range(1.4..2.2);
    let qos = lat_corner * (1.0 + rng.gen_range(0.25..0.70));
    let cliff_ratio = rng.gen_range(15.0..120.0);
    let lat_below = lat_corner * cliff_ratio;
    // milder cliffs on the other dimensions
    let core_ratio = rng.gen_range(2.5..6.0);
    let bw_ratio = rng.gen_range(2.0..5.0);

    let cap_for = |lat: f64| load / (1.0 - base / lat);
    let cap_corner = cap_for(lat_corner);
    let core_rate = (cap_corner / cap_for(lat_corner * core_ratio)).ln();
    let bw_rate = (cap_corner / cap_for(lat_corner * bw_ratio)).ln();

    let surface = calibrate_surface(
        base,
        CalibrationAnchors {
            reference_load: load,
            latency_at_corner_ms: lat_corner,
            latency_one_way_below_ms: lat_below,
        },
        ResourceCurve {
            knee: knee_c,
            concavity: conc_c,
            cliff_weight: 0.0,
        },
        ResourceCurve {
            knee: knee_w,
            concavity: conc_w,
            cliff_weight: 0.0,
        },
        ResourceCurve {
            knee: knee_b,
            concavity: conc_b,
            cliff_weight: 0.0,
        },
        b_max,
        core_rate,
        bw_rate,
        seed,
    )
    .ok()?;

    // The full allocation must serve max load within the QoS target,
    // otherwise the service has no valid max-load operating point.
    let full = EffectiveGrant {
        cores: c_max,
        ways: w_max,
        bw_units: b_max,
    };
    if surface.latency_ms(&full, 1.0) > qos {
        return None;
    }
    // The corner cell must satisfy QoS at the reference load and the
    // cell one way below must violate it (that is the cliff).
    let corner = EffectiveGrant {
        cores: knee_c,
        ways: knee_w,
        bw_units: b_max,
    };
    let below = EffectiveGrant {
        cores: knee_c,
        ways: knee_w - 1.0,
        bw_units: b_max,
    };
    if surface.latency_ms(&corner, load) > qos || surface.latency_ms(&below, load) <= qos {
        return None;
    }
    Some(ServiceProfile {
        surface,
        reference_load: load,
        qos_target_ms: qos,
    })
}

/// Best-effort service profile: a concave normalized-throughput model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeProfile {
    pub core_exp: f64,
    pub way_exp: f64,
    pub bw_exp: f64,
    pub seed: u64,
}

impl BeProfile {
    pub fn from_seed(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xbe5e_ed00);
        Self {
            core_exp: rng.gen_range(0.35..0.65),
            way_exp: rng.gen_range(0.15..0.40),
            bw_exp: rng.gen_range(0.15..0.40),
            seed,
        }
    }

    /// Normalized instructions-per-clock throughput for a grant:
    /// 1.0 on the full server, 0.0 with no cores.
    pub fn throughput(&self, grant: &EffectiveGrant, spec: &ServerSpec) -> f64 {
        if grant.cores <= 0.0 {
            return 0.0;
        }
        let c = (grant.cores / spec.n_cores as f64).clamp(0.0, 1.0);
        let w = (grant.ways / spec.n_llc_ways as f64).clamp(0.0, 1.0);
        let b = (grant.bw_units / spec.mem_bw_units as f64).clamp(0.0, 1.0);
        c.powf(self.core_exp) * w.powf(self.way_exp) * b.powf(self.bw_exp)
    }
}
