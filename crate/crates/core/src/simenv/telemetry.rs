//! Synthetic hardware telemetry.
//!
//! Every signal is a deterministic function of the grant, the offered
//! load and the queue backlog, with per-service coefficients derived
//! from the surface seed so co-located services exhibit distinct
//! covariate structure.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::spec::{EffectiveGrant, Grant, ServerSpec};
use super::surface::{BeProfile, LatencySurface};

/// Memory bandwidth per 10% granule, in GB/s.
pub const MBL_PER_UNIT_GBS: f64 = 8.0;

/// Nominal core frequency of a platform, in GHz.
pub fn base_frequency_ghz(platform_id: &str) -> f64 {
    match platform_id {
        "alpha" => 2.5,
        "beta" => 2.1,
        "gamma" => 2.4,
        _ => 2.4,
    }
}

/// Per-service telemetry coefficients for an LC service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LcTelemetryCoeffs {
    pub ipc_max: f64,
    pub miss_base_per_s: f64,
    pub miss_cliff: f64,
    pub cpu_coeff: f64,
    pub bytes_per_miss: f64,
    pub vm_base_mb: f64,
    pub vm_slope_mb: f64,
    pub rm_base_mb: f64,
    pub rm_slope_mb: f64,
}

impl LcTelemetryCoeffs {
    pub fn from_seed(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e1e_3e7a);
        Self {
            ipc_max: rng.gen_range(0.8..3.0),
            miss_base_per_s: rng.gen_range(2.0e6..5.0e7),
            miss_cliff: rng.gen_range(1.0..4.0),
            cpu_coeff: rng.gen_range(0.75..1.0),
            bytes_per_miss: rng.gen_range(64.0..128.0),
            vm_base_mb: rng.gen_range(500.0..8000.0),
            vm_slope_mb: rng.gen_range(100.0..4000.0),
            rm_base_mb: rng.gen_range(200.0..4000.0),
            rm_slope_mb: rng.gen_range(50.0..2000.0),
        }
    }
}

/// Per-service telemetry coefficients for a BE service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeTelemetryCoeffs {
    pub ipc_solo: f64,
    pub miss_base_per_s: f64,
    pub vm_mb: f64,
    pub rm_mb: f64,
}

impl BeTelemetryCoeffs {
    pub fn from_seed(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0be5_c0ef);
        Self {
            ipc_solo: rng.gen_range(0.5..2.0),
            miss_base_per_s: rng.gen_range(5.0e6..4.0e7),
            vm_mb: rng.gen_range(1000.0..6000.0),
            rm_mb: rng.gen_range(500.0..3000.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceClass {
    Lc,
    Be,
}

/// One telemetry record per (timestamp, service): the raw model input
/// signals plus latency, QoS flag and the grants in force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    pub t_ms: u64,
    pub service_id: String,
    pub class: ServiceClass,
    pub ipc: f64,
    pub cache_misses_per_s: f64,
    pub mbl_gbs: f64,
    pub cpu_usage: f64,
    pub virt_mem_mb: f64,
    pub res_mem_mb: f64,
    pub allocated_cores: f64,
    pub allocated_ways: f64,
    pub core_frequency_ghz: f64,
    pub neighbor_cores: f64,
    pub neighbor_ways: f64,
    pub neighbor_mbl_gbs: f64,
    pub load: f64,
    pub queue_len: f64,
    pub latency_ms: f64,
    pub qos_target_ms: f64,
    pub qos_met: bool,
    pub exclusive_grant: Grant,
    pub be_throughput: f64,
}

/// Raw signals of an LC service before neighbor aggregation.
pub(crate) struct LcSignals {
    pub ipc: f64,
    pub misses: f64,
    pub mbl: f64,
    pub cpu_usage: f64,
    pub virt_mem: f64,
    pub res_mem: f64,
    pub freq: f64,
}

pub(crate) fn lc_signals(
    surface: &LatencySurface,
    coeffs: &LcTelemetryCoeffs,
    eff: &EffectiveGrant,
    load: f64,
    queue_len: f64,
    spec: &ServerSpec,
) -> LcSignals {
    let f_base = base_frequency_ghz(&spec.platform_id);
    let cap = surface.capacity(eff.cores, eff.ways, eff.bw_units);
    // Backlog adds drain appetite on top of the offered load.
    let demand = load + queue_len;
    let busy = if cap > 0.0 && eff.cores > 0.0 {
        (demand / cap).min(1.0)
    } else {
        0.0
    };
    let served = demand.min(cap);

    let wf = if eff.ways > 0.0 {
        (surface.ways.factor(eff.ways, surface.cliff_sharpness)
            / surface
                .ways
                .factor(spec.n_llc_ways as f64, surface.cliff_sharpness))
        .clamp(0.0, 1.0)
    } else {
        0.0
    };
    let bf = if eff.bw_units > 0.0 {
        (surface.bw.factor(eff.bw_units, surface.cliff_sharpness)
            / surface
                .bw
                .factor(spec.mem_bw_units as f64, surface.cliff_sharpness))
        .clamp(0.0, 1.0)
    } else {
        0.0
    };

    let freq = f_base * (1.0 - 0.08 * busy);
    let ipc = coeffs.ipc_max * (0.30 + 0.70 * wf) * (0.85 + 0.15 * bf) * (freq / f_base);
    let misses = coeffs.miss_base_per_s * served * (1.0 + coeffs.miss_cliff * (1.0 - wf));
    let mbl = (misses * coeffs.bytes_per_miss / 1.0e9).min(eff.bw_units * MBL_PER_UNIT_GBS);

    LcSignals {
        ipc,
        misses,
        mbl,
        cpu_usage: eff.cores * busy * coeffs.cpu_coeff,
        virt_mem: coeffs.vm_base_mb + coeffs.vm_slope_mb * load,
        res_mem: coeffs.rm_base_mb + coeffs.rm_slope_mb * load,
        freq,
    }
}

/// Raw LC signal tuple `(ipc, misses, mbl, cpu, virt, res, freq)`,
/// exposed for normalization-bound derivation.
pub fn lc_signals_for_bounds(
    surface: &LatencySurface,
    coeffs: &LcTelemetryCoeffs,
    eff: &EffectiveGrant,
    load: f64,
    queue_len: f64,
    spec: &ServerSpec,
) -> (f64, f64, f64, f64, f64, f64, f64) {
    let s = lc_signals(surface, coeffs, eff, load, queue_len, spec);
    (
        s.ipc, s.misses, s.mbl, s.cpu_usage, s.virt_mem, s.res_mem, s.freq,
    )
}

pub(crate) fn be_signals(
    profile: &BeProfile,
    coeffs: &BeTelemetryCoeffs,
    eff: &EffectiveGrant,
    spec: &ServerSpec,
) -> (LcSignals, f64) {
    let f_base = base_frequency_ghz(&spec.platform_id);
    let thr = profile.throughput(eff, spec);
    let core_frac = eff.cores / spec.n_cores as f64;
    let misses = coeffs.miss_base_per_s * core_frac;
    let mbl = (misses * 80.0 / 1.0e9).min(eff.bw_units * MBL_PER_UNIT_GBS);
    (
        LcSignals {
            ipc: coeffs.ipc_solo * thr,
            misses,
            mbl,
            cpu_usage: 0.95 * eff.cores,
            virt_mem: coeffs.vm_mb,
            res_mem: coeffs.rm_mb,
            freq: f_base * (1.0 - 0.05 * core_frac),
        },
        thr,
    )
}
