//! Deterministic discrete-time server simulator: platform description,
//! latency surfaces with resource cliffs, the partition state, synthetic
//! telemetry, and the brute-force OAA/RCliff oracle.

mod allocation;
mod env;
mod oracle;
mod service;
mod spec;
mod surface;
mod telemetry;

pub use allocation::{Allocation, SharingPair, SHARE_SPLIT};
pub use env::SimEnv;
pub use oracle::{knee_index, knee_qos_target, oracle_oaa_rcliff, OaaResult, OracleOutcome};
pub use service::{LoadSchedule, ServiceId, ServiceKind, ServiceSpec};
pub use spec::{EffectiveGrant, Grant, ServerSpec, BW_UNITS};
pub use surface::{
    calibrate_surface, generate_profile, moses_profile, surface_preset, BeProfile,
    CalibrationAnchors, LatencySurface, ResourceCurve, ServiceProfile, UNSERVED_LATENCY_MS,
};
pub use telemetry::{
    base_frequency_ghz, lc_signals_for_bounds, BeTelemetryCoeffs, LcTelemetryCoeffs, ServiceClass,
    TelemetryRecord, MBL_PER_UNIT_GBS,
};
