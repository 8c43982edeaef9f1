//! colosim — a deterministic, desk-scale simulator of multi-resource
//! server co-location (CPU cores, LLC ways, memory bandwidth) together
//! with a multi-model ML scheduling stack and comparison baselines.
//!
//! The crate is organized around six subsystems:
//!
//! - [`simenv`]: the simulator — latency surfaces with resource cliffs,
//!   synthetic telemetry, the global partition, and a brute-force
//!   oracle for the optimal allocation area (OAA) and the cliff.
//! - [`features`]: normalized feature vectors consumed by the models.
//! - [`models`]: the allocation-predicting MLP, the QoS-predicting MLP,
//!   and the DDPG shepherd agent, trained from scratch.
//! - [`scheduler`]: the central control framework that coordinates the
//!   three models (arrival placement, online shepherding with rollback,
//!   deprivation and sharing planning).
//! - [`baselines`]: the trial-and-error heuristic and the Bayesian
//!   optimization comparators.
//! - [`harness`]: scenario files, corpus generation, training
//!   orchestration, run execution, metrics and plot series.

pub mod baselines;
pub mod error;
pub mod features;
pub mod harness;
pub mod models;
pub mod scheduler;
pub mod simenv;

pub use error::{Error, Result};
