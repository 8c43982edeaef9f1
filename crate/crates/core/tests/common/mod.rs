//! Shared fixtures and oracles for the acceptance suite.

pub mod gradcheck;
