//! The shepherd agent's piecewise reward.
//!
//! With any LC service violating its target the reward is the QoS term
//! (indicator plus average capped target/latency ratio, range [0, 2]);
//! with every target met it is 2 plus the average fraction of each
//! resource type left for best-effort use.

/// Number of controlled resource types (cores, ways, bandwidth).
pub const RESOURCE_TYPES: usize = 3;

#[derive(Debug, Clone)]
pub struct RewardInputs<'a> {
    /// Indicator from the QoS model for the to-be-conducted allocation.
    pub predicted_met: bool,
    /// Observed latencies of the co-located LC services.
    pub latencies_ms: &'a [f64],
    pub targets_ms: &'a [f64],
    /// Resources occupied by all LC services, per resource type.
    pub lc_usage: [f64; RESOURCE_TYPES],
    /// Platform totals per resource type.
    pub limits: [f64; RESOURCE_TYPES],
}

/// Indicator plus average min(1, target/latency); range [0, 2].
pub fn qos_reward(predicted_met: bool, latencies_ms: &[f64], targets_ms: &[f64]) -> f64 {
    assert!(!latencies_ms.is_empty(), "needs at least one LC service");
    assert_eq!(latencies_ms.len(), targets_ms.len());
    let indicator = if predicted_met { 1.0 } else { 0.0 };
    let sum: f64 = latencies_ms
        .iter()
        .zip(targets_ms)
        .map(|(&lat, &target)| {
            if lat <= 0.0 {
                1.0
            } else {
                (target / lat).min(1.0)
            }
        })
        .sum();
    indicator + sum / latencies_ms.len() as f64
}

/// Average fraction of each resource type usable by BE services.
pub fn resource_reward(lc_usage: [f64; RESOURCE_TYPES], limits: [f64; RESOURCE_TYPES]) -> f64 {
    let sum: f64 = lc_usage
        .iter()
        .zip(&limits)
        .map(|(&used, &limit)| (1.0 - used / limit).clamp(0.0, 1.0))
        .sum();
    sum / RESOURCE_TYPES as f64
}

pub fn compute_reward(inp: &RewardInputs) -> f64 {
    let all_met = inp
        .latencies_ms
        .iter()
        .zip(inp.targets_ms)
        .all(|(&lat, &target)| lat <= target);
    if all_met {
        2.0 + resource_reward(inp.lc_usage, inp.limits)
    } else {
        qos_reward(inp.predicted_met, inp.latencies_ms, inp.targets_ms)
    }
}
