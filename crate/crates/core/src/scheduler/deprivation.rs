//! Deprivation planning: freeing <M cores, N ways> for a requester.
//!
//! Best-effort resources go first. Any remainder is taken from LC
//! neighbors: per-neighbor cut grids are scored with the QoS model and
//! the best-fit combination of at most three victims is chosen,
//! minimizing total predicted slowdown subject to every victim staying
//! within the allowable bound. When no such combination exists the plan
//! falls back to sharing with the single minimum-slowdown neighbor.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract, ExpectedAllocation, ModelKind, NormalizationSpec};
use crate::models::ModelB;
use crate::simenv::{Grant, ServiceId, SimEnv, TelemetryRecord};

/// Maximum number of LC services a plan may cut.
pub const MAX_VICTIMS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VictimCut {
    pub service_id: ServiceId,
    pub cores: u32,
    pub ways: u32,
    /// Predicted post-cut latency/target ratio.
    pub predicted_qos: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharingPlan {
    pub partner: ServiceId,
    pub cores: u32,
    pub ways: u32,
    /// Predicted partner slowdown, reported to the upper policy.
    pub predicted_qos: f64,
}

/// A deprivation decision satisfying the requested amounts exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeprivationPlan {
    pub requested_cores: u32,
    pub requested_ways: u32,
    /// Taken from the best-effort pool (including genuinely idle units).
    pub be_cores: u32,
    pub be_ways: u32,
    pub victims: Vec<VictimCut>,
    pub sharing: Option<SharingPlan>,
}

impl DeprivationPlan {
    /// Cores and ways freed into the pool by victim cuts plus BE take.
    pub fn freed(&self) -> (u32, u32) {
        let (mut c, mut w) = (self.be_cores, self.be_ways);
        for v in &self.victims {
            c += v.cores;
            w += v.ways;
        }
        (c, w)
    }
}

/// Per-neighbor Model-B scores over the cut grid.
pub struct VictimScores {
    pub service_id: ServiceId,
    pub max_cores: u32,
    pub max_ways: u32,
    /// `score[m][n]` = predicted ratio after cutting m cores, n ways.
    pub score: Vec<Vec<f64>>,
}

/// Scores every neighbor's cut grid with the QoS model.
pub fn score_neighbors(
    env: &SimEnv,
    records: &[TelemetryRecord],
    requester: &ServiceId,
    needed_cores: u32,
    needed_ways: u32,
    model_b: &ModelB,
    norm: &NormalizationSpec,
) -> Result<Vec<VictimScores>> {
    let mut out = Vec::new();
    for (id, grant) in &env.allocation().lc_grants {
        if id == requester {
            continue;
        }
        let Some(record) = records.iter().find(|r| &r.service_id == id) else {
            continue;
        };
        // victims keep at least one core and one way
        let max_c = grant.cores.saturating_sub(1).min(needed_cores);
        let max_w = grant.ways.saturating_sub(1).min(needed_ways);
        let mut score = vec![vec![0.0; max_w as usize + 1]; max_c as usize + 1];
        for (m, row) in score.iter_mut().enumerate() {
            for (n, cell) in row.iter_mut().enumerate() {
                let expected = ExpectedAllocation {
                    cores: record.allocated_cores - m as f64,
                    ways: record.allocated_ways - n as f64,
                };
                let fv = extract(record, ModelKind::B, Some(expected), norm)?;
                *cell = model_b.predict(&fv)?.predicted_qos;
            }
        }
        out.push(VictimScores {
            service_id: id.clone(),
            max_cores: max_c,
            max_ways: max_w,
            score,
        });
    }
    Ok(out)
}

/// Exhaustive best-fit search over all combinations of at most
/// [`MAX_VICTIMS`] victims with per-victim cut grids. Minimizes the sum
/// of predicted ratios, tie-breaking by fewer victims then by victim
/// ids; every victim must stay within `allowable`.
pub fn best_fit_victims(
    scores: &[VictimScores],
    needed_cores: u32,
    needed_ways: u32,
    allowable: f64,
) -> Option<Vec<VictimCut>> {
    #[derive(Clone)]
    struct Best {
        sum: f64,
        cuts: Vec<(usize, u32, u32)>,
    }
    let mut best: Option<Best> = None;
    let n = scores.len();
    let mut subset: Vec<usize> = Vec::with_capacity(MAX_VICTIMS);

    fn assign(
        scores: &[VictimScores],
        subset: &[usize],
        pos: usize,
        rem_c: u32,
        rem_w: u32,
        allowable: f64,
        sum: f64,
        cuts: &mut Vec<(usize, u32, u32)>,
        best: &mut Option<Best>,
    ) {
        if pos == subset.len() {
            if rem_c == 0 && rem_w == 0 {
                let better = match best {
                    None => true,
                    Some(b) => {
                        sum < b.sum - 1e-12
                            || (sum <= b.sum + 1e-12 && cuts.len() < b.cuts.len())
                    }
                };
                if better {
                    *best = Some(Best {
                        sum,
                        cuts: cuts.clone(),
                    });
                }
            }
            return;
        }
        let v = &scores[subset[pos]];
        let last = pos == subset.len() - 1;
        for m in 0..=v.max_cores.min(rem_c) {
            for n in 0..=v.max_ways.min(rem_w) {
                if m == 0 && n == 0 {
                    continue; // a zero cut is not a victim
                }
                if last && (m != rem_c || n != rem_w) {
                    continue;
                }
                let s = v.score[m as usize][n as usize];
                if s > allowable {
                    continue;
                }
                cuts.push((subset[pos], m, n));
                assign(
                    scores,
                    subset,
                    pos + 1,
                    rem_c - m,
                    rem_w - n,
                    allowable,
                    sum + s,
                    cuts,
                    best,
                );
                cuts.pop();
            }
        }
    }

    fn subsets(
        scores: &[VictimScores],
        start: usize,
        subset: &mut Vec<usize>,
        needed_c: u32,
        needed_w: u32,
        allowable: f64,
        best: &mut Option<Best>,
        n: usize,
    ) {
        if !subset.is_empty() {
            let mut cuts = Vec::new();
            assign(
                scores, subset, 0, needed_c, needed_w, allowable, 0.0, &mut cuts, best,
            );
        }
        if subset.len() == MAX_VICTIMS {
            return;
        }
        for i in start..n {
            subset.push(i);
            subsets(scores, i + 1, subset, needed_c, needed_w, allowable, best, n);
            subset.pop();
        }
    }

    subsets(
        scores,
        0,
        &mut subset,
        needed_cores,
        needed_ways,
        allowable,
        &mut best,
        n,
    );

    best.map(|b| {
        b.cuts
            .into_iter()
            .map(|(i, m, n)| VictimCut {
                service_id: scores[i].service_id.clone(),
                cores: m,
                ways: n,
                predicted_qos: scores[i].score[m as usize][n as usize],
            })
            .collect()
    })
}

/// Plans how to obtain `<needed_cores, needed_ways>` for `requester`.
pub fn plan_deprivation(
    env: &SimEnv,
    records: &[TelemetryRecord],
    needed_cores: u32,
    needed_ways: u32,
    requester: &ServiceId,
    model_b: &ModelB,
    norm: &NormalizationSpec,
    allowable: f64,
    allow_sharing: bool,
) -> Result<DeprivationPlan> {
    if needed_cores == 0 && needed_ways == 0 {
        return Err(Error::Config("deprivation request must be non-zero".into()));
    }
    let pool = env.allocation().be_pool(env.server_spec());
    let be_cores = pool.cores.min(needed_cores);
    let be_ways = pool.ways.min(needed_ways);
    let rem_c = needed_cores - be_cores;
    let rem_w = needed_ways - be_ways;
    if rem_c == 0 && rem_w == 0 {
        return Ok(DeprivationPlan {
            requested_cores: needed_cores,
            requested_ways: needed_ways,
            be_cores,
            be_ways,
            victims: vec![],
            sharing: None,
        });
    }

    let scores = score_neighbors(env, records, requester, rem_c, rem_w, model_b, norm)?;
    if let Some(victims) = best_fit_victims(&scores, rem_c, rem_w, allowable) {
        return Ok(DeprivationPlan {
            requested_cores: needed_cores,
            requested_ways: needed_ways,
            be_cores,
            be_ways,
            victims,
            sharing: None,
        });
    }

    if allow_sharing {
        // share with the neighbor that suffers the least
        let mut candidate: Option<SharingPlan> = None;
        for v in &scores {
            let Some(record) = records.iter().find(|r| r.service_id == v.service_id) else {
                continue;
            };
            let grant = env.allocation().lc_grants[&v.service_id];
            if grant.cores < rem_c || grant.ways < rem_w {
                continue;
            }
            // partner keeps at least one effective unit of each resource
            if record.allocated_cores - 0.5 * (rem_c as f64) < 1.0
                || record.allocated_ways - 0.5 * (rem_w as f64) < 1.0
            {
                continue;
            }
            let expected = ExpectedAllocation {
                cores: record.allocated_cores - 0.5 * rem_c as f64,
                ways: record.allocated_ways - 0.5 * rem_w as f64,
            };
            let fv = extract(record, ModelKind::B, Some(expected), norm)?;
            let predicted = model_b.predict(&fv)?.predicted_qos;
            let better = match &candidate {
                None => true,
                Some(c) => {
                    predicted < c.predicted_qos - 1e-12
                        || ((predicted - c.predicted_qos).abs() <= 1e-12
                            && v.service_id < c.partner)
                }
            };
            if better {
                candidate = Some(SharingPlan {
                    partner: v.service_id.clone(),
                    cores: rem_c,
                    ways: rem_w,
                    predicted_qos: predicted,
                });
            }
        }
        if let Some(sharing) = candidate {
            return Ok(DeprivationPlan {
                requested_cores: needed_cores,
                requested_ways: needed_ways,
                be_cores,
                be_ways,
                victims: vec![],
                sharing: Some(sharing),
            });
        }
    }

    Err(Error::DeprivationInfeasible(format!(
        "cannot free <{needed_cores} cores, {needed_ways} ways> for `{requester}`"
    )))
}

/// Per-victim summary used in decision-log action strings.
pub fn plan_summary(plan: &DeprivationPlan) -> String {
    let mut parts = Vec::new();
    if plan.be_cores > 0 || plan.be_ways > 0 {
        parts.push(format!("be:-{}c-{}w", plan.be_cores, plan.be_ways));
    }
    for v in &plan.victims {
        parts.push(format!("{}:-{}c-{}w", v.service_id, v.cores, v.ways));
    }
    if let Some(s) = &plan.sharing {
        parts.push(format!("share({}):{}c+{}w", s.partner, s.cores, s.ways));
    }
    parts.join(",")
}

/// Victim cuts grouped by service, for applying to an allocation.
pub fn cuts_by_service(plan: &DeprivationPlan) -> BTreeMap<ServiceId, Grant> {
    let mut map = BTreeMap::new();
    for v in &plan.victims {
        let e = map.entry(v.service_id.clone()).or_insert(Grant::zero());
        e.cores += v.cores;
        e.ways += v.ways;
    }
    map
}
