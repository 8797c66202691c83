//! Seeded N-k branch-outage scenarios.

use crate::netmodel::Network;
use rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Error)]
pub enum ContingencyError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("scenario references unknown branch {0}")]
    UnknownBranch(usize),
    #[error("malformed scenario file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: u64,
    /// Removed branch ids, ascending.
    #[serde(rename = "removed")]
    pub removed_branches: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub seed: u64,
    pub fraction: f64,
    pub count: usize,
    pub case: String,
    pub scenarios: Vec<Scenario>,
}

impl ScenarioSet {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scenario set serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ContingencyError> {
        let set: ScenarioSet = serde_json::from_str(text)?;
        if set.scenarios.len() != set.count {
            return Err(ContingencyError::Argument(format!(
                "count is {} but {} scenarios are listed",
                set.count,
                set.scenarios.len()
            )));
        }
        Ok(set)
    }

    pub fn get(&self, id: u64) -> Option<&Scenario> {
        self.scenarios.iter().find(|s| s.id == id)
    }
}

/// Number of branches removed at damage level `fraction`, rounding half up.
pub fn damage_count(branch_total: usize, fraction: f64) -> usize {
    // The small offset keeps products like 0.3 * 5 = 1.4999… on the intended side.
    let k = (fraction * branch_total as f64 + 0.5 + 1e-9).floor();
    if k <= 0.0 {
        0
    } else {
        (k as usize).min(branch_total)
    }
}

/// Uniform draw from `0..bound` by rejection, free of modulo bias.
fn below(rng: &mut SplitMix64, bound: u64) -> u64 {
    let zone = u64::MAX - u64::MAX % bound;
    loop {
        let r = rng.next_u64();
        if r < zone {
            return r % bound;
        }
    }
}

fn scenario_rng(seed: u64, id: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed ^ id.wrapping_mul(GOLDEN))
}

/// Draw `count` scenarios, each removing `k` distinct in-service branches.
pub fn generate(net: &Network, fraction: f64, count: usize, seed: u64) -> Result<ScenarioSet, ContingencyError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(ContingencyError::Argument(format!("fraction {fraction} outside [0, 1]")));
    }
    if count == 0 {
        return Err(ContingencyError::Argument("scenario count must be positive".into()));
    }
    let mut pool: Vec<usize> = net.branches.iter().filter(|b| b.in_service).map(|b| b.id).collect();
    pool.sort_unstable();
    if pool.is_empty() {
        return Err(ContingencyError::Argument("network has no in-service branch".into()));
    }
    let k = damage_count(pool.len(), fraction);
    if k == 0 {
        return Err(ContingencyError::Argument(format!("fraction {fraction} removes no branch")));
    }
    let scenarios = (0..count as u64)
        .map(|id| {
            let mut rng = scenario_rng(seed, id);
            let mut ids = pool.clone();
            let n = ids.len();
            for i in 0..k {
                let j = i + below(&mut rng, (n - i) as u64) as usize;
                ids.swap(i, j);
            }
            ids.truncate(k);
            ids.sort_unstable();
            Scenario { id, removed_branches: ids }
        })
        .collect();
    Ok(ScenarioSet { seed, fraction, count, case: net.name.clone(), scenarios })
}

/// Mark the scenario's branches out of service.
pub fn apply(net: &Network, s: &Scenario) -> Result<Network, ContingencyError> {
    let mut out = net.clone();
    for &id in &s.removed_branches {
        let pos = out.branch_position(id).ok_or(ContingencyError::UnknownBranch(id))?;
        out.branches[pos].in_service = false;
    }
    Ok(out)
}
