use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SampleIndex {
    pub scenario: u32,
    pub time: u32,
    pub node: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleIndexSet {
    /// Sorted by `(scenario, time, node)`.
    pub indices: Vec<SampleIndex>,
    pub ratio: f64,
    pub seed: u64,
}

impl SampleIndexSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Uniform sample without replacement of `round(ratio * total)` triples
/// from `n_scenarios x n_steps x n_nodes`.
pub fn subsample(
    n_scenarios: usize,
    n_steps: usize,
    n_nodes: usize,
    ratio: f64,
    seed: u64,
) -> Result<SampleIndexSet> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::Config(format!("subsample ratio must lie in (0, 1], got {ratio}")));
    }
    let total = n_scenarios * n_steps * n_nodes;
    let count = ((ratio * total as f64).round() as usize).min(total);
    let mut flat: Vec<usize> = if count == total {
        (0..total).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::index::sample(&mut rng, total, count).into_vec()
    };
    flat.sort_unstable();
    let per_scenario = n_steps * n_nodes;
    let indices = flat
        .into_iter()
        .map(|f| SampleIndex {
            scenario: (f / per_scenario) as u32,
            time: ((f % per_scenario) / n_nodes) as u32,
            node: (f % n_nodes) as u32,
        })
        .collect();
    Ok(SampleIndexSet { indices, ratio, seed })
}
