// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

//! Random directed Erdős–Rényi instances for timing the exact planner.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Pareto};
use serde::{Deserialize, Serialize};

use super::{optimize, CostModel, Instance, NodeEconomics};
use crate::error::{Error, Result};

const MIN_BYTES: f64 = 1e6;
const MAX_BYTES: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarnessParams {
    pub nodes: usize,
    pub edge_prob: f64,
    pub seed: u64,
    /// Exponent of the power law for access and maintenance frequencies.
    pub exponent: f64,
    pub force_general: bool,
}

/// Everything about a run except how long it took.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessRecord {
    pub params: HarnessParams,
    pub edges: usize,
    pub deletions: usize,
    pub objective: f64,
    pub line_components: u64,
    pub general_components: u64,
    pub work: u64,
}

/// Economics and an edge set for `params`. Every ordered pair gets an edge
/// independently with probability `edge_prob`; all edges carry a transformation.
pub fn random_instance(params: &HarnessParams, model: &CostModel) -> Result<Instance> {
    if !(0.0..=1.0).contains(&params.edge_prob) {
        return Err(Error::InvalidParameter("edge probability must be in [0, 1]".into()));
    }
    if params.exponent.is_nan() || params.exponent <= 1.0 {
        return Err(Error::InvalidParameter("power-law exponent must exceed 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let freq = Pareto::new(1.0, params.exponent - 1.0).expect("valid pareto");
    let n = params.nodes;
    let econ: Vec<NodeEconomics> = (0..n)
        .map(|i| {
            let size = (MIN_BYTES.ln() + rng.random::<f64>() * (MAX_BYTES / MIN_BYTES).ln()).exp();
            NodeEconomics {
                node: format!("n{i:05}"),
                size_bytes: size as u64,
                maintenance_freq: freq.sample(&mut rng),
                access_freq: freq.sample(&mut rng),
                rows: 0,
            }
        })
        .collect();
    let mut parents = vec![Vec::new(); n];
    for p in 0..n {
        for (c, list) in parents.iter_mut().enumerate() {
            if p == c || !rng.random_bool(params.edge_prob) {
                continue;
            }
            let (sp, sc) = (econ[p].size_bytes, econ[c].size_bytes);
            if model.reconstruction_latency(sp, sc) >= model.latency_threshold {
                continue;
            }
            list.push((p, econ[c].access_freq * model.reconstruction_cost(sp, sc)));
        }
    }
    Ok(Instance {
        names: econ.iter().map(|e| e.node.clone()).collect(),
        retention: econ.iter().map(|e| model.retention_cost(e)).collect(),
        parents,
    })
}

pub fn run_trial(params: &HarnessParams, model: &CostModel) -> Result<(HarnessRecord, Duration)> {
    let inst = random_instance(params, model)?;
    let start = Instant::now();
    let (sol, stats) = optimize(&inst, params.force_general)?;
    let elapsed = start.elapsed();
    Ok((
        HarnessRecord {
            params: *params,
            edges: inst.edge_count(),
            deletions: sol.retained.iter().filter(|r| !**r).count(),
            objective: sol.objective,
            line_components: stats.line_components,
            general_components: stats.general_components,
            work: stats.work,
        },
        elapsed,
    ))
}
