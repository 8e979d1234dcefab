// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

//! Retain/delete planning over a containment graph.
//!
//! Keeping dataset `v` costs `R_v = (C_s + C_m f_v) S_v` per period. Deleting it
//! is allowed only when some retained parent `u` can rebuild it through an edge
//! with a known transformation, at an expected cost of `A_v C_e` per period,
//! where `C_e = r S_u + w S_v`. The plan minimizes the total.

mod dyn_lin;
pub mod harness;
mod lines;
mod opt_ret;
mod savings;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ContainmentGraph, Stage};

pub use dyn_lin::{dyn_lin, solve_dyn_lin, DynLinResult};
pub use lines::{detect_line_graphs, LineDecomposition};
pub use opt_ret::{opt_ret, solve_opt_ret};
pub use savings::{savings_report, SavingsReport, WEEKS_PER_MONTH_X100};

/// Per-byte prices and latencies. Keys in config files use the short names.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    /// Storage cost per byte per period.
    #[serde(rename = "C_s")]
    pub storage_per_byte: f64,
    /// Maintenance cost per byte per maintenance operation.
    #[serde(rename = "C_m")]
    pub maintenance_per_byte: f64,
    #[serde(rename = "r")]
    pub read_per_byte: f64,
    #[serde(rename = "w")]
    pub write_per_byte: f64,
    /// Seconds per byte read.
    #[serde(rename = "r_l")]
    pub read_latency_per_byte: f64,
    /// Seconds per byte written.
    #[serde(rename = "w_l")]
    pub write_latency_per_byte: f64,
    /// Edges whose reconstruction latency reaches this many seconds are unusable.
    #[serde(rename = "Th")]
    pub latency_threshold: f64,
}

impl CostModel {
    /// Typical object-store pricing in dollars per byte, per month.
    pub fn cloud_defaults() -> Self {
        const GB: f64 = 1e9;
        CostModel {
            storage_per_byte: 0.023 / GB,
            maintenance_per_byte: 0.001 / GB,
            read_per_byte: 0.0004 / GB,
            write_per_byte: 0.005 / GB,
            read_latency_per_byte: 1.0 / GB,
            write_latency_per_byte: 2.0 / GB,
            latency_threshold: 3600.0,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let m: CostModel = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.storage_per_byte,
            self.maintenance_per_byte,
            self.read_per_byte,
            self.write_per_byte,
            self.read_latency_per_byte,
            self.write_latency_per_byte,
        ];
        if fields.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config("cost model values must be finite and nonnegative".into()));
        }
        if self.latency_threshold.is_nan() || self.latency_threshold <= 0.0 {
            return Err(Error::Config("Th must be positive".into()));
        }
        Ok(())
    }

    /// `R_v`: cost of keeping a dataset for one period.
    pub fn retention_cost(&self, node: &NodeEconomics) -> f64 {
        (self.storage_per_byte + self.maintenance_per_byte * node.maintenance_freq) * node.size_bytes as f64
    }

    /// `C_e`: cost of rebuilding a child of `child_bytes` from a parent of `parent_bytes`.
    pub fn reconstruction_cost(&self, parent_bytes: u64, child_bytes: u64) -> f64 {
        self.read_per_byte * parent_bytes as f64 + self.write_per_byte * child_bytes as f64
    }

    /// `L_e`: seconds to rebuild the child.
    pub fn reconstruction_latency(&self, parent_bytes: u64, child_bytes: u64) -> f64 {
        self.read_latency_per_byte * parent_bytes as f64 + self.write_latency_per_byte * child_bytes as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEconomics {
    pub node: String,
    pub size_bytes: u64,
    /// Maintenance operations per period.
    pub maintenance_freq: f64,
    /// Accesses per period.
    pub access_freq: f64,
    /// Row count, used for row-scan savings.
    #[serde(default)]
    pub rows: u64,
}

/// Node economics keyed by name, checked for duplicates and bad values.
pub fn econ_map(econ: &[NodeEconomics]) -> Result<BTreeMap<String, NodeEconomics>> {
    let mut map = BTreeMap::new();
    for e in econ {
        if !(e.maintenance_freq.is_finite() && e.maintenance_freq >= 0.0 && e.access_freq.is_finite() && e.access_freq >= 0.0) {
            return Err(Error::InvalidParameter(format!("economics of `{}` must be nonnegative", e.node)));
        }
        if map.insert(e.node.clone(), e.clone()).is_some() {
            return Err(Error::InvalidParameter(format!("duplicate economics for `{}`", e.node)));
        }
    }
    Ok(map)
}

/// Human-supplied description of how a child is derived from a parent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformAnnotation {
    pub parent: String,
    pub child: String,
    pub transformation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedEdge {
    pub parent: String,
    pub child: String,
    pub transformation: String,
    /// `C_e`.
    pub recon_cost: f64,
    /// `L_e`, seconds.
    pub recon_latency: f64,
}

/// Containment graph restricted to edges usable for reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedGraph {
    pub nodes: BTreeSet<String>,
    pub edges: Vec<AnnotatedEdge>,
}

/// Keeps edges that have a transformation label and a latency below `Th`,
/// annotated with their reconstruction cost and latency.
pub fn preprocess_edges(
    graph: &ContainmentGraph,
    model: &CostModel,
    econ: &[NodeEconomics],
    transforms: &[TransformAnnotation],
) -> Result<AnnotatedGraph> {
    model.validate()?;
    if graph.stage != Stage::Clp {
        return Err(Error::Structure(format!(
            "planning expects a CLP graph, got {}",
            graph.stage
        )));
    }
    let econ = econ_map(econ)?;
    for n in graph.nodes() {
        if !econ.contains_key(n) {
            return Err(Error::MissingEconomics(n.clone()));
        }
    }
    let labels: BTreeMap<(&str, &str), &str> = transforms
        .iter()
        .filter_map(|t| {
            let label = t.transformation.as_deref()?.trim();
            (!label.is_empty()).then_some(((t.parent.as_str(), t.child.as_str()), label))
        })
        .collect();
    let mut edges = Vec::new();
    for e in graph.edges() {
        let Some(label) = labels.get(&(e.parent.as_str(), e.child.as_str())) else {
            continue;
        };
        let sp = econ[&e.parent].size_bytes;
        let sq = econ[&e.child].size_bytes;
        let latency = model.reconstruction_latency(sp, sq);
        if latency >= model.latency_threshold {
            continue;
        }
        edges.push(AnnotatedEdge {
            parent: e.parent.clone(),
            child: e.child.clone(),
            transformation: label.to_string(),
            recon_cost: model.reconstruction_cost(sp, sq),
            recon_latency: latency,
        });
    }
    Ok(AnnotatedGraph {
        nodes: graph.nodes().clone(),
        edges,
    })
}

/// Index-based problem: retention cost per node and, per child, the candidate
/// parents with the per-period cost `A_v C_e` of rebuilding through them.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub names: Vec<String>,
    pub retention: Vec<f64>,
    pub parents: Vec<Vec<(usize, f64)>>,
}

impl Instance {
    pub fn from_annotated(graph: &AnnotatedGraph, model: &CostModel, econ: &[NodeEconomics]) -> Result<Self> {
        let econ = econ_map(econ)?;
        let names: Vec<String> = graph.nodes.iter().cloned().collect();
        let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut retention = Vec::with_capacity(names.len());
        for n in &names {
            let e = econ.get(n).ok_or_else(|| Error::MissingEconomics(n.clone()))?;
            retention.push(model.retention_cost(e));
        }
        let mut parents = vec![Vec::new(); names.len()];
        for e in &graph.edges {
            let (Some(&p), Some(&c)) = (index.get(e.parent.as_str()), index.get(e.child.as_str())) else {
                return Err(Error::Structure(format!("edge {} -> {} leaves the node set", e.parent, e.child)));
            };
            if p == c {
                return Err(Error::Structure(format!("self-edge on `{}`", e.parent)));
            }
            parents[c].push((p, econ[&e.child].access_freq * e.recon_cost));
        }
        Ok(Instance { names, retention, parents })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// Cheapest retained parent of every deleted node and the resulting
    /// objective, or `None` if some deleted node has no retained parent.
    pub fn complete(&self, retained: &[bool]) -> Option<(Vec<Option<usize>>, f64)> {
        let mut via = vec![None; self.len()];
        let mut total = 0.0;
        for v in 0..self.len() {
            if retained[v] {
                total += self.retention[v];
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for &(p, w) in &self.parents[v] {
                if retained[p] && best.is_none_or(|(bp, bw)| w < bw || (w == bw && p < bp)) {
                    best = Some((p, w));
                }
            }
            let (p, w) = best?;
            via[v] = Some(p);
            total += w;
        }
        Some((via, total))
    }

    /// Evaluates an explicit plan, checking every constraint.
    pub fn check(&self, retained: &[bool], via: &[Option<usize>]) -> Result<f64> {
        let mut total = 0.0;
        for v in 0..self.len() {
            match (retained[v], via[v]) {
                (true, None) => total += self.retention[v],
                (true, Some(_)) => {
                    return Err(Error::Structure(format!("retained `{}` has a rebuild parent", self.names[v])))
                }
                (false, None) => {
                    return Err(Error::Structure(format!("deleted `{}` has no rebuild parent", self.names[v])))
                }
                (false, Some(p)) => {
                    if !retained[p] {
                        return Err(Error::Structure(format!(
                            "`{}` is rebuilt from deleted `{}`",
                            self.names[v], self.names[p]
                        )));
                    }
                    let w = self.parents[v]
                        .iter()
                        .filter(|(q, _)| *q == p)
                        .map(|(_, w)| *w)
                        .fold(f64::INFINITY, f64::min);
                    if !w.is_finite() {
                        return Err(Error::Structure(format!(
                            "no usable edge {} -> {}",
                            self.names[p], self.names[v]
                        )));
                    }
                    total += w;
                }
            }
        }
        Ok(total)
    }
}

/// Exact solution with solver statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub retained: Vec<bool>,
    pub via: Vec<Option<usize>>,
    pub objective: f64,
    /// Search nodes for the branch-and-bound part, recurrence steps for lines.
    pub work: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub child: String,
    pub parent: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetentionPlan {
    pub deletions: Vec<String>,
    pub retentions: Vec<String>,
    pub reconstruct_via: Vec<Reconstruction>,
    pub objective: f64,
    /// Fingerprint of the graph the plan was computed from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_digest: Option<String>,
}

impl RetentionPlan {
    pub fn from_solution(instance: &Instance, sol: &Solution) -> Self {
        let mut plan = RetentionPlan {
            deletions: Vec::new(),
            retentions: Vec::new(),
            reconstruct_via: Vec::new(),
            objective: sol.objective,
            graph_digest: None,
        };
        for (v, name) in instance.names.iter().enumerate() {
            if sol.retained[v] {
                plan.retentions.push(name.clone());
            } else {
                plan.deletions.push(name.clone());
                plan.reconstruct_via.push(Reconstruction {
                    child: name.clone(),
                    parent: instance.names[sol.via[v].expect("deleted nodes have a parent")].clone(),
                });
            }
        }
        plan
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan serializes");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }
}

/// How each component was solved.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveStats {
    pub line_components: u64,
    pub general_components: u64,
    pub work: u64,
}

/// Solves every weakly connected component exactly: line components by the
/// linear recurrence unless `force_general`, the rest by branch and bound.
pub fn optimize(instance: &Instance, force_general: bool) -> Result<(Solution, SolveStats)> {
    let mut stats = SolveStats::default();
    let decomposition = detect_line_graphs(instance);
    let mut retained = vec![true; instance.len()];
    let mut via = vec![None; instance.len()];
    let mut general: Vec<usize> = decomposition.residual.clone();
    for line in &decomposition.lines {
        if force_general {
            general.extend(line);
            continue;
        }
        let retention: Vec<f64> = line.iter().map(|&v| instance.retention[v]).collect();
        let penalty: Vec<f64> = line
            .iter()
            .enumerate()
            .map(|(i, &v)| if i == 0 { 0.0 } else { instance.parents[v][0].1 })
            .collect();
        let r = dyn_lin(&retention, &penalty);
        stats.line_components += 1;
        stats.work += r.ops;
        for (i, &v) in line.iter().enumerate() {
            retained[v] = r.retained[i];
            if !r.retained[i] {
                via[v] = Some(line[i - 1]);
            }
        }
    }
    general.sort_unstable();
    if !general.is_empty() {
        let (sub, map) = subinstance(instance, &general);
        let sol = opt_ret(&sub);
        stats.general_components += opt_ret::component_count(&sub) as u64;
        stats.work += sol.work;
        for (local, &v) in map.iter().enumerate() {
            retained[v] = sol.retained[local];
            via[v] = sol.via[local].map(|p| map[p]);
        }
    }
    let objective = instance.check(&retained, &via)?;
    Ok((Solution { retained, via, objective, work: stats.work }, stats))
}

/// Restriction of `instance` to `nodes` (sorted), with the local-to-global map.
pub(crate) fn subinstance(instance: &Instance, nodes: &[usize]) -> (Instance, Vec<usize>) {
    let mut local = vec![usize::MAX; instance.len()];
    for (i, &v) in nodes.iter().enumerate() {
        local[v] = i;
    }
    let sub = Instance {
        names: nodes.iter().map(|&v| instance.names[v].clone()).collect(),
        retention: nodes.iter().map(|&v| instance.retention[v]).collect(),
        parents: nodes
            .iter()
            .map(|&v| {
                instance.parents[v]
                    .iter()
                    .filter(|(p, _)| local[*p] != usize::MAX)
                    .map(|&(p, w)| (local[p], w))
                    .collect()
            })
            .collect(),
    };
    (sub, nodes.to_vec())
}

pub fn read_json_list<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
}
