// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

//! Directed containment graph. An edge `parent -> child` asserts that the
//! child's rows are contained in the parent's at the labelled stage.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage {
    #[serde(rename = "SGB")]
    Sgb,
    #[serde(rename = "MMP")]
    Mmp,
    #[serde(rename = "CLP")]
    Clp,
    #[serde(rename = "TRUTH")]
    Truth,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Sgb => "SGB",
            Stage::Mmp => "MMP",
            Stage::Clp => "CLP",
            Stage::Truth => "TRUTH",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub parent: String,
    pub child: String,
    pub stage: Stage,
    /// Sorted column paths shared by both endpoints.
    pub common_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContainmentGraph {
    pub stage: Stage,
    nodes: BTreeSet<String>,
    edges: BTreeMap<(String, String), Edge>,
}

#[derive(Serialize, Deserialize)]
struct RawGraph {
    stage: Stage,
    nodes: Vec<String>,
    edges: Vec<Edge>,
}

impl ContainmentGraph {
    pub fn new(stage: Stage, nodes: impl IntoIterator<Item = String>) -> Self {
        ContainmentGraph {
            stage,
            nodes: nodes.into_iter().collect(),
            edges: BTreeMap::new(),
        }
    }

    pub fn nodes(&self) -> &BTreeSet<String> {
        &self.nodes
    }

    pub fn contains_node(&self, name: &str) -> bool {
        self.nodes.contains(name)
    }

    pub fn add_node(&mut self, name: impl Into<String>) {
        self.nodes.insert(name.into());
    }

    /// Removes a node and every incident edge; returns whether it existed.
    pub fn remove_node(&mut self, name: &str) -> bool {
        self.edges.retain(|(p, c), _| p != name && c != name);
        self.nodes.remove(name)
    }

    /// Inserts or overwrites the edge for its ordered pair.
    pub fn insert_edge(&mut self, edge: Edge) -> Result<()> {
        if edge.parent == edge.child {
            return Err(Error::Structure(format!("self-edge on `{}`", edge.parent)));
        }
        for end in [&edge.parent, &edge.child] {
            if !self.nodes.contains(end) {
                return Err(Error::Structure(format!("edge endpoint `{end}` is not a node")));
            }
        }
        self.edges
            .insert((edge.parent.clone(), edge.child.clone()), edge);
        Ok(())
    }

    pub fn remove_edge(&mut self, parent: &str, child: &str) -> Option<Edge> {
        self.edges.remove(&(parent.to_string(), child.to_string()))
    }

    pub fn edge(&self, parent: &str, child: &str) -> Option<&Edge> {
        self.edges.get(&(parent.to_string(), child.to_string()))
    }

    pub fn has_edge(&self, parent: &str, child: &str) -> bool {
        self.edge(parent, child).is_some()
    }

    /// Edges in (parent, child) order.
    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_pairs(&self) -> BTreeSet<(String, String)> {
        self.edges.keys().cloned().collect()
    }

    /// Relabels the graph and every edge with `stage`.
    pub fn relabel(&mut self, stage: Stage) {
        self.stage = stage;
        for e in self.edges.values_mut() {
            e.stage = stage;
        }
    }

    pub fn retain_edges(&mut self, mut keep: impl FnMut(&Edge) -> bool) {
        self.edges.retain(|_, e| keep(e));
    }

    pub fn to_json(&self) -> String {
        let raw = RawGraph {
            stage: self.stage,
            nodes: self.nodes.iter().cloned().collect(),
            edges: self.edges.values().cloned().collect(),
        };
        let mut s = serde_json::to_string_pretty(&raw).expect("graph serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawGraph = serde_json::from_str(text).map_err(|e| Error::json("graph", e))?;
        let mut g = ContainmentGraph::new(raw.stage, raw.nodes);
        for e in raw.edges {
            if g.has_edge(&e.parent, &e.child) {
                return Err(Error::Structure(format!(
                    "duplicate edge {} -> {}",
                    e.parent, e.child
                )));
            }
            g.insert_edge(e)?;
        }
        Ok(g)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    /// Stable fingerprint of nodes and edge pairs, used to detect stale plans.
    pub fn digest(&self) -> String {
        let mut buf = Vec::new();
        for n in &self.nodes {
            buf.extend_from_slice(n.as_bytes());
            buf.push(0);
        }
        buf.push(1);
        for (p, c) in self.edges.keys() {
            buf.extend_from_slice(p.as_bytes());
            buf.push(0);
            buf.extend_from_slice(c.as_bytes());
            buf.push(0);
        }
        format!("{:032x}", xxhash_rust::xxh3::xxh3_128(&buf))
    }
}
