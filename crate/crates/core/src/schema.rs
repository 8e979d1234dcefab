// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

//! Schema sets and the overlapping-cluster schema graph builder.
//!
//! Schemas are visited largest first. A schema that is not contained in any
//! existing center opens a new cluster; otherwise it joins every cluster whose
//! center contains it. Edges are then emitted for every contained pair inside
//! each cluster. If `a ⊆ b`, then `b` is visited no later than `a` and `a` ends
//! up in every cluster holding `b`, so no contained pair is ever missed.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::graph::{ContainmentGraph, Edge, Stage};
use crate::lake::DatasetHandle;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaSet {
    pub owner: String,
    pub tokens: BTreeSet<String>,
}

impl SchemaSet {
    pub fn new(owner: impl Into<String>, tokens: impl IntoIterator<Item = impl Into<String>>) -> Self {
        SchemaSet {
            owner: owner.into(),
            tokens: tokens.into_iter().map(Into::into).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaCluster {
    pub center: String,
    /// Member owners, center first, in visiting order.
    pub members: Vec<String>,
}

/// Splits a nested column name into its dot-joined leaf paths, e.g. a `product`
/// record with `price` and `id` leaves yields `product.price` and `product.id`.
pub fn flatten_paths<'a>(prefix: &str, children: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    children
        .into_iter()
        .map(|c| {
            if prefix.is_empty() {
                c.to_string()
            } else {
                format!("{prefix}.{c}")
            }
        })
        .collect()
}

/// The schema set of a dataset: its distinct column paths.
pub fn flatten_schema(handle: &DatasetHandle) -> Result<SchemaSet> {
    if handle.columns.is_empty() {
        return Err(Error::Schema(format!("dataset `{}` has no columns", handle.name)));
    }
    let mut tokens = BTreeSet::new();
    for c in &handle.columns {
        if !tokens.insert(c.path.clone()) {
            return Err(Error::Schema(format!(
                "dataset `{}` flattens to duplicate path `{}`",
                handle.name, c.path
            )));
        }
    }
    Ok(SchemaSet {
        owner: handle.name.clone(),
        tokens,
    })
}

/// True iff every token of `a` is a token of `b`.
pub fn schema_contained(a: &SchemaSet, b: &SchemaSet) -> bool {
    a.size() <= b.size() && a.tokens.is_subset(&b.tokens)
}

/// Visiting order: size non-increasing, ties by owner name.
pub(crate) fn visit_order(schemas: &[SchemaSet]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..schemas.len()).collect();
    order.sort_by(|&a, &b| {
        schemas[b]
            .size()
            .cmp(&schemas[a].size())
            .then_with(|| schemas[a].owner.cmp(&schemas[b].owner))
    });
    order
}

/// Assigns schemas to overlapping clusters. Returns clusters as index lists
/// (center first).
pub(crate) fn cluster(schemas: &[SchemaSet]) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for idx in visit_order(schemas) {
        let mut joined = false;
        for members in clusters.iter_mut() {
            if schema_contained(&schemas[idx], &schemas[members[0]]) {
                members.push(idx);
                joined = true;
            }
        }
        if !joined {
            clusters.push(vec![idx]);
        }
    }
    clusters
}

/// Nominal work of the schema stage: `N log2 N` for the sort, `K (N - K)`
/// center checks and `C(K_i, 2)` pair checks per cluster.
pub(crate) fn nominal_schema_ops(n: usize, cluster_sizes: impl Iterator<Item = usize>) -> u64 {
    let n = n as u64;
    let sort = if n > 1 {
        (n as f64 * (n as f64).log2()).ceil() as u64
    } else {
        0
    };
    let mut k = 0u64;
    let mut pairs = 0u64;
    for size in cluster_sizes {
        k += 1;
        let s = size as u64;
        pairs += s * s.saturating_sub(1) / 2;
    }
    sort + k * (n - k) + pairs
}

pub(crate) fn schema_edge(parent: &SchemaSet, child: &SchemaSet, stage: Stage) -> Edge {
    Edge {
        parent: parent.owner.clone(),
        child: child.owner.clone(),
        stage,
        common_columns: child.tokens.iter().cloned().collect(),
    }
}

/// Builds the schema containment graph over `schemas`.
pub fn build_schema_graph(
    schemas: &[SchemaSet],
) -> Result<(ContainmentGraph, Vec<SchemaCluster>, OpCounters)> {
    let mut owners = HashSet::new();
    for s in schemas {
        if s.tokens.is_empty() {
            return Err(Error::Schema(format!("schema of `{}` is empty", s.owner)));
        }
        if !owners.insert(s.owner.as_str()) {
            return Err(Error::InvalidParameter(format!("duplicate schema owner `{}`", s.owner)));
        }
    }

    let clusters = cluster(schemas);
    let found: Vec<(usize, usize)> = clusters
        .par_iter()
        .flat_map_iter(|members| {
            let mut out = Vec::new();
            for (i, &a) in members.iter().enumerate() {
                for &b in &members[i + 1..] {
                    if schema_contained(&schemas[b], &schemas[a]) {
                        out.push((a, b));
                    }
                    if schema_contained(&schemas[a], &schemas[b]) {
                        out.push((b, a));
                    }
                }
            }
            out
        })
        .collect();

    let mut unique: BTreeMap<(&str, &str), (usize, usize)> = BTreeMap::new();
    for (p, c) in found {
        unique.insert((&schemas[p].owner, &schemas[c].owner), (p, c));
    }
    let mut graph = ContainmentGraph::new(Stage::Sgb, schemas.iter().map(|s| s.owner.clone()));
    for (p, c) in unique.into_values() {
        graph.insert_edge(schema_edge(&schemas[p], &schemas[c], Stage::Sgb))?;
    }

    let counters = OpCounters {
        schema_pair_ops: nominal_schema_ops(schemas.len(), clusters.iter().map(Vec::len)),
        edge_counts: crate::counters::EdgeCounts {
            sgb: Some(graph.edge_count() as u64),
            ..Default::default()
        },
        ..Default::default()
    };
    let clusters = clusters
        .into_iter()
        .map(|members| SchemaCluster {
            center: schemas[members[0]].owner.clone(),
            members: members.iter().map(|&m| schemas[m].owner.clone()).collect(),
        })
        .collect();
    Ok((graph, clusters, counters))
}
