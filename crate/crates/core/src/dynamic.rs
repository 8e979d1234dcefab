// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

//! Incremental maintenance of the pipeline's output graph as datasets are
//! added, changed or removed.
//!
//! Clusters keep two properties between operations: every dataset belongs to
//! every cluster whose center contains its schema, and every dataset belongs to
//! at least one cluster. Together they guarantee that any schema-contained pair
//! involving the touched dataset shares a cluster, so only co-members need to
//! be re-examined. Each pair is decided by [`pair_verdict`], the same function
//! the batch pipeline is equivalent to, so results match a full rerun.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::graph::{ContainmentGraph, Edge};
use crate::lake::{DatasetHandle, Lake};
use crate::pipeline::{pair_verdict, PipelineConfig, PipelineOutput};
use crate::schema::{flatten_schema, schema_contained, SchemaCluster, SchemaSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Change {
    RowsAdded,
    ColumnsAdded,
    RowsRemoved,
    ColumnsRemoved,
}

impl Change {
    fn is_additive(self) -> bool {
        matches!(self, Change::RowsAdded | Change::ColumnsAdded)
    }
}

impl FromStr for Change {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rows-added" => Ok(Change::RowsAdded),
            "columns-added" => Ok(Change::ColumnsAdded),
            "rows-removed" => Ok(Change::RowsRemoved),
            "columns-removed" => Ok(Change::ColumnsRemoved),
            _ => Err(Error::InvalidParameter(format!("unknown change kind `{s}`"))),
        }
    }
}

/// Work done by one update.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateStats {
    /// Datasets whose pairs with the touched dataset were re-decided.
    pub candidate_pairs: u64,
    pub counters: OpCounters,
}

#[derive(Debug, Clone)]
pub struct DynamicGraph {
    graph: ContainmentGraph,
    clusters: Vec<SchemaCluster>,
    handles: BTreeMap<String, Arc<DatasetHandle>>,
    schemas: BTreeMap<String, SchemaSet>,
    cfg: PipelineConfig,
}

impl DynamicGraph {
    /// Starts from a batch run over the current contents of `lake`.
    pub fn from_pipeline(lake: &Lake, out: &PipelineOutput, cfg: PipelineConfig) -> Result<Self> {
        Self::new(lake, out.final_graph().clone(), out.clusters.clone(), cfg)
    }

    /// Wraps an existing final-stage graph and clusters that match `lake`.
    pub fn new(
        lake: &Lake,
        graph: ContainmentGraph,
        clusters: Vec<SchemaCluster>,
        cfg: PipelineConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if graph.stage != cfg.stop_after {
            return Err(Error::Structure(format!(
                "graph is at stage {} but updates are configured for {}",
                graph.stage, cfg.stop_after
            )));
        }
        let mut handles = BTreeMap::new();
        let mut schemas = BTreeMap::new();
        for name in graph.nodes() {
            let h = lake.dataset(name)?;
            schemas.insert(name.clone(), flatten_schema(&h)?);
            handles.insert(name.clone(), h);
        }
        Ok(DynamicGraph {
            graph,
            clusters,
            handles,
            schemas,
            cfg,
        })
    }

    pub fn graph(&self) -> &ContainmentGraph {
        &self.graph
    }

    pub fn clusters(&self) -> &[SchemaCluster] {
        &self.clusters
    }

    pub fn into_graph(self) -> ContainmentGraph {
        self.graph
    }

    /// Adds a dataset already present in `lake` as a new node.
    pub fn add_dataset(&mut self, lake: &Lake, name: &str) -> Result<UpdateStats> {
        if self.graph.contains_node(name) {
            return Err(Error::Conflict(name.to_string()));
        }
        let handle = lake.dataset(name)?;
        self.schemas.insert(name.to_string(), flatten_schema(&handle)?);
        self.handles.insert(name.to_string(), handle);
        self.graph.add_node(name);
        let mut stats = UpdateStats::default();
        let partners = self.attach(name, &mut stats.counters);
        self.decide(lake, name, &partners, None, &mut stats)?;
        Ok(stats)
    }

    /// Re-decides the pairs of a dataset whose content in `lake` has changed.
    pub fn mutate_dataset(&mut self, lake: &Lake, name: &str, change: Change) -> Result<UpdateStats> {
        let old = self
            .handles
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownDataset(name.to_string()))?;
        let new = lake.dataset(name)?;
        check_change(&old, &new, change)?;

        let mut stats = UpdateStats::default();
        self.detach(name, &mut stats.counters);
        self.schemas.insert(name.to_string(), flatten_schema(&new)?);
        self.handles.insert(name.to_string(), new);
        let partners = self.attach(name, &mut stats.counters);

        // Pairs that are no longer schema-contained cannot hold an edge.
        let stale: Vec<(String, String)> = self
            .graph
            .edges()
            .filter(|e| {
                (e.parent == name && !partners.contains(&e.child))
                    || (e.child == name && !partners.contains(&e.parent))
            })
            .map(|e| (e.parent.clone(), e.child.clone()))
            .collect();
        for (p, c) in stale {
            self.graph.remove_edge(&p, &c);
        }
        self.decide(lake, name, &partners, Some(change), &mut stats)?;
        Ok(stats)
    }

    /// Drops a node and its edges. Clusters it centered are dissolved and their
    /// orphaned members re-clustered.
    pub fn remove_dataset(&mut self, name: &str) -> Result<UpdateStats> {
        if !self.graph.remove_node(name) {
            return Err(Error::UnknownDataset(name.to_string()));
        }
        let mut stats = UpdateStats::default();
        self.detach(name, &mut stats.counters);
        self.schemas.remove(name);
        self.handles.remove(name);
        Ok(stats)
    }

    /// Re-decides both directions of every pair between `name` and `partners`.
    fn decide(
        &mut self,
        lake: &Lake,
        name: &str,
        partners: &BTreeSet<String>,
        change: Option<Change>,
        stats: &mut UpdateStats,
    ) -> Result<()> {
        stats.candidate_pairs = partners.len() as u64;
        let me = self.handles[name].clone();
        for other in partners {
            let them = self.handles[other].clone();
            for (parent, child) in [(&them, &me), (&me, &them)] {
                // Growing a parent cannot evict a child it already contains.
                let keep_as_is = change.is_some_and(Change::is_additive)
                    && parent.name == name
                    && self.graph.has_edge(&parent.name, &child.name);
                if keep_as_is {
                    continue;
                }
                let (keep, counters) = pair_verdict(lake, parent, child, &self.cfg)?;
                stats.counters.add(&counters);
                if keep {
                    self.graph.insert_edge(Edge {
                        parent: parent.name.clone(),
                        child: child.name.clone(),
                        stage: self.cfg.stop_after,
                        common_columns: self.schemas[&child.name].tokens.iter().cloned().collect(),
                    })?;
                } else {
                    self.graph.remove_edge(&parent.name, &child.name);
                }
            }
        }
        Ok(())
    }

    /// Places `name` into clusters and returns its co-members.
    fn attach(&mut self, name: &str, counters: &mut OpCounters) -> BTreeSet<String> {
        let schema = &self.schemas[name];
        let mut joined = false;
        for cluster in &mut self.clusters {
            counters.schema_pair_ops += 1;
            if schema_contained(schema, &self.schemas[&cluster.center]) {
                cluster.members.push(name.to_string());
                joined = true;
            }
        }
        if !joined {
            let mut members = vec![name.to_string()];
            for (other, s) in &self.schemas {
                if other == name {
                    continue;
                }
                counters.schema_pair_ops += 1;
                if schema_contained(s, schema) {
                    members.push(other.clone());
                }
            }
            self.clusters.push(SchemaCluster {
                center: name.to_string(),
                members,
            });
        }
        self.clusters
            .iter()
            .filter(|c| c.members.iter().any(|m| m == name))
            .flat_map(|c| c.members.iter())
            .filter(|m| *m != name)
            .cloned()
            .collect()
    }

    /// Takes `name` out of every cluster and re-clusters members left without one.
    fn detach(&mut self, name: &str, counters: &mut OpCounters) {
        let mut orphans = BTreeSet::new();
        self.clusters.retain_mut(|c| {
            if c.center == name {
                orphans.extend(c.members.iter().filter(|m| *m != name).cloned());
                false
            } else {
                c.members.retain(|m| m != name);
                true
            }
        });
        orphans.retain(|o| !self.clusters.iter().any(|c| c.members.contains(o)));
        let mut order: Vec<String> = orphans.into_iter().collect();
        order.sort_by(|a, b| {
            self.schemas[b]
                .size()
                .cmp(&self.schemas[a].size())
                .then_with(|| a.cmp(b))
        });
        // Keep the detached dataset out of the membership scans below.
        let saved = self.schemas.remove(name);
        for o in order {
            // An earlier orphan may have become a center that absorbed this one.
            if !self.clusters.iter().any(|c| c.members.contains(&o)) {
                self.attach(&o, counters);
            }
        }
        if let Some(s) = saved {
            self.schemas.insert(name.to_string(), s);
        }
    }
}

fn check_change(old: &DatasetHandle, new: &DatasetHandle, change: Change) -> Result<()> {
    let old_cols: BTreeMap<&str, _> = old.columns.iter().map(|c| (c.path.as_str(), c.ty)).collect();
    let new_cols: BTreeMap<&str, _> = new.columns.iter().map(|c| (c.path.as_str(), c.ty)).collect();
    let keeps_types = |from: &BTreeMap<&str, _>, to: &BTreeMap<&str, _>| {
        from.iter().all(|(k, t)| to.get(k) == Some(t))
    };
    let ok = match change {
        Change::RowsAdded => old_cols == new_cols && new.total_rows >= old.total_rows,
        Change::RowsRemoved => old_cols == new_cols && new.total_rows <= old.total_rows,
        // Column changes leave the row count alone.
        Change::ColumnsAdded => {
            keeps_types(&old_cols, &new_cols) && new_cols.len() > old_cols.len() && new.total_rows == old.total_rows
        }
        Change::ColumnsRemoved => {
            keeps_types(&new_cols, &old_cols) && new_cols.len() < old_cols.len() && new.total_rows == old.total_rows
        }
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "new content of `{}` is not consistent with {change:?}",
            new.name
        )))
    }
}
