// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

//! Schema → min/max → content pipeline over a whole lake.

use serde::{Deserialize, Serialize};

use crate::clp::{clp_check, content_prune, ClpParams};
use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::graph::{ContainmentGraph, Stage};
use crate::lake::{DatasetHandle, Lake};
use crate::mmp::{min_max_prune, mmp_keep, MmpConfig};
use crate::schema::{build_schema_graph, flatten_schema, schema_contained, SchemaCluster, SchemaSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mmp: MmpConfig,
    pub clp: ClpParams,
    /// Last stage to run: `Sgb`, `Mmp` or `Clp`.
    pub stop_after: Stage,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mmp: MmpConfig::default(),
            clp: ClpParams::default(),
            stop_after: Stage::Clp,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stop_after == Stage::Truth {
            return Err(Error::InvalidParameter("the pipeline cannot stop after TRUTH".into()));
        }
        if self.stop_after == Stage::Clp {
            self.clp.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub clusters: Vec<SchemaCluster>,
    pub sgb: ContainmentGraph,
    pub mmp: Option<ContainmentGraph>,
    pub clp: Option<ContainmentGraph>,
    pub counters: OpCounters,
}

impl PipelineOutput {
    /// The graph of the last stage that ran.
    pub fn final_graph(&self) -> &ContainmentGraph {
        self.clp.as_ref().or(self.mmp.as_ref()).unwrap_or(&self.sgb)
    }

    /// Every stage graph that was produced, in pipeline order.
    pub fn stages(&self) -> Vec<&ContainmentGraph> {
        std::iter::once(&self.sgb)
            .chain(self.mmp.as_ref())
            .chain(self.clp.as_ref())
            .collect()
    }
}

pub fn lake_schemas(lake: &Lake) -> Result<Vec<SchemaSet>> {
    lake.datasets().iter().map(|h| flatten_schema(h)).collect()
}

pub fn run_pipeline(lake: &Lake, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let schemas = lake_schemas(lake)?;
    let (sgb, clusters, mut counters) = build_schema_graph(&schemas)?;
    let mut out = PipelineOutput {
        clusters,
        sgb,
        mmp: None,
        clp: None,
        counters: OpCounters::default(),
    };
    if cfg.stop_after != Stage::Sgb {
        let (mmp, c) = min_max_prune(&out.sgb, lake, &cfg.mmp)?;
        counters.add(&c);
        if cfg.stop_after == Stage::Clp {
            let (clp, c) = content_prune(&mmp, lake, &cfg.clp)?;
            counters.add(&c);
            out.clp = Some(clp);
        }
        out.mmp = Some(mmp);
    }
    out.counters = counters;
    Ok(out)
}

/// Decides a single ordered pair exactly as the batch pipeline would.
/// Returns whether `parent -> child` is in the final graph, plus the work done.
pub fn pair_verdict(
    lake: &Lake,
    parent: &DatasetHandle,
    child: &DatasetHandle,
    cfg: &PipelineConfig,
) -> Result<(bool, OpCounters)> {
    let mut counters = OpCounters::default();
    if parent.name == child.name {
        return Ok((false, counters));
    }
    let ps = flatten_schema(parent)?;
    let cs = flatten_schema(child)?;
    counters.schema_pair_ops += 1;
    if !schema_contained(&cs, &ps) {
        return Ok((false, counters));
    }
    if cfg.stop_after == Stage::Sgb {
        return Ok((true, counters));
    }
    counters.metadata_ops += 1;
    if !mmp_keep(parent, child, &cfg.mmp)? {
        return Ok((false, counters));
    }
    if cfg.stop_after == Stage::Mmp {
        return Ok((true, counters));
    }
    let common: Vec<String> = cs.tokens.iter().cloned().collect();
    let check = clp_check(lake, parent, child, &common, &cfg.clp)?;
    counters.rows_scanned += check.rows_scanned;
    counters.row_membership_ops += check.membership_ops;
    counters.clp_nominal_row_ops += parent.total_rows * cfg.clp.t as u64;
    counters.clp_fallback_samples += check.fell_back as u64;
    Ok((check.keep, counters))
}
