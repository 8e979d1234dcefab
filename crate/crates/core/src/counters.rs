// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

use serde::{Deserialize, Serialize};

/// Work accounting for one run. All fields only ever grow within a run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounters {
    /// Schema containment tests, nominal count for the schema stage.
    pub schema_pair_ops: u64,
    /// Per-edge metadata lookups (min/max comparisons).
    pub metadata_ops: u64,
    /// Rows physically read from payloads.
    pub rows_scanned: u64,
    /// Row lookups against a parent membership set.
    pub row_membership_ops: u64,
    /// Nominal content-stage row operations: sum over examined edges of parent rows times t.
    pub clp_nominal_row_ops: u64,
    /// Nominal all-pairs row comparisons of the exact oracle: sum of M_parent * M_child.
    pub truth_nominal_row_ops: u64,
    /// Child samples that fell back to a full-scan reservoir.
    pub clp_fallback_samples: u64,
    #[serde(default)]
    pub edge_counts: EdgeCounts,
}

/// Edge counts after each pipeline stage (`None` when the stage did not run).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeCounts {
    pub sgb: Option<u64>,
    pub mmp: Option<u64>,
    pub clp: Option<u64>,
}

impl OpCounters {
    pub fn add(&mut self, other: &OpCounters) {
        self.schema_pair_ops += other.schema_pair_ops;
        self.metadata_ops += other.metadata_ops;
        self.rows_scanned += other.rows_scanned;
        self.row_membership_ops += other.row_membership_ops;
        self.clp_nominal_row_ops += other.clp_nominal_row_ops;
        self.truth_nominal_row_ops += other.truth_nominal_row_ops;
        self.clp_fallback_samples += other.clp_fallback_samples;
        let e = &other.edge_counts;
        self.edge_counts.sgb = e.sgb.or(self.edge_counts.sgb);
        self.edge_counts.mmp = e.mmp.or(self.edge_counts.mmp);
        self.edge_counts.clp = e.clp.or(self.edge_counts.clp);
    }
}
