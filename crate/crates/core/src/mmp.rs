// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

//! Min/max pruning: a contained child can never reach below the parent's
//! minimum or above its maximum on a shared column. Uses partition metadata only.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::graph::{ContainmentGraph, Stage};
use crate::lake::{dataset_min_max, DatasetHandle, Lake};
use crate::value::ValueType;

/// Which column types take part in range checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MmpConfig {
    pub integer: bool,
    pub float: bool,
    pub timestamp: bool,
    pub text: bool,
}

impl Default for MmpConfig {
    fn default() -> Self {
        MmpConfig {
            integer: true,
            float: true,
            timestamp: true,
            text: true,
        }
    }
}

impl MmpConfig {
    pub fn enabled(&self, ty: ValueType) -> bool {
        match ty {
            ValueType::Integer => self.integer,
            ValueType::Float => self.float,
            ValueType::Timestamp => self.timestamp,
            ValueType::Text => self.text,
        }
    }
}

/// Shared column paths with the same type on both sides and an enabled type,
/// in `x`'s column order.
pub fn comparable_columns(x: &DatasetHandle, y: &DatasetHandle, cfg: &MmpConfig) -> Vec<String> {
    x.columns
        .iter()
        .filter(|c| cfg.enabled(c.ty))
        .filter(|c| y.column(&c.path).is_some_and(|yc| yc.ty == c.ty))
        .map(|c| c.path.clone())
        .collect()
}

/// Whether the edge `parent -> child` survives the range check.
pub fn mmp_keep(parent: &DatasetHandle, child: &DatasetHandle, cfg: &MmpConfig) -> Result<bool> {
    for col in comparable_columns(parent, child, cfg) {
        let (Some(cmin), Some(cmax)) = dataset_min_max(child, &col)? else {
            continue;
        };
        let (Some(pmin), Some(pmax)) = dataset_min_max(parent, &col)? else {
            return Ok(false);
        };
        if cmin.try_cmp(&pmin)? == Ordering::Less || cmax.try_cmp(&pmax)? == Ordering::Greater {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn min_max_prune(
    graph: &ContainmentGraph,
    lake: &Lake,
    cfg: &MmpConfig,
) -> Result<(ContainmentGraph, OpCounters)> {
    if graph.stage != Stage::Sgb {
        return Err(Error::Structure(format!(
            "min/max pruning expects an SGB graph, got {}",
            graph.stage
        )));
    }
    let edges: Vec<_> = graph.edges().collect();
    let verdicts = edges
        .par_iter()
        .map(|e| mmp_keep(&*lake.dataset(&e.parent)?, &*lake.dataset(&e.child)?, cfg))
        .collect::<Result<Vec<bool>>>()?;

    let mut out = graph.clone();
    for (e, keep) in edges.iter().zip(&verdicts) {
        if !keep {
            out.remove_edge(&e.parent, &e.child);
        }
    }
    out.relabel(Stage::Mmp);
    let mut counters = OpCounters {
        metadata_ops: edges.len() as u64,
        ..Default::default()
    };
    counters.edge_counts.mmp = Some(out.edge_count() as u64);
    Ok((out, counters))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lake::{ColumnDef, Row};
    use crate::schema::{build_schema_graph, flatten_schema};
    use crate::value::Value;

    fn ints(values: &[i64]) -> Vec<Row> {
        values.iter().map(|&v| vec![Value::Int(v)]).collect()
    }

    fn lake_with(pairs: &[(&str, Vec<ColumnDef>, Vec<Row>)]) -> (tempfile::TempDir, Lake) {
        let dir = tempfile::tempdir().unwrap();
        let lake = Lake::open(dir.path()).unwrap();
        for (name, cols, rows) in pairs {
            lake.create_dataset(name, cols.clone(), rows, 4).unwrap();
        }
        (dir, lake)
    }

    fn c(ty: ValueType) -> Vec<ColumnDef> {
        vec![ColumnDef::new("c", ty)]
    }

    #[test]
    fn nested_range_kept() {
        let (_d, lake) = lake_with(&[
            ("x", c(ValueType::Integer), ints(&[0, 100, 40])),
            ("y", c(ValueType::Integer), ints(&[5, 50])),
        ]);
        let cfg = MmpConfig::default();
        assert!(mmp_keep(&lake.dataset("x").unwrap(), &lake.dataset("y").unwrap(), &cfg).unwrap());
    }

    #[test]
    fn escaping_minimum_pruned() {
        let (_d, lake) = lake_with(&[
            ("x", c(ValueType::Integer), ints(&[0, 100])),
            ("y", c(ValueType::Integer), ints(&[-1, 50])),
        ]);
        let cfg = MmpConfig::default();
        assert!(!mmp_keep(&lake.dataset("x").unwrap(), &lake.dataset("y").unwrap(), &cfg).unwrap());
    }

    #[test]
    fn exact_copy_kept_and_no_rows_read() {
        let (_d, lake) = lake_with(&[
            ("x", c(ValueType::Integer), ints(&[3, 9, 1])),
            ("y", c(ValueType::Integer), ints(&[3, 9, 1])),
        ]);
        let schemas: Vec<_> = lake.datasets().iter().map(|h| flatten_schema(h).unwrap()).collect();
        let (g, _, _) = build_schema_graph(&schemas).unwrap();
        let (out, counters) = min_max_prune(&g, &lake, &MmpConfig::default()).unwrap();
        assert_eq!(out.edge_count(), 2);
        assert_eq!(counters.metadata_ops, 2);
        assert_eq!(lake.rows_scanned(), 0);
        assert!(out.edges().all(|e| e.stage == Stage::Mmp));
    }

    #[test]
    fn comparable_columns_cases() {
        let (_d, lake) = lake_with(&[
            (
                "x",
                vec![ColumnDef::new("a", ValueType::Integer), ColumnDef::new("b", ValueType::Text)],
                vec![],
            ),
            ("y", vec![ColumnDef::new("a", ValueType::Integer)], vec![]),
            ("z", vec![ColumnDef::new("q", ValueType::Integer)], vec![]),
            ("w", vec![ColumnDef::new("a", ValueType::Text)], vec![]),
        ]);
        let cfg = MmpConfig::default();
        let h = |n| lake.dataset(n).unwrap();
        assert_eq!(comparable_columns(&h("x"), &h("y"), &cfg), vec!["a".to_string()]);
        assert!(comparable_columns(&h("x"), &h("z"), &cfg).is_empty());
        assert!(comparable_columns(&h("x"), &h("w"), &cfg).is_empty());
    }

    #[test]
    fn text_ranges_can_be_disabled() {
        let text = |s: &[&str]| s.iter().map(|v| vec![Value::Text(v.to_string())]).collect();
        let (_d, lake) = lake_with(&[
            ("x", c(ValueType::Text), text(&["b", "c"])),
            ("y", c(ValueType::Text), text(&["a"])),
        ]);
        let h = |n| lake.dataset(n).unwrap();
        assert!(!mmp_keep(&h("x"), &h("y"), &MmpConfig::default()).unwrap());
        let cfg = MmpConfig {
            text: false,
            ..Default::default()
        };
        assert!(mmp_keep(&h("x"), &h("y"), &cfg).unwrap());
    }

    #[test]
    fn null_columns() {
        let nulls = vec![vec![Value::Null], vec![Value::Null]];
        let (_d, lake) = lake_with(&[
            ("x", c(ValueType::Integer), nulls.clone()),
            ("y", c(ValueType::Integer), nulls),
            ("z", c(ValueType::Integer), ints(&[1])),
        ]);
        let h = |n| lake.dataset(n).unwrap();
        let cfg = MmpConfig::default();
        assert!(mmp_keep(&h("z"), &h("y"), &cfg).unwrap());
        assert!(!mmp_keep(&h("x"), &h("z"), &cfg).unwrap());
    }

    #[test]
    fn requires_sgb_stage() {
        let (_d, lake) = lake_with(&[]);
        let g = ContainmentGraph::new(Stage::Clp, Vec::new());
        assert!(min_max_prune(&g, &lake, &MmpConfig::default()).is_err());
    }
}
