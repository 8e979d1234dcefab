// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

//! Exact containment by brute force, and stage-by-stage evaluation against it.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::graph::{ContainmentGraph, Stage};
use crate::lake::{DatasetHandle, Lake};
use crate::rowhash::{encode_projection, RowSet};
use crate::schema::{flatten_schema, schema_contained, schema_edge};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub parent: String,
    pub child: String,
    /// Fraction of the child's distinct rows present in the parent.
    pub cm: f64,
}

impl ContainmentReport {
    pub fn contained(&self) -> bool {
        self.cm == 1.0
    }
}

/// All ordered pairs with schema containment, by all-pairs comparison.
pub fn ground_truth_schema(lake: &Lake) -> Result<(ContainmentGraph, OpCounters)> {
    let schemas = lake
        .datasets()
        .iter()
        .map(|h| flatten_schema(h))
        .collect::<Result<Vec<_>>>()?;
    let mut graph = ContainmentGraph::new(Stage::Truth, schemas.iter().map(|s| s.owner.clone()));
    for (i, a) in schemas.iter().enumerate() {
        for b in &schemas[i + 1..] {
            if schema_contained(b, a) {
                graph.insert_edge(schema_edge(a, b, Stage::Truth))?;
            }
            if schema_contained(a, b) {
                graph.insert_edge(schema_edge(b, a, Stage::Truth))?;
            }
        }
    }
    let n = schemas.len() as u64;
    let counters = OpCounters {
        schema_pair_ops: n * n.saturating_sub(1) / 2,
        ..Default::default()
    };
    Ok((graph, counters))
}

type ProjectionMap = HashMap<(String, Vec<String>), Arc<RowSet>>;

/// Distinct rows of datasets projected on column lists, built once each.
struct ProjectionCache<'a> {
    lake: &'a Lake,
    sets: Mutex<ProjectionMap>,
    rows_read: Mutex<u64>,
}

impl<'a> ProjectionCache<'a> {
    fn new(lake: &'a Lake) -> Self {
        ProjectionCache {
            lake,
            sets: Mutex::new(HashMap::new()),
            rows_read: Mutex::new(0),
        }
    }

    fn get(&self, handle: &DatasetHandle, columns: &[String]) -> Result<Arc<RowSet>> {
        let key = (handle.name.clone(), columns.to_vec());
        if let Some(set) = self.sets.lock().unwrap().get(&key) {
            return Ok(set.clone());
        }
        let set = Arc::new(distinct_projection(self.lake, handle, columns)?);
        *self.rows_read.lock().unwrap() += handle.total_rows;
        // Concurrent builders may race; either result is identical.
        Ok(self.sets.lock().unwrap().entry(key).or_insert(set).clone())
    }
}

/// Distinct rows of `handle` projected on `columns`.
pub fn distinct_projection(lake: &Lake, handle: &DatasetHandle, columns: &[String]) -> Result<RowSet> {
    let idx = columns
        .iter()
        .map(|c| handle.require_column(c))
        .collect::<Result<Vec<_>>>()?;
    let mut set = RowSet::new();
    let mut buf = Vec::new();
    for p in 0..handle.partitions.len() {
        for row in lake.read_partition(handle, p)?.iter() {
            encode_projection(row, &idx, &mut buf);
            set.insert(&buf);
        }
    }
    Ok(set)
}

/// Exact containment fraction of `child` in `parent` over the child's columns.
pub fn containment_fraction(lake: &Lake, parent: &DatasetHandle, child: &DatasetHandle) -> Result<f64> {
    let cols: Vec<String> = child.column_paths().map(str::to_string).collect();
    let c = distinct_projection(lake, child, &cols)?;
    let p = distinct_projection(lake, parent, &cols)?;
    Ok(fraction(&c, &p))
}

fn fraction(child: &RowSet, parent: &RowSet) -> f64 {
    if child.is_empty() {
        return 1.0;
    }
    let hits = child.iter().filter(|k| parent.contains(k)).count();
    hits as f64 / child.len() as f64
}

/// Exact containment for every edge of a schema-truth graph.
pub fn ground_truth_content(
    lake: &Lake,
    schema_truth: &ContainmentGraph,
) -> Result<(Vec<ContainmentReport>, OpCounters)> {
    let cache = ProjectionCache::new(lake);
    let edges: Vec<_> = schema_truth.edges().collect();
    let results = edges
        .par_iter()
        .map(|e| {
            let parent = lake.dataset(&e.parent)?;
            let child = lake.dataset(&e.child)?;
            let cols: Vec<String> = child.column_paths().map(str::to_string).collect();
            let c = cache.get(&child, &cols)?;
            let p = cache.get(&parent, &cols)?;
            let report = ContainmentReport {
                parent: e.parent.clone(),
                child: e.child.clone(),
                cm: fraction(&c, &p),
            };
            Ok((report, parent.total_rows * child.total_rows))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut counters = OpCounters::default();
    let mut reports = Vec::with_capacity(results.len());
    for (r, nominal) in results {
        counters.truth_nominal_row_ops += nominal;
        reports.push(r);
    }
    counters.rows_scanned = *cache.rows_read.lock().unwrap();
    Ok((reports, counters))
}

pub fn write_reports(path: &Path, reports: &[ContainmentReport]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for r in reports {
        let line = serde_json::to_string(r).map_err(|e| Error::json("truth report", e))?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_reports(path: &Path) -> Result<Vec<ContainmentReport>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let r: ContainmentReport = serde_json::from_str(&line)
            .map_err(|e| Error::json(format!("{} line {}", path.display(), i + 1), e))?;
        if !(0.0..=1.0).contains(&r.cm) {
            return Err(Error::InvalidParameter(format!(
                "cm {} out of range on line {}",
                r.cm,
                i + 1
            )));
        }
        out.push(r);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub correct: u64,
    pub incorrect_lt1: u64,
    pub not_detected: u64,
}

/// Scores a stage graph against exact reports over the same datasets.
pub fn evaluate(graph: &ContainmentGraph, truth: &[ContainmentReport]) -> Result<EvalSummary> {
    let mut cm: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for r in truth {
        for end in [&r.parent, &r.child] {
            if !graph.contains_node(end) {
                return Err(Error::NodeMismatch(format!(
                    "truth mentions `{end}`, which is not a graph node"
                )));
            }
        }
        cm.insert((&r.parent, &r.child), r.cm);
    }
    let mut summary = EvalSummary::default();
    for e in graph.edges() {
        match cm.get(&(e.parent.as_str(), e.child.as_str())) {
            Some(&1.0) => summary.correct += 1,
            Some(_) => summary.incorrect_lt1 += 1,
            None => {
                return Err(Error::NodeMismatch(format!(
                    "edge {} -> {} has no truth report",
                    e.parent, e.child
                )))
            }
        }
    }
    let contained = cm.values().filter(|&&v| v == 1.0).count() as u64;
    summary.not_detected = contained - summary.correct;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lake::{ColumnDef, Row};
    use crate::value::{Value, ValueType};

    fn cols() -> Vec<ColumnDef> {
        vec![ColumnDef::new("a", ValueType::Integer), ColumnDef::new("b", ValueType::Text)]
    }

    fn rows(keys: impl Iterator<Item = i64>) -> Vec<Row> {
        keys.map(|k| vec![Value::Int(k), Value::Text(format!("r{k}"))]).collect()
    }

    fn report(lake: &Lake, p: &str, c: &str) -> f64 {
        containment_fraction(lake, &lake.dataset(p).unwrap(), &lake.dataset(c).unwrap()).unwrap()
    }

    #[test]
    fn cm_cases() {
        let dir = tempfile::tempdir().unwrap();
        let lake = Lake::open(dir.path()).unwrap();
        lake.create_dataset("p", cols(), &rows(0..20), 8).unwrap();
        lake.create_dataset("filtered", cols(), &rows((0..20).filter(|k| k % 2 == 0)), 8).unwrap();
        // 10 distinct rows, 5 of them fabricated, plus duplicates that must not count twice.
        let mut half = rows(0..5);
        half.extend(rows(100..105));
        half.extend(rows(0..5));
        lake.create_dataset("half", cols(), &half, 8).unwrap();
        lake.create_dataset("empty", cols(), &[], 8).unwrap();

        assert_eq!(report(&lake, "p", "filtered"), 1.0);
        assert_eq!(report(&lake, "p", "half"), 0.5);
        assert_eq!(report(&lake, "p", "empty"), 1.0);
        assert_eq!(report(&lake, "p", "p"), 1.0);
        assert!(report(&lake, "filtered", "p") < 1.0);
    }

    #[test]
    fn projection_uses_child_columns() {
        let dir = tempfile::tempdir().unwrap();
        let lake = Lake::open(dir.path()).unwrap();
        lake.create_dataset("wide", cols(), &rows(0..10), 8).unwrap();
        let narrow: Vec<Row> = (0..10).map(|k| vec![Value::Int(k)]).collect();
        lake.create_dataset("narrow", vec![cols()[0].clone()], &narrow, 8).unwrap();
        assert_eq!(report(&lake, "wide", "narrow"), 1.0);
    }

    #[test]
    fn schema_truth_cases() {
        let dir = tempfile::tempdir().unwrap();
        let lake = Lake::open(dir.path()).unwrap();
        lake.create_dataset("x", cols(), &[], 8).unwrap();
        lake.create_dataset("y", cols(), &[], 8).unwrap();
        lake.create_dataset("z", vec![ColumnDef::new("q", ValueType::Integer)], &[], 8).unwrap();
        let (g, counters) = ground_truth_schema(&lake).unwrap();
        let expected: std::collections::BTreeSet<_> =
            [("x", "y"), ("y", "x")].map(|(a, b)| (a.to_string(), b.to_string())).into();
        assert_eq!(g.edge_pairs(), expected);
        assert_eq!(counters.schema_pair_ops, 3);
    }

    #[test]
    fn evaluate_cases() {
        let nodes = ["a", "b", "c"].map(String::from);
        let truth = vec![
            ContainmentReport { parent: "a".into(), child: "b".into(), cm: 1.0 },
            ContainmentReport { parent: "a".into(), child: "c".into(), cm: 0.4 },
        ];
        let mut g = ContainmentGraph::new(Stage::Sgb, nodes.clone());
        for r in &truth {
            g.insert_edge(crate::graph::Edge {
                parent: r.parent.clone(),
                child: r.child.clone(),
                stage: Stage::Sgb,
                common_columns: vec![],
            })
            .unwrap();
        }
        let full = evaluate(&g, &truth).unwrap();
        assert_eq!(full, EvalSummary { correct: 1, incorrect_lt1: 1, not_detected: 0 });

        let exact_only = vec![truth[0].clone()];
        let mut g1 = ContainmentGraph::new(Stage::Sgb, nodes.clone());
        g1.insert_edge(g.edge("a", "b").unwrap().clone()).unwrap();
        assert_eq!(
            evaluate(&g1, &exact_only).unwrap(),
            EvalSummary { correct: 1, incorrect_lt1: 0, not_detected: 0 }
        );

        let empty = ContainmentGraph::new(Stage::Clp, nodes);
        assert_eq!(
            evaluate(&empty, &truth).unwrap(),
            EvalSummary { correct: 0, incorrect_lt1: 0, not_detected: 1 }
        );

        let stranger = vec![ContainmentReport { parent: "a".into(), child: "zz".into(), cm: 1.0 }];
        assert!(matches!(evaluate(&empty, &stranger), Err(Error::NodeMismatch(_))));
    }

    #[test]
    fn reports_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let reports = vec![ContainmentReport { parent: "a".into(), child: "b".into(), cm: 0.25 }];
        write_reports(&path, &reports).unwrap();
        assert_eq!(read_reports(&path).unwrap(), reports);
    }
}
