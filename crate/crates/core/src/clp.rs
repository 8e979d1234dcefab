// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

//! Content-level pruning. A handful of child rows is sampled, preferably via
//! equality filters chosen from partition metadata so that only a few
//! partitions are read, and each sampled row is looked up in the parent. A
//! single miss disproves containment.

use std::collections::{BTreeSet, HashSet};
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::graph::{ContainmentGraph, Stage};
use crate::lake::{DatasetHandle, Lake, Row};
use crate::rowhash::{encode_projection, RowSet};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClpMode {
    /// Filter only the child; the parent side uses partition pruning alone.
    ChildOnly,
    /// Apply the child's filter to the parent as well.
    BothSides,
}

impl FromStr for ClpMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "child-only" => Ok(ClpMode::ChildOnly),
            "both-sides" => Ok(ClpMode::BothSides),
            _ => Err(Error::InvalidParameter(format!("unknown CLP mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// Metadata-driven equality filters, topped up when too few rows match.
    Filtered,
    /// Uniform sample without replacement over a full scan.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClpParams {
    /// Maximum number of filter columns.
    pub s: usize,
    /// Maximum number of sampled child rows.
    pub t: usize,
    pub seed: u64,
    pub mode: ClpMode,
    pub sampling: Sampling,
}

impl Default for ClpParams {
    fn default() -> Self {
        ClpParams {
            s: 4,
            t: 10,
            seed: 0,
            mode: ClpMode::ChildOnly,
            sampling: Sampling::Filtered,
        }
    }
}

impl ClpParams {
    pub fn validate(&self) -> Result<()> {
        if self.s == 0 || self.t == 0 {
            return Err(Error::InvalidParameter(format!(
                "CLP needs s >= 1 and t >= 1 (got s={}, t={})",
                self.s, self.t
            )));
        }
        Ok(())
    }
}

/// Smallest sample size that exposes a child with containment at most
/// `1 - epsilon` with probability at least `1 - delta`.
pub fn required_samples(epsilon: f64, delta: f64) -> Result<u64> {
    let open_unit = |v: f64| v > 0.0 && v < 1.0;
    if !open_unit(epsilon) || !open_unit(delta) {
        return Err(Error::InvalidParameter(format!(
            "epsilon and delta must lie in (0, 1), got {epsilon} and {delta}"
        )));
    }
    let n = (1.0 / delta).ln() / (1.0 / (1.0 - epsilon)).ln();
    // Guard against ratios like ln 2 / ln 2 landing a hair above an integer.
    let rounded = n.round();
    let n = if (n - rounded).abs() < 1e-9 { rounded } else { n.ceil() };
    Ok(n.max(1.0) as u64)
}

/// Per-edge RNG, keyed by endpoint names so results do not depend on scheduling.
pub fn edge_rng(seed: u64, parent: &str, child: &str) -> ChaCha8Rng {
    let mut key = Vec::with_capacity(parent.len() + child.len() + 1);
    key.extend_from_slice(parent.as_bytes());
    key.push(0);
    key.extend_from_slice(child.as_bytes());
    ChaCha8Rng::seed_from_u64(xxhash_rust::xxh3::xxh3_64_with_seed(&key, seed))
}

/// Child columns ranked by the size of their metadata value pool (largest
/// first, then by name), restricted to `candidates`, at most `s` of them.
pub fn choose_search_columns(child: &DatasetHandle, candidates: &[String], s: usize) -> Vec<String> {
    let mut ranked: Vec<(usize, &String)> = candidates
        .iter()
        .map(|c| (value_pool(child, c).len(), c))
        .filter(|(n, _)| *n > 0)
        .collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    ranked.into_iter().take(s).map(|(_, c)| c.clone()).collect()
}

/// Distinct values recorded in the column's partition metadata, ascending.
fn value_pool(handle: &DatasetHandle, column: &str) -> Vec<Value> {
    let mut pool: Vec<Value> = Vec::new();
    let mut seen = HashSet::new();
    for p in &handle.partitions {
        if let Some(stats) = p.stats.get(column) {
            for v in &stats.distinct_sample {
                if seen.insert(v.clone()) {
                    pool.push(v.clone());
                }
            }
        }
    }
    pool.sort_by(|a, b| a.try_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    pool
}

/// Equality predicates `column = value`, combined by OR.
#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    pub terms: Vec<(String, Value)>,
}

impl Filter {
    fn partition_may_match(&self, handle: &DatasetHandle, part: usize) -> bool {
        let stats = &handle.partitions[part].stats;
        self.terms
            .iter()
            .any(|(c, v)| stats.get(c).is_some_and(|s| s.may_contain(v)))
    }

    fn bind(&self, handle: &DatasetHandle) -> Result<Vec<(usize, &Value)>> {
        self.terms
            .iter()
            .map(|(c, v)| Ok((handle.require_column(c)?, v)))
            .collect()
    }
}

fn row_matches(row: &Row, bound: &[(usize, &Value)]) -> bool {
    bound.iter().any(|(i, v)| row[*i] == **v)
}

#[derive(Debug, Clone, Default)]
pub struct ChildSample {
    /// Sampled rows projected on the requested columns.
    pub rows: Vec<Row>,
    pub rows_read: u64,
    /// The filter used, or `None` when a uniform full-scan sample was taken.
    pub filter: Option<Filter>,
    /// Set when filtered sampling was requested but no usable filter existed.
    pub fell_back: bool,
}

/// Samples up to `t` rows of `child` projected on `project`.
#[allow(clippy::too_many_arguments)]
pub fn sample_child(
    lake: &Lake,
    child: &DatasetHandle,
    project: &[String],
    search_cols: &[String],
    t: usize,
    sampling: Sampling,
    filtered_only: bool,
    rng: &mut ChaCha8Rng,
) -> Result<ChildSample> {
    if t == 0 {
        return Err(Error::InvalidParameter("t must be at least 1".into()));
    }
    let projection = project
        .iter()
        .map(|c| child.require_column(c))
        .collect::<Result<Vec<_>>>()?;
    let project_row = |row: &Row| -> Row { projection.iter().map(|&i| row[i].clone()).collect() };
    if child.total_rows == 0 {
        return Ok(ChildSample::default());
    }

    let mut filter = None;
    if sampling == Sampling::Filtered {
        let mut terms = Vec::new();
        for c in search_cols {
            child.require_column(c)?;
            let pool = value_pool(child, c);
            if !pool.is_empty() {
                terms.push((c.clone(), pool[rng.random_range(0..pool.len())].clone()));
            }
        }
        if !terms.is_empty() {
            filter = Some(Filter { terms });
        }
    }

    let Some(filter) = filter else {
        // Uniform sample without replacement over a full scan.
        let mut all = Vec::with_capacity(child.total_rows as usize);
        for p in 0..child.partitions.len() {
            all.extend(lake.read_partition(child, p)?.iter().map(&project_row));
        }
        let rows_read = all.len() as u64;
        let picked = index::sample(rng, all.len(), t.min(all.len()));
        let rows = picked.into_iter().map(|i| all[i].clone()).collect();
        return Ok(ChildSample {
            rows,
            rows_read,
            filter: None,
            fell_back: sampling == Sampling::Filtered,
        });
    };

    let bound = filter.bind(child)?;
    let mut matched: Vec<Row> = Vec::new();
    let mut spare: Vec<Row> = Vec::new();
    let mut rows_read = 0u64;
    let mut unread = Vec::new();
    for p in 0..child.partitions.len() {
        if !filter.partition_may_match(child, p) {
            unread.push(p);
            continue;
        }
        let rows = lake.read_partition(child, p)?;
        rows_read += rows.len() as u64;
        for row in rows.iter() {
            if row_matches(row, &bound) {
                matched.push(project_row(row));
            } else {
                spare.push(project_row(row));
            }
        }
    }

    let rows = if matched.len() >= t || filtered_only {
        let picked = index::sample(rng, matched.len(), t.min(matched.len()));
        picked.into_iter().map(|i| matched[i].clone()).collect()
    } else {
        // Too few matches: keep them all and top up, first from rows already
        // read, then from further partitions in random order.
        let need = t - matched.len();
        unread.shuffle(rng);
        let mut next = unread.into_iter();
        while spare.len() < need {
            let Some(p) = next.next() else { break };
            let rows = lake.read_partition(child, p)?;
            rows_read += rows.len() as u64;
            spare.extend(rows.iter().map(&project_row));
        }
        let picked = index::sample(rng, spare.len(), need.min(spare.len()));
        let mut out = matched;
        out.extend(picked.into_iter().map(|i| spare[i].clone()));
        out
    };
    Ok(ChildSample {
        rows,
        rows_read,
        filter: Some(filter),
        fell_back: false,
    })
}

/// Outcome of checking one edge.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeCheck {
    pub keep: bool,
    pub rows_scanned: u64,
    pub membership_ops: u64,
    pub fell_back: bool,
}

/// Samples the child of `parent -> child` and looks every sampled row up in the
/// parent, both projected on `common` (which must be columns of both).
pub fn clp_check(
    lake: &Lake,
    parent: &DatasetHandle,
    child: &DatasetHandle,
    common: &[String],
    params: &ClpParams,
) -> Result<EdgeCheck> {
    params.validate()?;
    let mut rng = edge_rng(params.seed, &parent.name, &child.name);
    let search = choose_search_columns(child, common, params.s);
    let both = params.mode == ClpMode::BothSides;
    let sample = sample_child(lake, child, common, &search, params.t, params.sampling, both, &mut rng)?;
    let mut check = EdgeCheck {
        keep: true,
        rows_scanned: sample.rows_read,
        membership_ops: 0,
        fell_back: sample.fell_back,
    };
    if sample.rows.is_empty() {
        return Ok(check);
    }

    let parent_idx = common
        .iter()
        .map(|c| parent.require_column(c))
        .collect::<Result<Vec<_>>>()?;

    // Parent partitions that could hold each sampled row.
    let mut needed = BTreeSet::new();
    for row in &sample.rows {
        let candidates: Vec<usize> = (0..parent.partitions.len())
            .filter(|&p| {
                let stats = &parent.partitions[p].stats;
                common
                    .iter()
                    .zip(row)
                    .all(|(c, v)| stats.get(c).is_some_and(|s| s.may_contain(v)))
            })
            .collect();
        if candidates.is_empty() {
            check.membership_ops += 1;
            check.keep = false;
            return Ok(check);
        }
        needed.extend(candidates);
    }

    let parent_filter = match (&sample.filter, both) {
        (Some(f), true) => Some(f.bind(parent)?),
        _ => None,
    };
    let mut members = RowSet::new();
    let mut buf = Vec::new();
    for p in needed {
        let rows = lake.read_partition(parent, p)?;
        check.rows_scanned += rows.len() as u64;
        for row in rows.iter() {
            if parent_filter.as_ref().is_some_and(|b| !row_matches(row, b)) {
                continue;
            }
            encode_projection(row, &parent_idx, &mut buf);
            members.insert(&buf);
        }
    }
    let identity: Vec<usize> = (0..common.len()).collect();
    for row in &sample.rows {
        check.membership_ops += 1;
        encode_projection(row, &identity, &mut buf);
        if !members.contains(&buf) {
            check.keep = false;
            break;
        }
    }
    Ok(check)
}

pub fn content_prune(
    graph: &ContainmentGraph,
    lake: &Lake,
    params: &ClpParams,
) -> Result<(ContainmentGraph, OpCounters)> {
    params.validate()?;
    if graph.stage != Stage::Mmp {
        return Err(Error::Structure(format!(
            "content pruning expects an MMP graph, got {}",
            graph.stage
        )));
    }
    let edges: Vec<_> = graph.edges().collect();
    let checks = edges
        .par_iter()
        .map(|e| {
            let parent = lake.dataset(&e.parent)?;
            let child = lake.dataset(&e.child)?;
            let check = clp_check(lake, &parent, &child, &e.common_columns, params)?;
            Ok((check, parent.total_rows))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = graph.clone();
    let mut counters = OpCounters::default();
    for (e, (check, parent_rows)) in edges.iter().zip(&checks) {
        counters.rows_scanned += check.rows_scanned;
        counters.row_membership_ops += check.membership_ops;
        counters.clp_nominal_row_ops += parent_rows * params.t as u64;
        counters.clp_fallback_samples += check.fell_back as u64;
        if !check.keep {
            out.remove_edge(&e.parent, &e.child);
        }
    }
    out.relabel(Stage::Clp);
    counters.edge_counts.clp = Some(out.edge_count() as u64);
    Ok((out, counters))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lake::ColumnDef;
    use crate::value::ValueType;

    #[test]
    fn sample_sizes() {
        assert_eq!(required_samples(0.1, 0.05).unwrap(), 29);
        assert_eq!(required_samples(0.5, 0.5).unwrap(), 1);
        assert_eq!(required_samples(0.5, 0.05).unwrap(), 5);
        assert!(required_samples(0.0, 0.5).is_err());
        assert!(required_samples(0.5, 1.0).is_err());
    }

    #[test]
    fn sample_sizes_match_closed_form() {
        for &(e, d) in &[(0.01, 0.01), (0.2, 0.1), (0.3, 0.001), (0.05, 0.5)] {
            let n = required_samples(e, d).unwrap();
            // Smallest n with (1-e)^n <= d.
            let mut m = 1u64;
            while (1.0f64 - e).powi(m as i32) > d {
                m += 1;
            }
            assert_eq!(n, m, "eps={e} delta={d}");
        }
    }

    fn two_col(rows: impl Iterator<Item = (i64, i64)>) -> Vec<Row> {
        rows.map(|(a, b)| vec![Value::Int(a), Value::Int(b)]).collect()
    }

    fn cols() -> Vec<ColumnDef> {
        vec![ColumnDef::new("k", ValueType::Integer), ColumnDef::new("v", ValueType::Integer)]
    }

    fn common() -> Vec<String> {
        vec!["k".into(), "v".into()]
    }

    #[test]
    fn zero_t_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let lake = Lake::open(dir.path()).unwrap();
        let h = lake.create_dataset("y", cols(), &two_col((0..3).map(|i| (i, i))), 10).unwrap();
        let mut rng = edge_rng(0, "a", "b");
        assert!(sample_child(&lake, &h, &common(), &[], 0, Sampling::Uniform, false, &mut rng).is_err());
        let params = ClpParams { t: 0, ..Default::default() };
        assert!(clp_check(&lake, &h, &h, &common(), &params).is_err());
    }

    #[test]
    fn large_t_returns_whole_child() {
        let dir = tempfile::tempdir().unwrap();
        let lake = Lake::open(dir.path()).unwrap();
        let rows = two_col((0..7).map(|i| (i, i * 2)));
        let h = lake.create_dataset("y", cols(), &rows, 3).unwrap();
        for sampling in [Sampling::Uniform, Sampling::Filtered] {
            let mut rng = edge_rng(1, "x", "y");
            let s = sample_child(&lake, &h, &common(), &common(), 100, sampling, false, &mut rng).unwrap();
            let mut got = s.rows.clone();
            got.sort_by_key(|r| r[0].canonical().parse::<i64>().unwrap());
            assert_eq!(got, rows);
        }
    }

    #[test]
    fn filtered_sampling_skips_disjoint_partitions() {
        let dir = tempfile::tempdir().unwrap();
        let lake = Lake::open(dir.path()).unwrap();
        // Ten partitions of 50 rows with disjoint `k` ranges, ten rows per value.
        let rows = two_col((0..500).map(|i| (i / 10, i)));
        let h = lake.create_dataset("y", cols(), &rows, 50).unwrap();
        for seed in 0..20 {
            let mut rng = edge_rng(seed, "x", "y");
            let s = sample_child(&lake, &h, &common(), &["k".to_string()], 5, Sampling::Filtered, false, &mut rng)
                .unwrap();
            assert_eq!(s.rows.len(), 5);
            assert_eq!(s.rows_read, 50, "one partition suffices when ten rows match");
            let k = &s.filter.as_ref().unwrap().terms[0].1;
            assert!(s.rows.iter().all(|r| &r[0] == k));
        }
    }

    #[test]
    fn top_up_reads_only_what_is_needed() {
        let dir = tempfile::tempdir().unwrap();
        let lake = Lake::open(dir.path()).unwrap();
        // Unique keys: the filter matches one row, the rest of the partition tops up.
        let rows = two_col((0..500).map(|i| (i, i)));
        let h = lake.create_dataset("y", cols(), &rows, 50).unwrap();
        let mut rng = edge_rng(3, "x", "y");
        let s = sample_child(&lake, &h, &common(), &["k".to_string()], 10, Sampling::Filtered, false, &mut rng)
            .unwrap();
        assert_eq!(s.rows.len(), 10);
        assert_eq!(s.rows_read, 50);
        let mut rng = edge_rng(3, "x", "y");
        let s = sample_child(&lake, &h, &common(), &["k".to_string()], 120, Sampling::Filtered, false, &mut rng)
            .unwrap();
        assert_eq!(s.rows.len(), 120);
        assert!(s.rows_read <= 50 * 3, "read {} rows", s.rows_read);
        let distinct: HashSet<_> = s.rows.iter().collect();
        assert_eq!(distinct.len(), 120);
    }

    fn check(lake: &Lake, p: &str, c: &str, params: &ClpParams) -> EdgeCheck {
        let parent = lake.dataset(p).unwrap();
        let child = lake.dataset(c).unwrap();
        clp_check(lake, &parent, &child, &common(), params).unwrap()
    }

    #[test]
    fn contained_child_always_kept() {
        let dir = tempfile::tempdir().unwrap();
        let lake = Lake::open(dir.path()).unwrap();
        lake.create_dataset("x", cols(), &two_col((0..300).map(|i| (i % 17, i))), 40).unwrap();
        lake.create_dataset("y", cols(), &two_col((0..300).filter(|i| i % 3 == 0).map(|i| (i % 17, i))), 20)
            .unwrap();
        for seed in 0..30 {
            for mode in [ClpMode::ChildOnly, ClpMode::BothSides] {
                for sampling in [Sampling::Filtered, Sampling::Uniform] {
                    let params = ClpParams { seed, mode, sampling, ..Default::default() };
                    assert!(check(&lake, "x", "y", &params).keep);
                }
            }
        }
    }

    #[test]
    fn fabricated_row_found_by_exhaustive_sample() {
        let dir = tempfile::tempdir().unwrap();
        let lake = Lake::open(dir.path()).unwrap();
        lake.create_dataset("x", cols(), &two_col((0..100).map(|i| (i, i))), 10).unwrap();
        let mut child = two_col((0..20).map(|i| (i, i)));
        child.push(vec![Value::Int(5), Value::Int(6)]);
        lake.create_dataset("y", cols(), &child, 10).unwrap();
        for seed in 0..10 {
            let params = ClpParams { seed, t: 21, sampling: Sampling::Uniform, ..Default::default() };
            assert!(!check(&lake, "x", "y", &params).keep);
        }
    }

    #[test]
    fn empty_child_kept() {
        let dir = tempfile::tempdir().unwrap();
        let lake = Lake::open(dir.path()).unwrap();
        lake.create_dataset("x", cols(), &two_col((0..10).map(|i| (i, i))), 10).unwrap();
        lake.create_dataset("y", cols(), &[], 10).unwrap();
        let c = check(&lake, "x", "y", &ClpParams::default());
        assert!(c.keep);
        assert_eq!(c.rows_scanned, 0);
    }

    #[test]
    fn same_seed_same_verdicts() {
        let dir = tempfile::tempdir().unwrap();
        let lake = Lake::open(dir.path()).unwrap();
        lake.create_dataset("x", cols(), &two_col((0..200).map(|i| (i % 9, i))), 30).unwrap();
        lake.create_dataset("y", cols(), &two_col((150..260).map(|i| (i % 9, i))), 30).unwrap();
        let params = ClpParams { seed: 9, ..Default::default() };
        let a = check(&lake, "x", "y", &params);
        let b = check(&lake, "x", "y", &params);
        assert_eq!(a, b);
    }

    #[test]
    fn type_mismatch_on_shared_column_prunes_without_parent_scan() {
        let dir = tempfile::tempdir().unwrap();
        let lake = Lake::open(dir.path()).unwrap();
        let text_cols = vec![ColumnDef::new("k", ValueType::Text), ColumnDef::new("v", ValueType::Integer)];
        let rows: Vec<Row> = (0..10).map(|i| vec![Value::Text(i.to_string()), Value::Int(i)]).collect();
        lake.create_dataset("x", text_cols, &rows, 10).unwrap();
        lake.create_dataset("y", cols(), &two_col((0..10).map(|i| (i, i))), 10).unwrap();
        let c = check(&lake, "x", "y", &ClpParams::default());
        assert!(!c.keep);
        assert_eq!(c.rows_scanned, 10, "only the child was read");
    }
}
