// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

//! Table transformations used to derive synthetic children.

use std::collections::{BTreeMap, HashMap};

use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::lake::{ColumnDef, Row};
use crate::rowhash::{encode_projection, RowSet};
use crate::value::{Value, ValueType};

/// An in-memory table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<ColumnDef>,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn column_index(&self, path: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.path == path)
    }

    fn numeric_columns(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&i| self.columns[i].ty.is_numeric())
            .filter(|&i| self.rows.iter().any(|r| !r[i].is_null()))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    FilterSample,
    AddRows,
    AddColumns,
    AddNoise,
    Compose,
}

impl OpKind {
    pub const BASE: [OpKind; 4] = [OpKind::FilterSample, OpKind::AddRows, OpKind::AddColumns, OpKind::AddNoise];

    pub fn preserves_containment(self) -> bool {
        self == OpKind::FilterSample
    }
}

/// Smallest child a filter may produce.
pub const MIN_FILTER_ROWS: usize = 5;

/// Keeps the rows matching a random range (ordered columns) or value-set
/// (text) predicate covering roughly 15-70% of rows, then randomly subsamples.
/// Returns `None` when no column supports a predicate leaving enough rows.
pub fn filter_sample(t: &Table, rng: &mut ChaCha8Rng) -> Option<Vec<Row>> {
    let mut candidates: Vec<usize> = (0..t.columns.len()).collect();
    candidates.shuffle(rng);
    for col in candidates {
        let Some(mask) = predicate_mask(t, col, rng) else {
            continue;
        };
        let keep_frac = rng.random_range(0.5..=1.0);
        let rows: Vec<Row> = t
            .rows
            .iter()
            .zip(mask)
            .filter(|(_, m)| *m)
            .filter(|_| rng.random_bool(keep_frac))
            .map(|(r, _)| r.clone())
            .collect();
        if rows.len() >= MIN_FILTER_ROWS {
            return Some(rows);
        }
    }
    None
}

fn predicate_mask(t: &Table, col: usize, rng: &mut ChaCha8Rng) -> Option<Vec<bool>> {
    let values: Vec<&Value> = t.rows.iter().map(|r| &r[col]).filter(|v| !v.is_null()).collect();
    if values.len() < 2 {
        return None;
    }
    let target = rng.random_range(0.15..=0.70);
    if t.columns[col].ty == ValueType::Text {
        // Value-set predicate over frequency-ranked values.
        let mut freq: HashMap<&Value, usize> = HashMap::new();
        for v in &values {
            *freq.entry(*v).or_default() += 1;
        }
        if freq.len() < 2 {
            return None;
        }
        let mut ranked: Vec<(&Value, usize)> = freq.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.canonical().cmp(&b.0.canonical())));
        let start = crate::synth::zipf_pick(ranked.len(), 1.0, rng);
        let want = (target * t.rows.len() as f64).ceil() as usize;
        let mut chosen = Vec::new();
        let mut covered = 0;
        for (v, n) in ranked.iter().cycle().skip(start).take(ranked.len() - 1) {
            if covered >= want {
                break;
            }
            chosen.push(*v);
            covered += n;
        }
        return Some(t.rows.iter().map(|r| chosen.contains(&&r[col])).collect());
    }
    let mut sorted = values.clone();
    sorted.sort_by(|a, b| a.try_cmp(b).expect("one type per column"));
    let n = sorted.len();
    let width = ((target * n as f64) as usize).clamp(1, n - 1);
    let start = rng.random_range(0..=n - width);
    let lo = sorted[start].clone();
    let hi = sorted[start + width - 1].clone();
    Some(
        t.rows
            .iter()
            .map(|r| {
                let v = &r[col];
                !v.is_null() && v.try_cmp(&lo).unwrap().is_ge() && v.try_cmp(&hi).unwrap().is_le()
            })
            .collect(),
    )
}

/// Appends 20-60% new rows whose cells are drawn independently per column from
/// the table's own values, then shuffles.
pub fn add_rows(t: &Table, rng: &mut ChaCha8Rng) -> Vec<Row> {
    let n = t.rows.len();
    let mut rows = t.rows.clone();
    if n == 0 {
        return rows;
    }
    let extra = ((rng.random_range(0.2..=0.6) * n as f64).ceil() as usize).max(1);
    for _ in 0..extra {
        rows.push(
            (0..t.columns.len())
                .map(|c| t.rows[rng.random_range(0..n)][c].clone())
                .collect(),
        );
    }
    rows.shuffle(rng);
    rows
}

/// Adds a float column holding a linear combination of one or two numeric
/// columns. Returns `None` without a numeric column.
pub fn add_columns(t: &Table, rng: &mut ChaCha8Rng) -> Option<(Vec<ColumnDef>, Vec<Row>)> {
    let numeric = t.numeric_columns();
    if numeric.is_empty() {
        return None;
    }
    let k = rng.random_range(1..=numeric.len().min(2));
    let picked: Vec<usize> = index::sample(rng, numeric.len(), k).into_iter().map(|i| numeric[i]).collect();
    let coef: Vec<f64> = picked
        .iter()
        .map(|_| {
            let magnitude = rng.random_range(10..=300) as f64 / 100.0;
            if rng.random_bool(0.5) { magnitude } else { -magnitude }
        })
        .collect();
    let offset = rng.random_range(-1000..=1000) as f64 / 10.0;
    let mut n = 1;
    while t.column_index(&format!("lc{n}")).is_some() {
        n += 1;
    }
    let mut columns = t.columns.clone();
    columns.push(ColumnDef::new(format!("lc{n}"), ValueType::Float));
    let rows = t
        .rows
        .iter()
        .map(|r| {
            let mut total = offset;
            let mut null = false;
            for (&c, a) in picked.iter().zip(&coef) {
                match r[c].as_f64() {
                    Some(x) => total += a * x,
                    None => null = true,
                }
            }
            let mut out = r.clone();
            out.push(if null || !total.is_finite() { Value::Null } else { Value::Float(round4(total)) });
            out
        })
        .collect();
    Some((columns, rows))
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

/// Perturbs a numeric column on 30-100% of its non-null cells; every touched
/// cell changes. Returns `None` without a numeric column.
pub fn add_noise(t: &Table, rng: &mut ChaCha8Rng) -> Option<Vec<Row>> {
    let numeric = t.numeric_columns();
    let &col = numeric.choose(rng)?;
    let frac = rng.random_range(0.3..=1.0);
    let scale = {
        let vals: Vec<f64> = t.rows.iter().filter_map(|r| r[col].as_f64()).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        (var.sqrt() * 0.05).max(0.01)
    };
    let normal = Normal::new(0.0, scale).expect("positive scale");
    let rows = t
        .rows
        .iter()
        .map(|r| {
            let mut out = r.clone();
            if rng.random_bool(frac) {
                out[col] = match &r[col] {
                    Value::Int(v) => {
                        let d = rng.random_range(1..=3) * if rng.random_bool(0.5) { 1 } else { -1 };
                        Value::Int(v.saturating_add(d))
                    }
                    Value::Float(v) => {
                        let mut n = round4(v + normal.sample(rng));
                        if n == *v {
                            n = round4(v + scale);
                        }
                        Value::Float(n)
                    }
                    other => other.clone(),
                };
            }
            out
        })
        .collect();
    Some(rows)
}

/// Whether every distinct row of `child`, projected on the child's columns, is
/// a row of `parent`. `None` if the parent lacks one of those columns.
pub fn table_contained(child: &Table, parent: &Table) -> Option<bool> {
    let mut child_idx = Vec::new();
    let mut parent_idx = Vec::new();
    for (i, c) in child.columns.iter().enumerate() {
        child_idx.push(i);
        parent_idx.push(parent.column_index(&c.path)?);
    }
    let mut set = RowSet::new();
    let mut buf = Vec::new();
    for r in &parent.rows {
        encode_projection(r, &parent_idx, &mut buf);
        set.insert(&buf);
    }
    Some(child.rows.iter().all(|r| {
        encode_projection(r, &child_idx, &mut buf);
        set.contains(&buf)
    }))
}

/// Column path → type, for checking that derived tables keep their types.
pub fn column_types(columns: &[ColumnDef]) -> BTreeMap<&str, ValueType> {
    columns.iter().map(|c| (c.path.as_str(), c.ty)).collect()
}
