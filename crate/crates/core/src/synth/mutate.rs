// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

//! Random lake mutations for exercising incremental graph maintenance.

use rand::seq::{index, IndexedRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dynamic::Change;
use crate::error::Result;
use crate::lake::{ColumnDef, Lake, Row};
use crate::synth::ops::{self, Table};
use crate::value::{Value, ValueType};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MutationEvent {
    Added(String),
    Mutated(String, Change),
    Removed(String),
}

/// Applies one random mutation to `lake` and reports it. New datasets are named
/// `{prefix}{seq}`. Removals never take the lake below `min_datasets`.
pub fn random_mutation(
    lake: &Lake,
    rng: &mut ChaCha8Rng,
    partition_rows: usize,
    prefix: &str,
    seq: usize,
    min_datasets: usize,
) -> Result<MutationEvent> {
    let names = lake.names();
    loop {
        let target = names.choose(rng).expect("lake is not empty").clone();
        let handle = lake.dataset(&target)?;
        let table = Table {
            name: target.clone(),
            columns: handle.columns.clone(),
            rows: lake.read_all(&handle)?,
        };
        match rng.random_range(0..6) {
            0 => {
                let name = format!("{prefix}{seq}");
                let rows = if rng.random_bool(0.6) {
                    ops::filter_sample(&table, rng)
                } else {
                    Some(ops::add_rows(&table, rng))
                };
                let Some(rows) = rows.filter(|r| !r.is_empty()) else { continue };
                lake.create_dataset(&name, table.columns, &rows, partition_rows)?;
                return Ok(MutationEvent::Added(name));
            }
            1 => {
                // Grow with rows taken from a dataset of the same schema, or
                // fresh rows drawn from the column distributions.
                if table.rows.is_empty() {
                    continue;
                }
                let mut rows = table.rows.clone();
                let donor = names
                    .iter()
                    .filter(|n| **n != target)
                    .filter_map(|n| lake.dataset(n).ok())
                    .find(|h| h.columns == table.columns && h.total_rows > 0);
                match donor {
                    Some(h) if rng.random_bool(0.5) => {
                        let extra = lake.read_all(&h)?;
                        let k = rng.random_range(1..=extra.len());
                        rows.extend(index::sample(rng, extra.len(), k).into_iter().map(|i| extra[i].clone()));
                    }
                    _ => rows = ops::add_rows(&table, rng),
                }
                lake.replace_dataset(&target, table.columns, &rows, partition_rows)?;
                return Ok(MutationEvent::Mutated(target, Change::RowsAdded));
            }
            2 => {
                if table.rows.len() < 2 {
                    continue;
                }
                let keep = rng.random_range(1..table.rows.len());
                let mut picked: Vec<usize> = index::sample(rng, table.rows.len(), keep).into_vec();
                picked.sort_unstable();
                let rows: Vec<Row> = picked.into_iter().map(|i| table.rows[i].clone()).collect();
                lake.replace_dataset(&target, table.columns, &rows, partition_rows)?;
                return Ok(MutationEvent::Mutated(target, Change::RowsRemoved));
            }
            3 => {
                let (columns, rows) = match ops::add_columns(&table, rng) {
                    Some(x) => x,
                    None => tag_column(&table),
                };
                lake.replace_dataset(&target, columns, &rows, partition_rows)?;
                return Ok(MutationEvent::Mutated(target, Change::ColumnsAdded));
            }
            4 => {
                if table.columns.len() < 2 {
                    continue;
                }
                let drop = rng.random_range(0..table.columns.len());
                let mut columns = table.columns.clone();
                columns.remove(drop);
                let rows: Vec<Row> = table
                    .rows
                    .iter()
                    .map(|r| {
                        let mut r = r.clone();
                        r.remove(drop);
                        r
                    })
                    .collect();
                lake.replace_dataset(&target, columns, &rows, partition_rows)?;
                return Ok(MutationEvent::Mutated(target, Change::ColumnsRemoved));
            }
            _ => {
                if names.len() <= min_datasets {
                    continue;
                }
                lake.remove_dataset(&target)?;
                return Ok(MutationEvent::Removed(target));
            }
        }
    }
}

fn tag_column(t: &Table) -> (Vec<ColumnDef>, Vec<Row>) {
    let mut n = 1;
    while t.column_index(&format!("tag{n}")).is_some() {
        n += 1;
    }
    let mut columns = t.columns.clone();
    columns.push(ColumnDef::new(format!("tag{n}"), ValueType::Text));
    let rows = t
        .rows
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.push(Value::Text(t.name.clone()));
            r
        })
        .collect();
    (columns, rows)
}
