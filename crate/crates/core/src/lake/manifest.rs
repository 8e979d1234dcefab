// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::value::{Value, ValueType};

/// Maximum number of distinct values kept per column per partition.
pub const DISTINCT_SAMPLE_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnDef {
    /// Dot-joined flattened path, e.g. `product.price`.
    pub path: String,
    #[serde(rename = "type")]
    pub ty: ValueType,
}

impl ColumnDef {
    pub fn new(path: impl Into<String>, ty: ValueType) -> Self {
        ColumnDef {
            path: path.into(),
            ty,
        }
    }
}

/// Per-partition, per-column metadata. Nulls never contribute to `min`/`max`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ColumnStats {
    pub min: Option<Value>,
    pub max: Option<Value>,
    pub null_count: u64,
    /// The smallest distinct non-null values, ascending. Fewer than
    /// [`DISTINCT_SAMPLE_CAP`] entries means the list is exhaustive.
    pub distinct_sample: Vec<Value>,
}

impl ColumnStats {
    pub fn sample_is_exhaustive(&self) -> bool {
        self.distinct_sample.len() < DISTINCT_SAMPLE_CAP
    }

    /// Whether a partition with these stats could hold `value` in this column.
    pub fn may_contain(&self, value: &Value) -> bool {
        if value.is_null() {
            return self.null_count > 0;
        }
        let (Some(min), Some(max)) = (&self.min, &self.max) else {
            return false;
        };
        let in_range = matches!(min.try_cmp(value), Ok(Ordering::Less | Ordering::Equal))
            && matches!(value.try_cmp(max), Ok(Ordering::Less | Ordering::Equal));
        if !in_range {
            return false;
        }
        !self.sample_is_exhaustive() || self.distinct_sample.contains(value)
    }
}

/// Single-pass accumulator for [`ColumnStats`].
#[derive(Debug, Default)]
pub(crate) struct StatsBuilder {
    stats: ColumnStats,
}

impl StatsBuilder {
    pub(crate) fn observe(&mut self, value: &Value) {
        if value.is_null() {
            self.stats.null_count += 1;
            return;
        }
        let lt = |a: &Value, b: &Value| matches!(a.try_cmp(b), Ok(Ordering::Less));
        match &self.stats.min {
            Some(m) if !lt(value, m) => {}
            _ => self.stats.min = Some(value.clone()),
        }
        match &self.stats.max {
            Some(m) if !lt(m, value) => {}
            _ => self.stats.max = Some(value.clone()),
        }
        let sample = &mut self.stats.distinct_sample;
        let pos = sample.binary_search_by(|probe| probe.try_cmp(value).unwrap_or(Ordering::Less));
        if let Err(at) = pos {
            if at < DISTINCT_SAMPLE_CAP {
                sample.insert(at, value.clone());
                sample.truncate(DISTINCT_SAMPLE_CAP);
            }
        }
    }

    pub(crate) fn finish(self) -> ColumnStats {
        self.stats
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub id: u32,
    pub row_count: u64,
    /// Payload file, relative to the dataset directory.
    pub file: String,
    pub stats: BTreeMap<String, ColumnStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetHandle {
    pub name: String,
    pub columns: Vec<ColumnDef>,
    pub partitions: Vec<Partition>,
    pub total_rows: u64,
    pub total_bytes: u64,
}

impl DatasetHandle {
    pub fn column_index(&self, path: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.path == path)
    }

    pub fn column(&self, path: &str) -> Option<&ColumnDef> {
        self.columns.iter().find(|c| c.path == path)
    }

    pub(crate) fn require_column(&self, path: &str) -> Result<usize> {
        self.column_index(path).ok_or_else(|| Error::UnknownColumn {
            dataset: self.name.clone(),
            column: path.to_string(),
        })
    }

    pub fn column_paths(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.path.as_str())
    }

    pub fn to_json(&self) -> Result<String> {
        let raw = RawManifest::from(self);
        serde_json::to_string_pretty(&raw).map_err(|e| Error::json("manifest", e))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawManifest =
            serde_json::from_str(text).map_err(|e| Error::json("manifest", e))?;
        raw.try_into()
    }
}

// On-disk form: values are stored as canonical strings and re-typed on load
// using the column type, which keeps integers exact and timestamps readable.

#[derive(Serialize, Deserialize)]
struct RawManifest {
    name: String,
    columns: Vec<ColumnDef>,
    partitions: Vec<RawPartition>,
    total_rows: u64,
    total_bytes: u64,
}

#[derive(Serialize, Deserialize)]
struct RawPartition {
    id: u32,
    row_count: u64,
    file: String,
    stats: BTreeMap<String, RawStats>,
}

#[derive(Serialize, Deserialize)]
struct RawStats {
    min: Option<String>,
    max: Option<String>,
    null_count: u64,
    distinct_sample: Vec<String>,
}

impl From<&DatasetHandle> for RawManifest {
    fn from(h: &DatasetHandle) -> Self {
        let render = |v: &Option<Value>| v.as_ref().map(Value::canonical);
        RawManifest {
            name: h.name.clone(),
            columns: h.columns.clone(),
            partitions: h
                .partitions
                .iter()
                .map(|p| RawPartition {
                    id: p.id,
                    row_count: p.row_count,
                    file: p.file.clone(),
                    stats: p
                        .stats
                        .iter()
                        .map(|(k, s)| {
                            (
                                k.clone(),
                                RawStats {
                                    min: render(&s.min),
                                    max: render(&s.max),
                                    null_count: s.null_count,
                                    distinct_sample: s
                                        .distinct_sample
                                        .iter()
                                        .map(Value::canonical)
                                        .collect(),
                                },
                            )
                        })
                        .collect(),
                })
                .collect(),
            total_rows: h.total_rows,
            total_bytes: h.total_bytes,
        }
    }
}

impl TryFrom<RawManifest> for DatasetHandle {
    type Error = Error;

    fn try_from(raw: RawManifest) -> Result<Self> {
        let types: BTreeMap<&str, ValueType> =
            raw.columns.iter().map(|c| (c.path.as_str(), c.ty)).collect();
        let parse = |ty: ValueType, s: &str| {
            ty.parse(s).ok_or_else(|| {
                Error::Schema(format!("manifest value `{s}` is not a valid {ty}"))
            })
        };
        let mut partitions = Vec::with_capacity(raw.partitions.len());
        for p in raw.partitions {
            let mut stats = BTreeMap::new();
            for (col, s) in p.stats {
                let ty = *types.get(col.as_str()).ok_or_else(|| {
                    Error::Schema(format!("stats for undeclared column `{col}`"))
                })?;
                stats.insert(
                    col,
                    ColumnStats {
                        min: s.min.as_deref().map(|v| parse(ty, v)).transpose()?,
                        max: s.max.as_deref().map(|v| parse(ty, v)).transpose()?,
                        null_count: s.null_count,
                        distinct_sample: s
                            .distinct_sample
                            .iter()
                            .map(|v| parse(ty, v))
                            .collect::<Result<_>>()?,
                    },
                );
            }
            partitions.push(Partition {
                id: p.id,
                row_count: p.row_count,
                file: p.file,
                stats,
            });
        }
        Ok(DatasetHandle {
            name: raw.name,
            columns: raw.columns,
            partitions,
            total_rows: raw.total_rows,
            total_bytes: raw.total_bytes,
        })
    }
}
