// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

//! On-disk lake: one directory per dataset holding `manifest.json` and one
//! payload file per partition.
//!
//! Datasets are immutable once published. Payloads are written into a staging
//! directory and renamed into place under the writer lock, so readers only ever
//! observe complete datasets.

mod ingest;
mod manifest;
mod payload;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

pub use manifest::{ColumnDef, ColumnStats, DatasetHandle, Partition, DISTINCT_SAMPLE_CAP};
pub use payload::Row;

use crate::error::{Error, Result};
use crate::value::Value;
use manifest::StatsBuilder;

const MANIFEST: &str = "manifest.json";

/// Decoded partitions kept in memory, up to this many rows in total.
const DEFAULT_CACHE_ROWS: u64 = 4_000_000;

pub struct Lake {
    root: PathBuf,
    index: RwLock<BTreeMap<String, Arc<DatasetHandle>>>,
    writer: Mutex<()>,
    rows_scanned: AtomicU64,
    staging_seq: AtomicU64,
    cache: PartitionCache,
}

impl std::fmt::Debug for Lake {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Lake").field("root", &self.root).finish_non_exhaustive()
    }
}

impl Lake {
    /// Opens the lake at `root`, creating the directory if needed.
    pub fn open(root: impl AsRef<Path>) -> Result<Lake> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        let mut index = BTreeMap::new();
        for entry in fs::read_dir(&root).map_err(|e| Error::io(&root, e))? {
            let entry = entry.map_err(|e| Error::io(&root, e))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if name.starts_with('.') || !entry.path().is_dir() {
                continue;
            }
            let manifest_path = entry.path().join(MANIFEST);
            if !manifest_path.exists() {
                continue;
            }
            let text =
                fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
            let handle = DatasetHandle::from_json(&text)?;
            if handle.name != name {
                return Err(Error::Schema(format!(
                    "manifest in `{name}` names dataset `{}`",
                    handle.name
                )));
            }
            index.insert(name, Arc::new(handle));
        }
        Ok(Lake {
            root,
            index: RwLock::new(index),
            writer: Mutex::new(()),
            rows_scanned: AtomicU64::new(0),
            staging_seq: AtomicU64::new(0),
            cache: PartitionCache::new(DEFAULT_CACHE_ROWS),
        })
    }

    /// Sets the decoded-partition cache budget in rows; 0 disables caching.
    pub fn set_cache_rows(&mut self, rows: u64) {
        self.cache = PartitionCache::new(rows);
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// All datasets, ordered by name.
    pub fn datasets(&self) -> Vec<Arc<DatasetHandle>> {
        self.index.read().unwrap().values().cloned().collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.index.read().unwrap().keys().cloned().collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.read().unwrap().contains_key(name)
    }

    pub fn dataset(&self, name: &str) -> Result<Arc<DatasetHandle>> {
        self.index
            .read()
            .unwrap()
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownDataset(name.to_string()))
    }

    /// Total rows read from payloads since the lake was opened.
    pub fn rows_scanned(&self) -> u64 {
        self.rows_scanned.load(Ordering::Relaxed)
    }

    /// Ingests comma-delimited text from a file, or from every `*.csv` file of a
    /// directory in name order.
    pub fn ingest(
        &self,
        source: impl AsRef<Path>,
        name: &str,
        partition_rows: usize,
    ) -> Result<Arc<DatasetHandle>> {
        validate_name(name)?;
        check_partition_rows(partition_rows)?;
        let (columns, rows) = ingest::read_delimited(source.as_ref())?;
        self.create_dataset(name, columns, &rows, partition_rows)
    }

    /// Atomically replaces an existing dataset with freshly ingested content.
    pub fn reingest(
        &self,
        source: impl AsRef<Path>,
        name: &str,
        partition_rows: usize,
    ) -> Result<Arc<DatasetHandle>> {
        check_partition_rows(partition_rows)?;
        let (columns, rows) = ingest::read_delimited(source.as_ref())?;
        self.replace_dataset(name, columns, &rows, partition_rows)
    }

    /// Materializes typed rows as a new dataset.
    pub fn create_dataset(
        &self,
        name: &str,
        columns: Vec<ColumnDef>,
        rows: &[Row],
        partition_rows: usize,
    ) -> Result<Arc<DatasetHandle>> {
        self.publish(name, columns, rows, partition_rows, false)
    }

    /// Atomically replaces an existing dataset with new content.
    pub fn replace_dataset(
        &self,
        name: &str,
        columns: Vec<ColumnDef>,
        rows: &[Row],
        partition_rows: usize,
    ) -> Result<Arc<DatasetHandle>> {
        self.publish(name, columns, rows, partition_rows, true)
    }

    pub fn remove_dataset(&self, name: &str) -> Result<()> {
        let _guard = self.writer.lock().unwrap();
        if self.index.write().unwrap().remove(name).is_none() {
            return Err(Error::UnknownDataset(name.to_string()));
        }
        self.cache.forget(name);
        let dir = self.root.join(name);
        fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))
    }

    fn publish(
        &self,
        name: &str,
        columns: Vec<ColumnDef>,
        rows: &[Row],
        partition_rows: usize,
        replace: bool,
    ) -> Result<Arc<DatasetHandle>> {
        validate_name(name)?;
        check_partition_rows(partition_rows)?;
        validate_columns(&columns)?;
        validate_rows(&columns, rows)?;
        if !replace && self.contains(name) {
            return Err(Error::Conflict(name.to_string()));
        }

        let seq = self.staging_seq.fetch_add(1, Ordering::Relaxed);
        let staging = self
            .root
            .join(format!(".staging-{name}-{}-{seq}", std::process::id()));
        let handle = match write_dataset(&staging, name, columns, rows, partition_rows) {
            Ok(h) => h,
            Err(e) => {
                let _ = fs::remove_dir_all(&staging);
                return Err(e);
            }
        };

        let _guard = self.writer.lock().unwrap();
        let target = self.root.join(name);
        let exists = self.contains(name);
        let result = if replace {
            if !exists {
                Err(Error::UnknownDataset(name.to_string()))
            } else {
                let retired = self.root.join(format!(".retired-{name}-{seq}"));
                fs::rename(&target, &retired)
                    .and_then(|_| fs::rename(&staging, &target))
                    .and_then(|_| fs::remove_dir_all(&retired))
                    .map_err(|e| Error::io(&target, e))
            }
        } else if exists || target.exists() {
            Err(Error::Conflict(name.to_string()))
        } else {
            fs::rename(&staging, &target).map_err(|e| Error::io(&target, e))
        };
        if let Err(e) = result {
            let _ = fs::remove_dir_all(&staging);
            return Err(e);
        }
        let handle = Arc::new(handle);
        self.cache.forget(name);
        self.index
            .write()
            .unwrap()
            .insert(name.to_string(), handle.clone());
        Ok(handle)
    }

    /// Reads and decodes one partition, adding its rows to the scan counter.
    pub fn read_partition(&self, handle: &DatasetHandle, index: usize) -> Result<Arc<Vec<Row>>> {
        let part = handle.partitions.get(index).ok_or_else(|| {
            Error::Internal(format!("partition {index} out of range for {}", handle.name))
        })?;
        self.rows_scanned.fetch_add(part.row_count, Ordering::Relaxed);
        if let Some(rows) = self.cache.get(&handle.name, part.id) {
            return Ok(rows);
        }
        let path = self.root.join(&handle.name).join(&part.file);
        let buf = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let rows = payload::decode_rows(&path, &buf, handle.columns.len())?;
        if rows.len() as u64 != part.row_count {
            return Err(Error::Payload {
                path,
                message: format!("holds {} rows, manifest says {}", rows.len(), part.row_count),
            });
        }
        let rows = Arc::new(rows);
        self.cache.put(&handle.name, part.id, rows.clone());
        Ok(rows)
    }

    /// Projected rows of the partitions accepted by `filter` (all when `None`).
    pub fn scan<'a>(
        &'a self,
        handle: &'a DatasetHandle,
        columns: &[&str],
        filter: Option<&'a dyn Fn(&Partition) -> bool>,
    ) -> Result<Scan<'a>> {
        let projection = columns
            .iter()
            .map(|c| handle.require_column(c))
            .collect::<Result<Vec<_>>>()?;
        let partitions = (0..handle.partitions.len())
            .filter(|&i| filter.is_none_or(|f| f(&handle.partitions[i])))
            .collect();
        Ok(Scan {
            lake: self,
            handle,
            projection,
            partitions,
            next_partition: 0,
            current: None,
            next_row: 0,
            rows_read: 0,
        })
    }

    /// Every row of the dataset with all columns, in storage order.
    pub fn read_all(&self, handle: &DatasetHandle) -> Result<Vec<Row>> {
        let mut out = Vec::with_capacity(handle.total_rows as usize);
        for i in 0..handle.partitions.len() {
            out.extend(self.read_partition(handle, i)?.iter().cloned());
        }
        Ok(out)
    }
}

/// Min and max of a column folded from partition metadata, without reading rows.
pub fn dataset_min_max(
    handle: &DatasetHandle,
    column: &str,
) -> Result<(Option<Value>, Option<Value>)> {
    handle.require_column(column)?;
    let mut min: Option<&Value> = None;
    let mut max: Option<&Value> = None;
    for part in &handle.partitions {
        let Some(stats) = part.stats.get(column) else {
            continue;
        };
        if let Some(m) = &stats.min {
            if min.is_none_or(|cur| m.try_cmp(cur).is_ok_and(|o| o.is_lt())) {
                min = Some(m);
            }
        }
        if let Some(m) = &stats.max {
            if max.is_none_or(|cur| m.try_cmp(cur).is_ok_and(|o| o.is_gt())) {
                max = Some(m);
            }
        }
    }
    Ok((min.cloned(), max.cloned()))
}

pub struct Scan<'a> {
    lake: &'a Lake,
    handle: &'a DatasetHandle,
    projection: Vec<usize>,
    partitions: Vec<usize>,
    next_partition: usize,
    current: Option<Arc<Vec<Row>>>,
    next_row: usize,
    rows_read: u64,
}

impl Scan<'_> {
    /// Rows read so far by this scan.
    pub fn rows_read(&self) -> u64 {
        self.rows_read
    }

    /// Number of partitions this scan will visit.
    pub fn partition_count(&self) -> usize {
        self.partitions.len()
    }
}

impl Iterator for Scan<'_> {
    type Item = Result<Row>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(rows) = &self.current {
                if let Some(row) = rows.get(self.next_row) {
                    self.next_row += 1;
                    return Some(Ok(self.projection.iter().map(|&i| row[i].clone()).collect()));
                }
                self.current = None;
            }
            let &part = self.partitions.get(self.next_partition)?;
            self.next_partition += 1;
            match self.lake.read_partition(self.handle, part) {
                Ok(rows) => {
                    self.rows_read += rows.len() as u64;
                    self.current = Some(rows);
                    self.next_row = 0;
                }
                Err(e) => {
                    self.next_partition = self.partitions.len();
                    return Some(Err(e));
                }
            }
        }
    }
}

type PartitionMap = HashMap<(String, u32), Arc<Vec<Row>>>;

struct PartitionCache {
    budget: u64,
    inner: Mutex<(u64, PartitionMap)>,
}

impl PartitionCache {
    fn new(budget: u64) -> Self {
        PartitionCache {
            budget,
            inner: Mutex::new((0, HashMap::new())),
        }
    }

    fn get(&self, name: &str, id: u32) -> Option<Arc<Vec<Row>>> {
        if self.budget == 0 {
            return None;
        }
        self.inner.lock().unwrap().1.get(&(name.to_string(), id)).cloned()
    }

    fn put(&self, name: &str, id: u32, rows: Arc<Vec<Row>>) {
        let mut inner = self.inner.lock().unwrap();
        let size = rows.len() as u64;
        if inner.0 + size > self.budget {
            return;
        }
        if inner.1.insert((name.to_string(), id), rows).is_none() {
            inner.0 += size;
        }
    }

    fn forget(&self, name: &str) {
        let mut inner = self.inner.lock().unwrap();
        let mut freed = 0;
        inner.1.retain(|(n, _), rows| {
            let keep = n != name;
            if !keep {
                freed += rows.len() as u64;
            }
            keep
        });
        inner.0 -= freed;
    }
}

fn write_dataset(
    dir: &Path,
    name: &str,
    columns: Vec<ColumnDef>,
    rows: &[Row],
    partition_rows: usize,
) -> Result<DatasetHandle> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut partitions = Vec::new();
    let mut total_bytes = 0u64;
    for (id, chunk) in rows.chunks(partition_rows).enumerate() {
        let mut builders: Vec<StatsBuilder> = columns.iter().map(|_| StatsBuilder::default()).collect();
        for row in chunk {
            for (b, v) in builders.iter_mut().zip(row) {
                b.observe(v);
            }
        }
        let bytes = payload::encode_rows(chunk);
        let file = format!("part-{id:05}.bin");
        let path = dir.join(&file);
        fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
        total_bytes += bytes.len() as u64;
        partitions.push(Partition {
            id: id as u32,
            row_count: chunk.len() as u64,
            file,
            stats: columns
                .iter()
                .zip(builders)
                .map(|(c, b)| (c.path.clone(), b.finish()))
                .collect(),
        });
    }
    let handle = DatasetHandle {
        name: name.to_string(),
        columns,
        partitions,
        total_rows: rows.len() as u64,
        total_bytes,
    };
    let path = dir.join(MANIFEST);
    fs::write(&path, handle.to_json()?).map_err(|e| Error::io(&path, e))?;
    Ok(handle)
}

fn validate_name(name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && !name.starts_with('.')
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "dataset name `{name}` must be nonempty ASCII letters, digits, `_`, `-` or `.`, not starting with `.`"
        )))
    }
}

fn check_partition_rows(partition_rows: usize) -> Result<()> {
    if partition_rows == 0 {
        return Err(Error::InvalidParameter("partition_rows must be at least 1".into()));
    }
    Ok(())
}

pub(crate) fn validate_columns(columns: &[ColumnDef]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for c in columns {
        if c.path.is_empty() || c.path.chars().any(char::is_whitespace) {
            return Err(Error::Schema(format!(
                "column path `{}` is empty or contains whitespace",
                c.path
            )));
        }
        if !seen.insert(c.path.as_str()) {
            return Err(Error::Schema(format!("duplicate column path `{}`", c.path)));
        }
    }
    Ok(())
}

fn validate_rows(columns: &[ColumnDef], rows: &[Row]) -> Result<()> {
    for (i, row) in rows.iter().enumerate() {
        if row.len() != columns.len() {
            return Err(Error::Schema(format!(
                "row {i} has {} values for {} columns",
                row.len(),
                columns.len()
            )));
        }
        for (c, v) in columns.iter().zip(row) {
            if let Some(ty) = v.value_type() {
                if ty != c.ty {
                    return Err(Error::TypeMismatch {
                        left: c.ty,
                        right: ty,
                    });
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::ValueType;

    fn int_rows(values: &[i64]) -> Vec<Row> {
        values.iter().map(|&v| vec![Value::Int(v)]).collect()
    }

    #[test]
    fn partitions_respect_row_cap() {
        let dir = tempfile::tempdir().unwrap();
        let lake = Lake::open(dir.path()).unwrap();
        let h = lake
            .create_dataset("d", vec![ColumnDef::new("t", ValueType::Integer)], &int_rows(&[1, 2, 3]), 2)
            .unwrap();
        assert_eq!(h.partitions.len(), 2);
        assert_eq!(h.total_rows, 3);
        let on_disk: u64 = h
            .partitions
            .iter()
            .map(|p| fs::metadata(dir.path().join("d").join(&p.file)).unwrap().len())
            .sum();
        assert_eq!(h.total_bytes, on_disk);
    }

    #[test]
    fn filtered_scan_reads_one_disjoint_partition() {
        let dir = tempfile::tempdir().unwrap();
        let lake = Lake::open(dir.path()).unwrap();
        let values: Vec<i64> = (1..=15).collect();
        let h = lake
            .create_dataset("d", vec![ColumnDef::new("t", ValueType::Integer)], &int_rows(&values), 5)
            .unwrap();
        let ten = Value::Int(10);
        let filter = |p: &Partition| {
            let s = &p.stats["t"];
            s.min.as_ref().unwrap().try_cmp(&ten).unwrap().is_le()
                && ten.try_cmp(s.max.as_ref().unwrap()).unwrap().is_le()
        };
        let mut scan = lake.scan(&h, &["t"], Some(&filter)).unwrap();
        assert_eq!(scan.partition_count(), 1);
        let rows: Vec<Row> = scan.by_ref().collect::<Result<_>>().unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(scan.rows_read(), 5);

        let none = |_: &Partition| false;
        let mut empty = lake.scan(&h, &["t"], Some(&none)).unwrap();
        assert!(empty.next().is_none());
        assert_eq!(empty.rows_read(), 0);

        let before = lake.rows_scanned();
        let all = lake.scan(&h, &["t"], None).unwrap().count();
        assert_eq!(all, 15);
        assert_eq!(lake.rows_scanned() - before, 15);
    }

    #[test]
    fn unknown_column_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let lake = Lake::open(dir.path()).unwrap();
        let h = lake
            .create_dataset("d", vec![ColumnDef::new("t", ValueType::Integer)], &int_rows(&[1]), 5)
            .unwrap();
        assert!(matches!(lake.scan(&h, &["nope"], None), Err(Error::UnknownColumn { .. })));
        assert!(matches!(dataset_min_max(&h, "nope"), Err(Error::UnknownColumn { .. })));
    }

    #[test]
    fn min_max_folds_partitions() {
        let dir = tempfile::tempdir().unwrap();
        let lake = Lake::open(dir.path()).unwrap();
        // Partition ranges [3,9], [1,4], [7,8].
        let h = lake
            .create_dataset(
                "d",
                vec![ColumnDef::new("t", ValueType::Integer)],
                &int_rows(&[3, 9, 1, 4, 7, 8]),
                2,
            )
            .unwrap();
        let (min, max) = dataset_min_max(&h, "t").unwrap();
        assert_eq!((min, max), (Some(Value::Int(1)), Some(Value::Int(9))));
        assert_eq!(lake.rows_scanned(), 0);
    }

    #[test]
    fn all_null_column_has_no_range() {
        let dir = tempfile::tempdir().unwrap();
        let lake = Lake::open(dir.path()).unwrap();
        let rows = vec![vec![Value::Null], vec![Value::Null]];
        let h = lake
            .create_dataset("d", vec![ColumnDef::new("t", ValueType::Float)], &rows, 1)
            .unwrap();
        assert_eq!(dataset_min_max(&h, "t").unwrap(), (None, None));
    }

    #[test]
    fn duplicate_name_conflicts() {
        let dir = tempfile::tempdir().unwrap();
        let lake = Lake::open(dir.path()).unwrap();
        let cols = vec![ColumnDef::new("t", ValueType::Integer)];
        lake.create_dataset("d", cols.clone(), &int_rows(&[1]), 5).unwrap();
        assert!(matches!(
            lake.create_dataset("d", cols, &int_rows(&[2]), 5),
            Err(Error::Conflict(_))
        ));
    }

    #[test]
    fn replace_and_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let cols = vec![ColumnDef::new("t", ValueType::Integer)];
        {
            let lake = Lake::open(dir.path()).unwrap();
            lake.create_dataset("d", cols.clone(), &int_rows(&[1]), 5).unwrap();
            let h = lake.dataset("d").unwrap();
            assert_eq!(lake.read_all(&h).unwrap(), int_rows(&[1]));
            lake.replace_dataset("d", cols, &int_rows(&[4, 5]), 5).unwrap();
            let h = lake.dataset("d").unwrap();
            assert_eq!(lake.read_all(&h).unwrap(), int_rows(&[4, 5]));
        }
        let lake = Lake::open(dir.path()).unwrap();
        assert_eq!(lake.names(), vec!["d".to_string()]);
        assert_eq!(lake.dataset("d").unwrap().total_rows, 2);
        lake.remove_dataset("d").unwrap();
        assert!(lake.datasets().is_empty());
        assert!(matches!(lake.remove_dataset("d"), Err(Error::UnknownDataset(_))));
    }

    #[test]
    fn rows_must_match_declared_types() {
        let dir = tempfile::tempdir().unwrap();
        let lake = Lake::open(dir.path()).unwrap();
        let err = lake
            .create_dataset(
                "d",
                vec![ColumnDef::new("t", ValueType::Integer)],
                &[vec![Value::Text("x".into())]],
                5,
            )
            .unwrap_err();
        assert!(matches!(err, Error::TypeMismatch { .. }));
    }

    #[test]
    fn invalid_names_and_partition_sizes() {
        let dir = tempfile::tempdir().unwrap();
        let lake = Lake::open(dir.path()).unwrap();
        let cols = vec![ColumnDef::new("t", ValueType::Integer)];
        assert!(lake.create_dataset("a b", cols.clone(), &[], 5).is_err());
        assert!(lake.create_dataset("../x", cols.clone(), &[], 5).is_err());
        assert!(lake.create_dataset("ok", cols, &[], 0).is_err());
    }
}
