// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

//! Synthetic lakes: child tables derived from roots by containment-preserving
//! and containment-breaking transformations, with an exact answer key.

mod mutate;
pub mod ops;
pub mod pairs;
pub mod roots;

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lake::Lake;
pub use mutate::{random_mutation, MutationEvent};
use ops::{OpKind, Table};

/// Draws an index in `0..n` with probability proportional to `(k + 1)^-a`.
///
/// # Panics
/// If `n == 0` or `a` is negative or not finite.
pub fn zipf_pick(n: usize, a: f64, rng: &mut impl Rng) -> usize {
    assert!(n >= 1, "zipf_pick needs a nonempty domain");
    if n == 1 {
        return 0;
    }
    let d = Zipf::new(n as f64, a).expect("valid Zipf parameters");
    (d.sample(rng) as usize).clamp(1, n) - 1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpMix {
    pub filter_sample: f64,
    pub add_rows: f64,
    pub add_columns: f64,
    pub add_noise: f64,
    pub compose: f64,
}

impl Default for OpMix {
    fn default() -> Self {
        OpMix {
            filter_sample: 0.4,
            add_rows: 0.15,
            add_columns: 0.15,
            add_noise: 0.15,
            compose: 0.15,
        }
    }
}

impl OpMix {
    fn weights(&self) -> [(OpKind, f64); 5] {
        [
            (OpKind::FilterSample, self.filter_sample),
            (OpKind::AddRows, self.add_rows),
            (OpKind::AddColumns, self.add_columns),
            (OpKind::AddNoise, self.add_noise),
            (OpKind::Compose, self.compose),
        ]
    }

    fn pick(&self, rng: &mut ChaCha8Rng, base_only: bool) -> OpKind {
        let weights: Vec<(OpKind, f64)> = self
            .weights()
            .into_iter()
            .filter(|(k, _)| !(base_only && *k == OpKind::Compose))
            .collect();
        let total: f64 = weights.iter().map(|w| w.1).sum();
        if total <= 0.0 {
            return OpKind::FilterSample;
        }
        let mut x = rng.random_range(0.0..total);
        for (k, w) in &weights {
            if x < *w {
                return *k;
            }
            x -= w;
        }
        weights.last().expect("nonempty").0
    }
}

/// Generator configuration, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenSpec {
    /// Existing datasets to derive from; empty means bundled roots.
    pub roots: Vec<String>,
    /// Total tables in the lake after generation, roots included.
    pub tables_target: usize,
    pub zipf_exponent: f64,
    pub op_mix: OpMix,
    pub seed: u64,
    /// Number of bundled roots when `roots` is empty.
    pub root_count: usize,
    /// Typical bundled root size; each root varies by up to 30%.
    pub root_rows: usize,
    pub partition_rows: usize,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            roots: Vec::new(),
            tables_target: 150,
            zipf_exponent: 1.1,
            op_mix: OpMix::default(),
            seed: 0,
            root_count: 6,
            root_rows: 1500,
            partition_rows: 200,
        }
    }
}

impl GenSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: GenSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.op_mix.weights();
        if w.iter().any(|(_, p)| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Config("op_mix probabilities must be nonnegative".into()));
        }
        let sum: f64 = w.iter().map(|(_, p)| p).sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Config(format!("op_mix must sum to 1, got {sum}")));
        }
        if !(self.zipf_exponent.is_finite() && self.zipf_exponent > 0.0) {
            return Err(Error::Config("zipf_exponent must be positive".into()));
        }
        let roots = if self.roots.is_empty() { self.root_count } else { self.roots.len() };
        if roots == 0 {
            return Err(Error::Config("at least one root is required".into()));
        }
        if self.tables_target < roots {
            return Err(Error::Config(format!(
                "tables_target {} is below the {roots} roots",
                self.tables_target
            )));
        }
        if self.partition_rows == 0 || self.root_rows < 10 {
            return Err(Error::Config("partition_rows must be >= 1 and root_rows >= 10".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineageRecord {
    pub child: String,
    pub parent: String,
    pub ops: Vec<OpKind>,
    /// Whether every applied op preserves containment in the parent.
    pub declared_contained: bool,
    /// Exact containment of the child in the parent, checked at generation.
    pub truth_contained: bool,
    /// Exact containment of the parent in the child, when the schemas allow it.
    pub parent_in_child: Option<bool>,
}

#[derive(Debug, Clone, Default)]
pub struct GenOutput {
    /// Datasets created, in creation order (bundled roots first).
    pub datasets: Vec<String>,
    pub lineage: Vec<LineageRecord>,
}

/// Attempts before giving up on deriving a child from a chosen parent.
const OP_ATTEMPTS: usize = 8;

pub fn generate(lake: &Lake, spec: &GenSpec) -> Result<GenOutput> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut tables: Vec<(Table, String)> = Vec::new();
    let mut out = GenOutput::default();

    if spec.roots.is_empty() {
        for i in 0..spec.root_count {
            let family = roots::FAMILIES[i % roots::FAMILIES.len()];
            let name = match i / roots::FAMILIES.len() {
                0 => family.to_string(),
                k => format!("{family}{}", k + 1),
            };
            let lo = spec.root_rows * 7 / 10;
            let hi = spec.root_rows * 13 / 10;
            let rows = rng.random_range(lo..=hi);
            tables.push((roots::root_table(&name, family, rows, &mut rng), name));
        }
    } else {
        for name in &spec.roots {
            let h = lake.dataset(name)?;
            let table = Table {
                name: name.clone(),
                columns: h.columns.clone(),
                rows: lake.read_all(&h)?,
            };
            tables.push((table, name.clone()));
        }
    }
    let root_count = tables.len();

    let mut seq = 0usize;
    let mut stalls = 0usize;
    while tables.len() < spec.tables_target {
        let parent_idx = zipf_pick(tables.len(), spec.zipf_exponent, &mut rng);
        let (parent, family) = &tables[parent_idx];
        let Some((child, kinds)) = derive(parent, &spec.op_mix, &mut rng) else {
            stalls += 1;
            if stalls > 1000 * spec.tables_target {
                return Err(Error::Internal("generator cannot derive further tables".into()));
            }
            continue;
        };
        seq += 1;
        let name = format!("{family}_{seq:04}");
        let child = Table { name: name.clone(), ..child };
        let record = LineageRecord {
            child: name.clone(),
            parent: parent.name.clone(),
            declared_contained: kinds.iter().all(|k| k.preserves_containment()),
            truth_contained: ops::table_contained(&child, parent) == Some(true),
            parent_in_child: ops::table_contained(parent, &child),
            ops: kinds,
        };
        out.lineage.push(record);
        let family = family.clone();
        tables.push((child, family));
    }

    let skip = if spec.roots.is_empty() { 0 } else { root_count };
    for (table, _) in tables.into_iter().skip(skip) {
        lake.create_dataset(&table.name, table.columns, &table.rows, spec.partition_rows)?;
        out.datasets.push(table.name);
    }
    Ok(out)
}

/// Applies one randomly chosen op (or a composition of 2-3) to `parent`.
fn derive(parent: &Table, mix: &OpMix, rng: &mut ChaCha8Rng) -> Option<(Table, Vec<OpKind>)> {
    for _ in 0..OP_ATTEMPTS {
        let kind = mix.pick(rng, false);
        let result = if kind == OpKind::Compose {
            let steps = rng.random_range(2..=3);
            let mut current = parent.clone();
            let mut kinds = Vec::new();
            for _ in 0..steps {
                let step = mix.pick(rng, true);
                if let Some(next) = apply(&current, step, rng) {
                    current = next;
                    kinds.push(step);
                }
            }
            (kinds.len() >= 2).then_some((current, kinds))
        } else {
            apply(parent, kind, rng).map(|t| (t, vec![kind]))
        };
        if result.is_some() {
            return result;
        }
    }
    None
}

fn apply(t: &Table, kind: OpKind, rng: &mut ChaCha8Rng) -> Option<Table> {
    let with_rows = |rows| Table {
        name: t.name.clone(),
        columns: t.columns.clone(),
        rows,
    };
    match kind {
        OpKind::FilterSample => ops::filter_sample(t, rng).map(with_rows),
        OpKind::AddRows => (!t.rows.is_empty()).then(|| with_rows(ops::add_rows(t, rng))),
        OpKind::AddNoise => ops::add_noise(t, rng).map(with_rows),
        OpKind::AddColumns => ops::add_columns(t, rng).map(|(columns, rows)| Table {
            name: t.name.clone(),
            columns,
            rows,
        }),
        OpKind::Compose => None,
    }
}

pub fn write_lineage(path: &Path, records: &[LineageRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::json("lineage", e))?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
