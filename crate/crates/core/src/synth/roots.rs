// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

//! Bundled root tables, generated procedurally from a seed. Families share
//! generic column names (`id`, `ts`, `value`, `category`) so that schema
//! containment also occurs across families.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use crate::lake::ColumnDef;
use crate::synth::ops::Table;
use crate::synth::zipf_pick;
use crate::value::{Value, ValueType};

pub const FAMILIES: [&str; 6] = ["orders", "sensors", "users", "products", "trips", "metrics"];

/// 2023-01-01T00:00:00Z in microseconds.
const EPOCH_2023: i64 = 1_672_531_200_000_000;
const MINUTE: i64 = 60_000_000;

const CATEGORIES: [&str; 8] = ["books", "garden", "toys", "audio", "kitchen", "sports", "office", "beauty"];
const COUNTRIES: [&str; 12] = ["AR", "BR", "CA", "DE", "ES", "FR", "IN", "IT", "JP", "NL", "SE", "US"];

enum Gen {
    Serial,
    ZipfInt(usize),
    UniformInt(i64, i64),
    Minutes(i64),
    Choice(&'static [&'static str]),
    Label(&'static str, usize),
    Money(f64),
    Gauss(f64, f64),
}

fn column(path: &str, gen: &Gen) -> ColumnDef {
    let ty = match gen {
        Gen::Serial | Gen::ZipfInt(_) | Gen::UniformInt(..) => ValueType::Integer,
        Gen::Minutes(_) => ValueType::Timestamp,
        Gen::Choice(_) | Gen::Label(..) => ValueType::Text,
        Gen::Money(_) | Gen::Gauss(..) => ValueType::Float,
    };
    ColumnDef::new(path, ty)
}

fn cell(gen: &Gen, row: usize, rng: &mut ChaCha8Rng) -> Value {
    match gen {
        Gen::Serial => Value::Int(row as i64 + 1),
        Gen::ZipfInt(n) => Value::Int(zipf_pick(*n, 1.1, rng) as i64 + 1),
        Gen::UniformInt(lo, hi) => Value::Int(rng.random_range(*lo..=*hi)),
        Gen::Minutes(span) => Value::Timestamp(EPOCH_2023 + rng.random_range(0..*span) * MINUTE),
        Gen::Choice(options) => Value::Text(options[zipf_pick(options.len(), 0.8, rng)].to_string()),
        Gen::Label(prefix, n) => Value::Text(format!("{prefix}-{:03}", rng.random_range(0..*n))),
        Gen::Money(median) => {
            let d = LogNormal::new(median.ln(), 0.6).expect("valid lognormal");
            Value::Float((d.sample(rng) * 100.0).round() / 100.0)
        }
        Gen::Gauss(mean, sd) => {
            let d = Normal::new(*mean, *sd).expect("valid normal");
            Value::Float((d.sample(rng) * 10.0).round() / 10.0)
        }
    }
}

fn spec(family: &str) -> Vec<(&'static str, Gen, f64)> {
    use Gen::*;
    // (path, generator, null fraction)
    match family {
        "orders" => vec![
            ("id", Serial, 0.0),
            ("customer_id", ZipfInt(300), 0.0),
            ("ts", Minutes(525_600), 0.0),
            ("category", Choice(&CATEGORIES), 0.0),
            ("value", Money(40.0), 0.0),
            ("qty", UniformInt(1, 20), 0.0),
        ],
        "sensors" => vec![
            ("id", Serial, 0.0),
            ("ts", Minutes(200_000), 0.0),
            ("device", Label("dev", 40), 0.0),
            ("value", Gauss(50.0, 12.0), 0.0),
            ("temperature", Gauss(20.0, 5.0), 0.02),
        ],
        "users" => vec![
            ("id", Serial, 0.0),
            ("name", Label("user", 900), 0.0),
            ("country", Choice(&COUNTRIES), 0.0),
            ("signup", Minutes(1_000_000), 0.0),
            ("age", UniformInt(18, 90), 0.03),
            ("score", Gauss(600.0, 90.0), 0.0),
        ],
        "products" => vec![
            ("id", Serial, 0.0),
            ("category", Choice(&CATEGORIES), 0.0),
            ("product.name", Label("sku", 999), 0.0),
            ("product.brand", Label("brand", 15), 0.0),
            ("product.price", Money(25.0), 0.0),
            ("stock", UniformInt(0, 500), 0.0),
        ],
        "trips" => vec![
            ("id", Serial, 0.0),
            ("ts", Minutes(300_000), 0.0),
            ("zone", Label("zone", 30), 0.0),
            ("distance", Gauss(8.0, 3.0), 0.0),
            ("fare", Money(18.0), 0.0),
            ("value", Money(20.0), 0.0),
        ],
        _ => vec![
            ("id", Serial, 0.0),
            ("ts", Minutes(400_000), 0.0),
            ("value", Gauss(45.0, 15.0), 0.01),
        ],
    }
}

/// Generates the root table for `family` with `rows` rows.
pub fn root_table(name: &str, family: &str, rows: usize, rng: &mut ChaCha8Rng) -> Table {
    let spec = spec(family);
    let columns = spec.iter().map(|(p, g, _)| column(p, g)).collect();
    let rows = (0..rows)
        .map(|i| {
            spec.iter()
                .map(|(_, g, nulls)| {
                    if *nulls > 0.0 && rng.random_bool(*nulls) {
                        Value::Null
                    } else {
                        cell(g, i, rng)
                    }
                })
                .collect()
        })
        .collect();
    Table {
        name: name.to_string(),
        columns,
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn roots_are_typed_and_sized() {
        for family in FAMILIES {
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let t = root_table(family, family, 300, &mut rng);
            assert_eq!(t.rows.len(), 300);
            for row in &t.rows {
                for (c, v) in t.columns.iter().zip(row) {
                    assert!(v.value_type().is_none_or(|ty| ty == c.ty));
                }
            }
        }
    }

    #[test]
    fn metrics_schema_sits_inside_other_families() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = root_table("m", "metrics", 1, &mut rng);
        let o = root_table("o", "orders", 1, &mut rng);
        assert!(m.columns.iter().all(|c| o.column_index(&c.path).is_some()));
    }
}
