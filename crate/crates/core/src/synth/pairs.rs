// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

//! Single parent/child pairs with known containment, for soundness and
//! detection-rate experiments.

use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::lake::{ColumnDef, Row};
use crate::synth::ops::Table;
use crate::value::{Value, ValueType};

const NAMES: [&str; 9] = ["id", "a", "b", "c.x", "c.y", "ts", "label", "score", "d.e.f"];
const WORDS: [&str; 7] = ["ash", "birch", "cedar", "elm", "fir", "oak", "yew"];
const TYPES: [ValueType; 4] = [ValueType::Integer, ValueType::Float, ValueType::Text, ValueType::Timestamp];

fn random_value(ty: ValueType, rng: &mut ChaCha8Rng) -> Value {
    match ty {
        ValueType::Integer => Value::Int(rng.random_range(-20..60)),
        ValueType::Float => Value::Float(f64::from(rng.random_range(-400..400)) / 8.0),
        ValueType::Text => Value::Text((*WORDS.choose(rng).expect("non-empty")).to_string()),
        ValueType::Timestamp => Value::Timestamp(1_600_000_000_000_000 + rng.random_range(0..500) * 1_000_000),
    }
}

/// A random parent and a child made of a column subset (in shuffled order) and
/// rows drawn with replacement from the parent, so the child is contained.
/// Small value domains make partition ranges overlap heavily.
pub fn contained_pair(rng: &mut ChaCha8Rng) -> (Table, Table) {
    let width = rng.random_range(1..=6);
    let names: Vec<&str> = NAMES.choose_multiple(rng, width).copied().collect();
    let columns: Vec<ColumnDef> = names
        .iter()
        .map(|n| ColumnDef::new(*n, *TYPES.choose(rng).expect("non-empty")))
        .collect();
    let null_rate: Vec<f64> = (0..width)
        .map(|_| match rng.random_range(0..20) {
            0 => 1.0,
            1..=6 => 0.2,
            _ => 0.0,
        })
        .collect();
    let n = rng.random_range(1..=400);
    let rows: Vec<Row> = (0..n)
        .map(|_| {
            columns
                .iter()
                .zip(&null_rate)
                .map(|(c, &p)| if rng.random_bool(p) { Value::Null } else { random_value(c.ty, rng) })
                .collect()
        })
        .collect();
    let parent = Table {
        name: "parent".into(),
        columns,
        rows,
    };

    let keep = rng.random_range(1..=width);
    let mut picked: Vec<usize> = index::sample(rng, width, keep).into_vec();
    picked.shuffle(rng);
    let m = rng.random_range(0..=n.min(200));
    let child_rows = (0..m)
        .map(|_| {
            let r = &parent.rows[rng.random_range(0..n)];
            picked.iter().map(|&i| r[i].clone()).collect()
        })
        .collect();
    let child = Table {
        name: "child".into(),
        columns: picked.iter().map(|&i| parent.columns[i].clone()).collect(),
        rows: child_rows,
    };
    (parent, child)
}

/// A child of `child_rows` distinct rows of which exactly `contained` appear in
/// the parent. The parent holds every child key, but the missing rows carry a
/// different value, so key ranges and metadata look identical.
pub fn partial_pair(child_rows: usize, contained: usize, rng: &mut ChaCha8Rng) -> (Table, Table) {
    assert!(contained <= child_rows, "cannot contain more rows than the child has");
    let columns = vec![ColumnDef::new("id", ValueType::Integer), ColumnDef::new("value", ValueType::Integer)];
    let child: Vec<Row> = (0..child_rows as i64)
        .map(|i| vec![Value::Int(i), Value::Int(rng.random_range(0..1000))])
        .collect();
    let mut inside = vec![false; child_rows];
    for i in index::sample(rng, child_rows, contained) {
        inside[i] = true;
    }
    let mut parent: Vec<Row> = child
        .iter()
        .zip(&inside)
        .map(|(r, &ok)| {
            if ok {
                r.clone()
            } else {
                let Value::Int(v) = r[1] else { unreachable!() };
                vec![r[0].clone(), Value::Int(v + 1000)]
            }
        })
        .collect();
    parent.shuffle(rng);
    (
        Table {
            name: "parent".into(),
            columns: columns.clone(),
            rows: parent,
        },
        Table {
            name: "child".into(),
            columns,
            rows: child,
        },
    )
}
