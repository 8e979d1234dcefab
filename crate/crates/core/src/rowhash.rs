// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

//! Set membership over projected rows keyed by a 128-bit hash of their tagged
//! encoding. Colliding keys are disambiguated by comparing the full encoding.

use std::collections::HashMap;

use xxhash_rust::xxh3::xxh3_128;

use crate::value::Value;

/// Encodes the values of `row` at `indices` into `out` (cleared first).
pub fn encode_projection(row: &[Value], indices: &[usize], out: &mut Vec<u8>) {
    out.clear();
    for &i in indices {
        row[i].encode_into(out);
    }
}

#[derive(Debug, Default, Clone)]
pub struct RowSet {
    buckets: HashMap<u128, Vec<Box<[u8]>>>,
    len: usize,
}

impl RowSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts an encoded row; returns false if it was already present.
    pub fn insert(&mut self, key: &[u8]) -> bool {
        let bucket = self.buckets.entry(xxh3_128(key)).or_default();
        if bucket.iter().any(|k| &k[..] == key) {
            return false;
        }
        bucket.push(key.into());
        self.len += 1;
        true
    }

    pub fn contains(&self, key: &[u8]) -> bool {
        self.buckets
            .get(&xxh3_128(key))
            .is_some_and(|b| b.iter().any(|k| &k[..] == key))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u8]> {
        self.buckets.values().flatten().map(|k| &k[..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_rows_counted_once() {
        let mut set = RowSet::new();
        let mut buf = Vec::new();
        let rows = [
            vec![Value::Int(1), Value::Text("x".into())],
            vec![Value::Int(1), Value::Text("x".into())],
            vec![Value::Int(1), Value::Text("y".into())],
        ];
        for r in &rows {
            encode_projection(r, &[0, 1], &mut buf);
            set.insert(&buf);
        }
        assert_eq!(set.len(), 2);
    }

    #[test]
    fn framing_separates_adjacent_cells() {
        // ("ab","c") and ("a","bc") share a naive concatenation.
        let mut a = Vec::new();
        let mut b = Vec::new();
        encode_projection(&[Value::Text("ab".into()), Value::Text("c".into())], &[0, 1], &mut a);
        encode_projection(&[Value::Text("a".into()), Value::Text("bc".into())], &[0, 1], &mut b);
        let mut set = RowSet::new();
        set.insert(&a);
        assert!(!set.contains(&b));
    }

    #[test]
    fn tags_distinguish_equal_renderings() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        encode_projection(&[Value::Int(5)], &[0], &mut a);
        encode_projection(&[Value::Text("5".into())], &[0], &mut b);
        assert_ne!(a, b);
    }
}
