// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

//! Splits an instance into components that are simple directed paths and the
//! rest. Detection works on whole weakly connected components: a path embedded
//! in a larger component shares nodes with edges outside it and cannot be
//! solved in isolation.

use super::opt_ret::components;
use super::{subinstance, Instance};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LineDecomposition {
    /// Each line in source-to-sink order.
    pub lines: Vec<Vec<usize>>,
    /// Nodes of all other components, sorted.
    pub residual: Vec<usize>,
}

/// Path order when the instance is a single directed path (a lone node counts).
pub(crate) fn line_order(instance: &Instance) -> Option<Vec<usize>> {
    let n = instance.len();
    if n == 0 || instance.edge_count() != n - 1 {
        return None;
    }
    let mut next = vec![None; n];
    let mut source = None;
    for (v, ps) in instance.parents.iter().enumerate() {
        match ps.as_slice() {
            [] if source.is_none() => source = Some(v),
            [(p, _)] if next[*p].is_none() => next[*p] = Some(v),
            _ => return None,
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut cur = source;
    while let Some(v) = cur {
        order.push(v);
        cur = next[v];
    }
    (order.len() == n).then_some(order)
}

pub fn detect_line_graphs(instance: &Instance) -> LineDecomposition {
    let mut out = LineDecomposition::default();
    for comp in components(instance) {
        let (sub, map) = subinstance(instance, &comp);
        match line_order(&sub) {
            Some(order) => out.lines.push(order.into_iter().map(|v| map[v]).collect()),
            None => out.residual.extend(comp),
        }
    }
    out.residual.sort_unstable();
    out
}
