// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

//! Exact branch and bound over retain/delete assignments.

use super::{subinstance, Instance, RetentionPlan, Solution};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Open,
    Retain,
    Delete,
}

/// Weakly connected components, each a sorted list of node indices.
pub(crate) fn components(instance: &Instance) -> Vec<Vec<usize>> {
    let n = instance.len();
    let mut root: Vec<usize> = (0..n).collect();
    fn find(root: &mut [usize], mut x: usize) -> usize {
        while root[x] != x {
            root[x] = root[root[x]];
            x = root[x];
        }
        x
    }
    for (v, ps) in instance.parents.iter().enumerate() {
        for &(p, _) in ps {
            let (a, b) = (find(&mut root, v), find(&mut root, p));
            if a != b {
                root[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for v in 0..n {
        let r = find(&mut root, v);
        groups.entry(r).or_default().push(v);
    }
    groups.into_values().collect()
}

pub(crate) fn component_count(instance: &Instance) -> usize {
    components(instance).len()
}

fn improves(candidate: f64, best: f64) -> bool {
    candidate < best - 1e-9 * best.abs().max(1.0)
}

struct Search<'a> {
    inst: &'a Instance,
    state: Vec<State>,
    order: Vec<usize>,
    best: f64,
    best_retained: Vec<bool>,
    nodes: u64,
}

impl Search<'_> {
    /// Valid lower bound on any completion of the current partial assignment,
    /// or infinity when some deleted node already lost every possible parent.
    fn bound(&self) -> f64 {
        let mut total = 0.0;
        for v in 0..self.inst.len() {
            let reach = self.inst.parents[v]
                .iter()
                .filter(|(p, _)| self.state[*p] != State::Delete)
                .map(|(_, w)| *w)
                .fold(f64::INFINITY, f64::min);
            total += match self.state[v] {
                State::Retain => self.inst.retention[v],
                State::Delete => reach,
                State::Open => self.inst.retention[v].min(reach),
            };
            if total.is_infinite() {
                return total;
            }
        }
        total
    }

    fn run(&mut self, depth: usize) {
        self.nodes += 1;
        if !improves(self.bound(), self.best) {
            return;
        }
        let Some(&v) = self.order.get(depth) else {
            let retained: Vec<bool> = self.state.iter().map(|s| *s == State::Retain).collect();
            if let Some((_, cost)) = self.inst.complete(&retained) {
                if improves(cost, self.best) {
                    self.best = cost;
                    self.best_retained = retained;
                }
            }
            return;
        };
        for choice in [State::Retain, State::Delete] {
            self.state[v] = choice;
            self.run(depth + 1);
        }
        self.state[v] = State::Open;
    }
}

/// Retain-all, then delete nodes one at a time while that lowers the cost.
fn greedy(inst: &Instance, order: &[usize]) -> (Vec<bool>, f64) {
    let mut retained = vec![true; inst.len()];
    let mut cost: f64 = inst.retention.iter().sum();
    for &v in order {
        retained[v] = false;
        match inst.complete(&retained) {
            Some((_, c)) if improves(c, cost) => cost = c,
            _ => retained[v] = true,
        }
    }
    (retained, cost)
}

fn solve_component(inst: &Instance) -> Solution {
    let n = inst.len();
    let mut state = vec![State::Open; n];
    for (v, s) in state.iter_mut().enumerate() {
        let cheapest = inst.parents[v].iter().map(|(_, w)| *w).fold(f64::INFINITY, f64::min);
        // Sources cannot be rebuilt. A node no cheaper to rebuild than to keep
        // can be kept without loss, which also keeps it available as a parent.
        if inst.retention[v] <= cheapest {
            *s = State::Retain;
        }
    }
    let mut order: Vec<usize> = (0..n).filter(|&v| state[v] == State::Open).collect();
    order.sort_by(|&a, &b| inst.retention[b].total_cmp(&inst.retention[a]).then(a.cmp(&b)));
    let (mut best_retained, mut best) = greedy(inst, &order);
    for v in 0..n {
        if state[v] == State::Retain {
            best_retained[v] = true;
        }
    }
    if let Some((_, c)) = inst.complete(&best_retained) {
        best = best.min(c);
    }
    let mut search = Search {
        inst,
        state,
        order,
        // Let the search reproduce an incumbent it would find anyway, so the
        // retain-first order decides ties.
        best: best + 1e-9 * best.abs().max(1.0) * 2.0,
        best_retained: best_retained.clone(),
        nodes: 0,
    };
    search.run(0);
    let retained = search.best_retained;
    let (via, objective) = inst.complete(&retained).expect("incumbent is feasible");
    Solution { retained, via, objective, work: search.nodes }
}

/// Exact minimum-cost plan, solved per weakly connected component.
pub fn opt_ret(instance: &Instance) -> Solution {
    let n = instance.len();
    let mut retained = vec![true; n];
    let mut work = 0;
    for comp in components(instance) {
        let (sub, map) = subinstance(instance, &comp);
        let sol = solve_component(&sub);
        work += sol.work;
        for (local, &v) in map.iter().enumerate() {
            retained[v] = sol.retained[local];
        }
    }
    let (via, objective) = instance.complete(&retained).expect("components are feasible");
    Solution { retained, via, objective, work }
}

/// [`opt_ret`] returning a named plan.
pub fn solve_opt_ret(instance: &Instance) -> Result<RetentionPlan> {
    let sol = opt_ret(instance);
    instance.check(&sol.retained, &sol.via)?;
    Ok(RetentionPlan::from_solution(instance, &sol))
}
