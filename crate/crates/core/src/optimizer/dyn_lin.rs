// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

//! Linear-time planning for a directed path `v0 -> v1 -> ... -> v(N-1)`.
//!
//! With `best[i]` the optimum over the first `i + 1` nodes:
//!
//! ```text
//! best[0] = R0
//! best[1] = R0 + min(R1, P1)
//! best[i] = min(Ri + best[i-1], Pi + R(i-1) + best[i-2])
//! ```
//!
//! where `Pi` is the cost of rebuilding `vi` from `v(i-1)`. Deleting `vi`
//! forces `v(i-1)` to be kept, which is what the second branch pays for.

use super::lines::line_order;
use super::{Instance, RetentionPlan, Solution};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DynLinResult {
    pub retained: Vec<bool>,
    pub objective: f64,
    /// Recurrence evaluations plus backtracking steps.
    pub ops: u64,
}

/// Solves a path given per-node retention costs and, for `i >= 1`, the cost
/// `penalty[i]` of rebuilding node `i` from node `i - 1`. `penalty[0]` is unused.
pub fn dyn_lin(retention: &[f64], penalty: &[f64]) -> DynLinResult {
    let n = retention.len();
    assert_eq!(penalty.len(), n, "one penalty slot per node");
    if n == 0 {
        return DynLinResult { retained: vec![], objective: 0.0, ops: 0 };
    }
    let mut best = vec![0.0; n];
    let mut delete = vec![false; n];
    let mut ops = 0u64;
    best[0] = retention[0];
    for i in 1..n {
        ops += 1;
        let keep = retention[i] + best[i - 1];
        let drop = if i == 1 {
            penalty[1] + retention[0]
        } else {
            penalty[i] + retention[i - 1] + best[i - 2]
        };
        // Ties keep the node.
        if drop < keep {
            best[i] = drop;
            delete[i] = true;
        } else {
            best[i] = keep;
        }
    }
    let mut retained = vec![true; n];
    let mut i = n - 1;
    while i > 0 {
        ops += 1;
        if delete[i] {
            retained[i] = false;
            if i == 1 {
                break;
            }
            i -= 2;
        } else {
            i -= 1;
        }
    }
    DynLinResult { retained, objective: best[n - 1], ops }
}

/// Solves an instance whose edges form a single directed path.
pub fn solve_dyn_lin(instance: &Instance) -> Result<(RetentionPlan, u64)> {
    let order = line_order(instance)
        .ok_or_else(|| Error::Structure("graph is not a single directed path".into()))?;
    let retention: Vec<f64> = order.iter().map(|&v| instance.retention[v]).collect();
    let penalty: Vec<f64> = order
        .iter()
        .enumerate()
        .map(|(i, &v)| if i == 0 { 0.0 } else { instance.parents[v][0].1 })
        .collect();
    let r = dyn_lin(&retention, &penalty);
    let mut retained = vec![true; instance.len()];
    let mut via = vec![None; instance.len()];
    for (i, &v) in order.iter().enumerate() {
        if !r.retained[i] {
            retained[v] = false;
            via[v] = Some(order[i - 1]);
        }
    }
    let objective = instance.check(&retained, &via)?;
    let sol = Solution { retained, via, objective, work: r.ops };
    Ok((RetentionPlan::from_solution(instance, &sol), r.ops))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(retention: &[f64], penalty: &[f64]) -> f64 {
        let n = retention.len();
        let mut best = f64::INFINITY;
        'mask: for mask in 0u32..(1 << n) {
            let keep = |i: usize| mask >> i & 1 == 1;
            let mut c = 0.0;
            for i in 0..n {
                if keep(i) {
                    c += retention[i];
                } else if i > 0 && keep(i - 1) {
                    c += penalty[i];
                } else {
                    continue 'mask;
                }
            }
            best = f64::min(best, c);
        }
        best
    }

    #[test]
    fn random_lines_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let n = rng.random_range(1..=15);
            let retention: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
            let penalty: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
            let r = dyn_lin(&retention, &penalty);
            let expect = brute(&retention, &penalty);
            assert!((r.objective - expect).abs() < 1e-9, "{} vs {expect}", r.objective);
            assert!(r.retained[0]);
            for i in 1..n {
                assert!(r.retained[i] || r.retained[i - 1]);
            }
            assert!(r.ops <= 2 * n as u64);
        }
    }

    #[test]
    fn two_node_line() {
        let r = dyn_lin(&[5.0, 10.0], &[0.0, 3.0]);
        assert_eq!(r.retained, vec![true, false]);
        assert_eq!(r.objective, 8.0);
    }

    #[test]
    fn alternating_deletions() {
        let r = dyn_lin(&[1.0, 100.0, 1.0, 100.0, 1.0], &[0.0, 1.0, 50.0, 1.0, 50.0]);
        assert_eq!(r.retained, vec![true, false, true, false, true]);
        assert_eq!(r.objective, 5.0);
    }

    #[test]
    fn rejects_non_line() {
        let inst = Instance {
            names: vec!["a".into(), "b".into(), "c".into()],
            retention: vec![1.0; 3],
            parents: vec![vec![], vec![(0, 1.0)], vec![(0, 1.0)]],
        };
        assert!(solve_dyn_lin(&inst).is_err());
    }
}
