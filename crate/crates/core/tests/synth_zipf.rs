// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

use lakeprune::synth::zipf_pick;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pmf(n: usize, a: f64) -> Vec<f64> {
    let w: Vec<f64> = (1..=n).map(|k| (k as f64).powf(-a)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

fn counts(n: usize, a: f64, draws: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = vec![0.0; n];
    for _ in 0..draws {
        c[zipf_pick(n, a, &mut rng)] += 1.0;
    }
    c
}

fn chi_square(observed: &[f64], p: &[f64], draws: usize) -> f64 {
    observed
        .iter()
        .zip(p)
        .map(|(o, p)| {
            let e = p * draws as f64;
            (o - e) * (o - e) / e
        })
        .sum()
}

#[test]
fn near_zero_exponent_is_almost_uniform() {
    let draws = 100_000;
    let c = counts(10, 0.01, draws, 1);
    // Critical value of chi-square with 9 degrees of freedom at p = 0.001.
    assert!(chi_square(&c, &pmf(10, 0.01), draws) < 27.88);
    assert!(chi_square(&c, &[0.1; 10], draws) < 40.0);
}

#[test]
fn default_exponent_matches_power_law() {
    let draws = 100_000;
    let p = pmf(100, 1.1);
    let c = counts(100, 1.1, draws, 2);
    for (k, (o, p)) in c.iter().zip(&p).enumerate() {
        let e = p * draws as f64;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        assert!((o - e).abs() <= 4.5 * sd, "rank {k}: {o} vs {e:.1}");
    }
    // 99 degrees of freedom, p = 0.001.
    assert!(chi_square(&c, &p, draws) < 148.2);
}

#[test]
fn head_dominates_tail() {
    let c = counts(50, 1.1, 20_000, 3);
    assert!(c[0] > c[1] && c[1] > c[10] && c[10] > c[49]);
}
