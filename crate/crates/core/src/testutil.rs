//! Enumeration and quadrature helpers for oracle tests.

use std::collections::HashMap;

use rand::Rng;

use crate::data::RelationData;
use crate::partition::Partition;
use crate::seed::rng_from_seed;

/// All set partitions of `n` entities as restricted growth strings.
pub fn enumerate_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for label in 0..=max + 1 {
            prefix.push(label);
            rec(prefix, max.max(label), n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut vec![0], 0, n, &mut out);
    out
}

/// Uniformly random cells, each observed with probability `observed`.
pub fn random_data(n: usize, observed: f64, seed: u64) -> RelationData {
    let mut rng = rng_from_seed(seed);
    let cells = (0..n * n).map(|_| rng.random_range(0..2u8)).collect();
    let mask = (0..n * n).map(|_| rng.random::<f64>() < observed).collect();
    RelationData::new(n, cells).unwrap().with_mask(mask).unwrap()
}

pub fn total_variation(exact: &[(Partition, f64)], freq: &HashMap<Partition, f64>) -> f64 {
    let covered: f64 = exact
        .iter()
        .map(|(p, w)| (w - freq.get(p).copied().unwrap_or(0.0)).abs())
        .sum();
    let stray: f64 = freq
        .iter()
        .filter(|(p, _)| !exact.iter().any(|(q, _)| q == *p))
        .map(|(_, w)| w)
        .sum();
    0.5 * (covered + stray)
}

/// Evenly spaced points in `ln x` over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|k| a + (b - a) * k as f64 / (points - 1) as f64)
        .collect()
}

/// Trapezoid rule for `int exp(log_f(x)) dx` on a grid in `u = ln x`.
pub fn integrate_log(us: &[f64], log_f: impl Fn(f64) -> f64) -> f64 {
    let vals: Vec<f64> = us.iter().map(|&u| (log_f(u.exp()) + u).exp()).collect();
    us.windows(2)
        .zip(vals.windows(2))
        .map(|(u, v)| 0.5 * (u[1] - u[0]) * (v[0] + v[1]))
        .sum()
}
