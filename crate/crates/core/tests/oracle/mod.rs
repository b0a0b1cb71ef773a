//! Exact answers for tiny instances, by enumeration and quadrature.
//!
//! Nothing here calls the samplers; likelihoods are recomputed from cell
//! counts directly so the oracles stay independent of the code under test.

#![allow(dead_code)]

use rand::Rng;
use relgen::{rng_from_seed, RelationData, StoredSystem};

pub const HYPER_MIN: f64 = 1e-3;
pub const HYPER_MAX: f64 = 1e3;

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

fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln int_lo^hi exp(log_f(x)) dx` by the trapezoid rule in `u = ln x`.
pub fn log_integral(points: usize, log_f: impl Fn(f64) -> f64) -> f64 {
    let (a, b) = (HYPER_MIN.ln(), HYPER_MAX.ln());
    let h = (b - a) / (points - 1) as f64;
    let terms: Vec<f64> = (0..points)
        .map(|k| {
            let u = a + h * k as f64;
            let edge = if k == 0 || k == points - 1 { 0.5f64.ln() } else { 0.0 };
            log_f(u.exp()) + u + edge
        })
        .collect();
    log_sum_exp(&terms) + h.ln()
}

/// Ones and zeros observed for every ordered class pair.
fn pair_counts(data: &RelationData, labels: &[usize]) -> std::collections::HashMap<(usize, usize), (f64, f64)> {
    let mut counts = std::collections::HashMap::new();
    let n = data.n_entities();
    for i in 0..n {
        for j in 0..n {
            if data.is_observed(i, j) {
                let e = counts.entry((labels[i], labels[j])).or_insert((0.0, 0.0));
                if data.value(i, j) == 1 {
                    e.0 += 1.0;
                } else {
                    e.1 += 1.0;
                }
            }
        }
    }
    counts
}

/// Sequential CRP product in index order.
fn crp_log(labels: &[usize], gamma: f64) -> f64 {
    let mut seen: Vec<usize> = Vec::new();
    let mut log_p = 0.0;
    for (i, &l) in labels.iter().enumerate() {
        if l >= seen.len() {
            seen.resize(l + 1, 0);
        }
        let numer = if seen[l] == 0 { gamma } else { seen[l] as f64 };
        log_p += (numer / (i as f64 + gamma)).ln();
        seen[l] += 1;
    }
    log_p
}

/// Exact IRM posterior predictive for each cell, marginalizing the partition
/// by enumeration and `alpha` (prior `alpha^-5/2`) and `gamma`
/// (Exponential(1)) by quadrature over `[1e-3, 1e3]`.
pub fn exact_irm_predictive(data: &RelationData, cells: &[(usize, usize)]) -> Vec<f64> {
    const POINTS: usize = 3000;
    let mut log_norm = Vec::new();
    let mut log_num: Vec<Vec<f64>> = vec![Vec::new(); cells.len()];
    for labels in enumerate_partitions(data.n_entities()) {
        let counts = pair_counts(data, &labels);
        let log_g = log_integral(POINTS, |g| -g + crp_log(&labels, g));
        let marginal = |a: f64| -> f64 {
            counts
                .values()
                .map(|&(n1, n0)| ln_beta(a + n1, a + n0) - ln_beta(a, a))
                .sum()
        };
        log_norm.push(log_g + log_integral(POINTS, |a| -2.5 * a.ln() + marginal(a)));
        for (t, &(r, c)) in cells.iter().enumerate() {
            let (n1, n0) = counts.get(&(labels[r], labels[c])).copied().unwrap_or((0.0, 0.0));
            let log_a = log_integral(POINTS, |a| {
                -2.5 * a.ln() + marginal(a) + ((n1 + a) / (n1 + n0 + 2.0 * a)).ln()
            });
            log_num[t].push(log_g + log_a);
        }
    }
    let z = log_sum_exp(&log_norm);
    log_num.iter().map(|v| (log_sum_exp(v) - z).exp()).collect()
}

/// Exact stored-system posterior predictive by enumerating all `m^n` label
/// vectors.
pub fn exact_stored_predictive(
    data: &RelationData,
    system: &StoredSystem,
    cells: &[(usize, usize)],
) -> Vec<f64> {
    let n = data.n_entities();
    let m = system.n_classes();
    let mut logs = Vec::new();
    let mut all = Vec::new();
    for mut code in 0..m.pow(n as u32) {
        let labels: Vec<usize> = (0..n)
            .map(|_| {
                let c = code % m;
                code /= m;
                c
            })
            .collect();
        let mut lp: f64 = labels.iter().map(|&c| system.zeta()[c].ln()).sum();
        for i in 0..n {
            for j in 0..n {
                if data.is_observed(i, j) {
                    let p = system.eta().get(labels[i], labels[j]);
                    lp += if data.value(i, j) == 1 { p.ln() } else { (1.0 - p).ln() };
                }
            }
        }
        logs.push(lp);
        all.push(labels);
    }
    let z = log_sum_exp(&logs);
    cells
        .iter()
        .map(|&(r, c)| {
            all.iter()
                .zip(&logs)
                .map(|(l, lp)| (lp - z).exp() * system.eta().get(l[r], l[c]))
                .sum()
        })
        .collect()
}

/// Random cells with each cell observed with probability `observed`; the
/// unobserved cells form the test set.
pub fn random_instance(n: usize, observed: f64, seed: u64) -> RelationData {
    let mut rng = rng_from_seed(seed);
    let cells: Vec<u8> = (0..n * n).map(|_| rng.random_range(0..2u8)).collect();
    let mut obs = Vec::new();
    let mut test = Vec::new();
    for k in 0..n * n {
        if rng.random::<f64>() < observed {
            obs.push(k);
        } else {
            test.push(k);
        }
    }
    RelationData::new(n, cells).unwrap().with_split(&obs, &test).unwrap()
}

/// Random stored system with `m` classes, `eta` uniform on `[0.05, 0.95]`.
pub fn random_system(m: usize, seed: u64) -> StoredSystem {
    let mut rng = rng_from_seed(seed);
    let eta = (0..m * m).map(|_| rng.random_range(0.05..0.95)).collect();
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut zeta: Vec<f64> = raw.iter().map(|r| r / total).collect();
    let head: f64 = zeta[..m - 1].iter().sum();
    zeta[m - 1] = 1.0 - head;
    StoredSystem::new(
        format!("random-{seed}"),
        relgen::ProbMatrix::new(m, eta).unwrap(),
        zeta,
    )
    .unwrap()
}
