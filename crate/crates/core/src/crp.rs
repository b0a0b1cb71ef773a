//! Chinese restaurant process prior over partitions.

use rand::Rng;

use crate::partition::Partition;

/// Seating probabilities for one more entity given the occupancy of the
/// existing classes: `N_A / (N + gamma)` for each class, then
/// `gamma / (N + gamma)` for a new class in the last slot.
pub fn crp_assignment_probs(counts: &[usize], gamma: f64) -> Vec<f64> {
    let total = counts.iter().sum::<usize>() as f64 + gamma;
    counts
        .iter()
        .map(|&c| c as f64 / total)
        .chain(std::iter::once(gamma / total))
        .collect()
}

/// Log prior probability of `z` under CRP(gamma).
///
/// The sequential product over arrival order collapses to
/// `K ln(gamma) + sum_A ln (N_A - 1)! - sum_{i<n} ln(i + gamma)`. Block sizes
/// are summed in sorted order, so the value depends only on the multiset of
/// block sizes and is bit-identical under relabelling of entities.
pub fn crp_log_prior(z: &Partition, gamma: f64) -> f64 {
    log_prior_from_sizes(z.counts(), gamma)
}

pub(crate) fn log_prior_from_sizes(sizes: &[usize], gamma: f64) -> f64 {
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    let n: usize = sizes.iter().sum();
    let mut log_p = sizes.len() as f64 * gamma.ln();
    for size in sizes {
        log_p += (1..size).map(|k| (k as f64).ln()).sum::<f64>();
    }
    log_p - (0..n).map(|i| (i as f64 + gamma).ln()).sum::<f64>()
}

/// Forward draw from CRP(gamma) over `n` entities, one uniform per entity.
pub fn sample_partition<R: Rng + ?Sized>(n: usize, gamma: f64, rng: &mut R) -> Partition {
    let mut labels = Vec::with_capacity(n);
    let mut counts: Vec<usize> = Vec::new();
    for i in 0..n {
        let u = rng.random::<f64>() * (i as f64 + gamma);
        let mut acc = 0.0;
        let mut chosen = counts.len();
        for (class, &c) in counts.iter().enumerate() {
            acc += c as f64;
            if u < acc {
                chosen = class;
                break;
            }
        }
        if chosen == counts.len() {
            counts.push(0);
        }
        counts[chosen] += 1;
        labels.push(chosen);
    }
    Partition::from_labels(&labels)
}
