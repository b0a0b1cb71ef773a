//! Small numeric helpers shared across the samplers.

use rand::Rng;

/// `ln(sum(exp(xs)))`, stable for large magnitudes. Returns `-inf` for an
/// empty slice or when every entry is `-inf`.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Draws an index from unnormalized log weights by inverse CDF with a single
/// uniform. Entries equal to `-inf` are never selected.
pub(crate) fn sample_log_weights<R: Rng + ?Sized>(log_weights: &[f64], rng: &mut R) -> usize {
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    debug_assert!(max.is_finite(), "no finite log weight");
    let weights: Vec<f64> = log_weights.iter().map(|&w| (w - max).exp()).collect();
    sample_weights(&weights, rng)
}

/// Inverse-CDF draw from non-negative (not necessarily normalized) weights.
pub(crate) fn sample_weights<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (idx, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = idx;
            if u < acc {
                return idx;
            }
        }
    }
    // rounding can leave u == total
    last_positive
}
