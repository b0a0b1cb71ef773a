//! Likelihoods and predictive combination shared by every learner.
//!
//! All accumulation happens in log space. Probabilities that feed a log or
//! leave the crate as a prediction are clamped to `[EPS, 1 - EPS]`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::data::RelationData;
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::system::ProbMatrix;

/// Probability clamp.
pub const EPS: f64 = 1e-6;

pub const HYPER_MIN: f64 = 1e-3;
pub const HYPER_MAX: f64 = 1e3;

#[inline]
pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(EPS, 1.0 - EPS)
}

/// Log probability of a single binary outcome under a (clamped) probability.
#[inline]
pub fn log_bernoulli(p: f64, value: u8) -> f64 {
    let p = clamp_prob(p);
    if value == 1 {
        p.ln()
    } else {
        (1.0 - p).ln()
    }
}

/// Beta concentration (`beta = alpha`) and CRP concentration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub alpha: f64,
    pub gamma: f64,
}

impl Hyperparameters {
    pub fn new(alpha: f64, gamma: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("gamma", gamma)] {
            if !(HYPER_MIN..=HYPER_MAX).contains(&v) {
                return Err(Error::Argument(format!(
                    "{name} = {v} outside [{HYPER_MIN}, {HYPER_MAX}]"
                )));
            }
        }
        Ok(Hyperparameters { alpha, gamma })
    }
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            alpha: 1.0,
            gamma: 1.0,
        }
    }
}

/// Log-likelihood of the observed cells when entity `i` belongs to class
/// `labels[i]` and cell `(i, j)` is Bernoulli(`eta[labels[i], labels[j]]`).
pub fn bernoulli_loglik_labels(data: &RelationData, labels: &[usize], eta: &ProbMatrix) -> Result<f64> {
    if labels.len() != data.n_entities() {
        return Err(Error::Dimension(format!(
            "{} labels for {} entities",
            labels.len(),
            data.n_entities()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&c| c >= eta.dim()) {
        return Err(Error::Dimension(format!(
            "class {bad} outside a {}-class matrix",
            eta.dim()
        )));
    }
    Ok(data
        .observed_cells()
        .map(|(i, j, v)| log_bernoulli(eta.get(labels[i], labels[j]), v))
        .sum())
}

pub fn bernoulli_loglik(data: &RelationData, z: &Partition, eta: &ProbMatrix) -> Result<f64> {
    bernoulli_loglik_labels(data, z.assignments(), eta)
}

/// `ln B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Observed ones and zeros for each ordered class pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCounts {
    classes: usize,
    ones: Vec<u32>,
    zeros: Vec<u32>,
}

impl PairCounts {
    pub fn from_labels(data: &RelationData, labels: &[usize], classes: usize) -> Self {
        let mut counts = PairCounts {
            classes,
            ones: vec![0; classes * classes],
            zeros: vec![0; classes * classes],
        };
        for (i, j, v) in data.observed_cells() {
            let k = labels[i] * classes + labels[j];
            if v == 1 {
                counts.ones[k] += 1;
            } else {
                counts.zeros[k] += 1;
            }
        }
        counts
    }

    pub fn new(data: &RelationData, z: &Partition) -> Self {
        Self::from_labels(data, z.assignments(), z.n_classes())
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    /// `(ones, zeros)` observed from class `a` to class `b`.
    pub fn get(&self, a: usize, b: usize) -> (u32, u32) {
        let k = a * self.classes + b;
        (self.ones[k], self.zeros[k])
    }

    /// Marginal log-likelihood with every pair's probability integrated out
    /// under Beta(alpha, alpha). Pairs without observations contribute 0.
    pub fn log_marginal(&self, alpha: f64) -> f64 {
        let base = ln_beta(alpha, alpha);
        self.ones
            .iter()
            .zip(&self.zeros)
            .filter(|(&n1, &n0)| n1 + n0 > 0)
            .map(|(&n1, &n0)| ln_beta(alpha + n1 as f64, alpha + n0 as f64) - base)
            .sum()
    }

    /// Posterior mean of the pair's interaction probability,
    /// `(n1 + alpha) / (n1 + n0 + 2 alpha)`.
    pub fn posterior_mean(&self, a: usize, b: usize, alpha: f64) -> f64 {
        let (n1, n0) = self.get(a, b);
        (n1 as f64 + alpha) / ((n1 + n0) as f64 + 2.0 * alpha)
    }

    pub fn posterior_mean_matrix(&self, alpha: f64) -> ProbMatrix {
        let c = self.classes;
        let values = (0..c * c)
            .map(|k| self.posterior_mean(k / c, k % c, alpha))
            .collect();
        ProbMatrix::new(c, values).expect("posterior means lie in (0, 1)")
    }
}

/// Marginal likelihood of the observed cells under partition `z` with the
/// class-pair probabilities integrated out against Beta(alpha, alpha).
pub fn collapsed_loglik(data: &RelationData, z: &Partition, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Argument(format!("alpha must be positive, got {alpha}")));
    }
    if z.len() != data.n_entities() {
        return Err(Error::Dimension(format!(
            "partition over {} entities for {} entities of data",
            z.len(),
            data.n_entities()
        )));
    }
    Ok(PairCounts::new(data, z).log_marginal(alpha))
}

/// Mixture prediction `sum_k w_k p_k`, clamped.
pub fn predictive_prob(component_probs: &[f64], weights: &[f64]) -> Result<f64> {
    Ok(clamp_prob(mixture_unclamped(component_probs, weights)?))
}

pub(crate) fn mixture_unclamped(component_probs: &[f64], weights: &[f64]) -> Result<f64> {
    if component_probs.len() != weights.len() || weights.is_empty() {
        return Err(Error::Dimension(format!(
            "{} component predictions against {} weights",
            component_probs.len(),
            weights.len()
        )));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Argument(format!("weights sum to {total}")));
    }
    Ok(component_probs
        .iter()
        .zip(weights)
        .map(|(p, w)| p * w)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data_with(n: usize, cells: Vec<u8>, observed: &[usize]) -> RelationData {
        RelationData::new(n, cells)
            .unwrap()
            .with_split(observed, &[])
            .unwrap()
    }

    #[test]
    fn bernoulli_examples() {
        let eta = ProbMatrix::filled(1, 0.7).unwrap();
        let one = data_with(1, vec![1], &[0]);
        let ll = bernoulli_loglik(&one, &Partition::single_class(1), &eta).unwrap();
        assert!((ll - (-0.35667494393873245)).abs() < 1e-12);

        let empty = data_with(1, vec![1], &[]);
        assert_eq!(bernoulli_loglik(&empty, &Partition::single_class(1), &eta).unwrap(), 0.0);

        let half = ProbMatrix::filled(1, 0.5).unwrap();
        let two = data_with(2, vec![1, 0, 0, 0], &[0, 1]);
        let ll = bernoulli_loglik(&two, &Partition::single_class(2), &half).unwrap();
        assert!((ll - 2.0 * 0.5f64.ln()).abs() < 1e-12);
        assert!((ll + 1.38629).abs() < 1e-5);
    }

    #[test]
    fn bernoulli_rejects_out_of_range_class() {
        let eta = ProbMatrix::filled(1, 0.5).unwrap();
        let d = data_with(2, vec![1, 0, 0, 0], &[0]);
        let z = Partition::singletons(2);
        assert!(matches!(bernoulli_loglik(&d, &z, &eta), Err(Error::Dimension(_))));
    }

    #[test]
    fn bernoulli_clamps_degenerate_probabilities() {
        let eta = ProbMatrix::filled(1, 0.0).unwrap();
        let d = data_with(1, vec![1], &[0]);
        let ll = bernoulli_loglik(&d, &Partition::single_class(1), &eta).unwrap();
        assert!((ll - EPS.ln()).abs() < 1e-12);
    }

    #[test]
    fn collapsed_examples() {
        // one class pair, alpha = 1, observations {1, 0}: int t(1-t) dt = 1/6
        let d = data_with(2, vec![1, 0, 0, 0], &[0, 1]);
        let ll = collapsed_loglik(&d, &Partition::single_class(2), 1.0).unwrap();
        assert!((ll - (1.0f64 / 6.0).ln()).abs() < 1e-12);
        assert!((ll + 1.79176).abs() < 1e-5);

        let d = data_with(1, vec![1], &[0]);
        let ll = collapsed_loglik(&d, &Partition::single_class(1), 1.0).unwrap();
        assert!((ll - 0.5f64.ln()).abs() < 1e-12);

        let d = data_with(2, vec![1, 0, 0, 0], &[]);
        assert_eq!(collapsed_loglik(&d, &Partition::singletons(2), 2.0).unwrap(), 0.0);
        assert!(collapsed_loglik(&d, &Partition::singletons(2), 0.0).is_err());
    }

    #[test]
    fn posterior_mean_identity() {
        let d = data_with(2, vec![1, 1, 1, 0], &[0, 1, 2, 3]);
        let counts = PairCounts::new(&d, &Partition::single_class(2));
        assert_eq!(counts.get(0, 0), (3, 1));
        assert!((counts.posterior_mean(0, 0, 1.0) - 2.0 / 3.0).abs() < 1e-15);
        let empty = PairCounts::new(&data_with(2, vec![1, 1, 1, 0], &[]), &Partition::singletons(2));
        assert_eq!(empty.posterior_mean(0, 1, 1.0), 0.5);
    }

    #[test]
    fn predictive_examples() {
        assert!((predictive_prob(&[0.2, 0.8], &[0.5, 0.5]).unwrap() - 0.5).abs() < 1e-15);
        assert!((predictive_prob(&[0.3], &[1.0]).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(predictive_prob(&[1.0, 1.0], &[0.25, 0.75]).unwrap(), 1.0 - EPS);
        assert!(matches!(
            predictive_prob(&[0.1, 0.2], &[1.0]),
            Err(Error::Dimension(_))
        ));
        assert!(predictive_prob(&[0.1, 0.2], &[0.5, 0.6]).is_err());
    }

    #[test]
    fn hyperparameter_bounds() {
        assert!(Hyperparameters::new(1.0, 1.0).is_ok());
        assert!(Hyperparameters::new(1e-4, 1.0).is_err());
        assert!(Hyperparameters::new(1.0, 2e3).is_err());
    }
}
