//! Hybrid learner: `K` stored systems plus one freshly inferred IRM theory.
//!
//! The prior gives each stored system `1 / (K + tau)` and the new theory
//! `tau / (K + tau)`. Evidences of all `K + 1` components come from the
//! harmonic-mean estimator over their chains, and `tau` is chosen by Brent
//! maximization of a held-out score over `log10(tau)`.

use serde::{Deserialize, Serialize};

use crate::analogy::{harmonic_mean_evidence, analogy_weights, stored_mean_predictions};
use crate::data::RelationData;
use crate::error::{Error, Result};
use crate::irm::irm_mean_predictions;
use crate::likelihood::{clamp_prob, mixture_unclamped};
use crate::samples::PosteriorSamples;
use crate::system::StoredSystem;

/// Default search interval for `log10(tau)`.
pub const TAU_LOG10_BOUNDS: (f64, f64) = (-4.0, 4.0);
pub const TAU_TOLERANCE: f64 = 1e-4;

/// Prior over the `K` stored systems followed by the new theory.
pub fn hybrid_prior(k: usize, tau: f64) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::Argument("the hybrid prior needs at least one stored system".into()));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Argument(format!("tau must be positive and finite, got {tau}")));
    }
    let denom = k as f64 + tau;
    let mut prior = vec![1.0 / denom; k];
    prior.push(tau / denom);
    Ok(prior)
}

fn log_hybrid_prior(k: usize, tau: f64) -> Result<Vec<f64>> {
    // computed in log space so extreme tau keeps full precision
    hybrid_prior(k, tau)?;
    let log_denom = (k as f64 + tau).ln();
    let mut lp = vec![-log_denom; k];
    lp.push(tau.ln() - log_denom);
    Ok(lp)
}

/// Everything the hybrid prediction needs that does not depend on `tau`:
/// per-cell predictions of every component and their log evidences. The
/// theory component is last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridComponents {
    pub cells: Vec<(usize, usize)>,
    /// `predictions[t][k]`: component `k`'s prediction for cell `t`.
    pub predictions: Vec<Vec<f64>>,
    pub log_evidences: Vec<f64>,
}

impl HybridComponents {
    pub fn new(
        stored_samples: &[PosteriorSamples],
        irm_samples: &PosteriorSamples,
        systems: &[StoredSystem],
        data: &RelationData,
        cells: &[(usize, usize)],
    ) -> Result<Self> {
        if stored_samples.len() != systems.len() || systems.is_empty() {
            return Err(Error::Dimension(format!(
                "{} sample sets for {} systems",
                stored_samples.len(),
                systems.len()
            )));
        }
        if stored_samples.iter().any(|s| s.len() != irm_samples.len()) {
            return Err(Error::Argument("every component needs the same number of draws".into()));
        }
        let mut per_component: Vec<Vec<f64>> = stored_samples
            .iter()
            .zip(systems)
            .map(|(s, sys)| stored_mean_predictions(s, sys, cells))
            .collect();
        per_component.push(irm_mean_predictions(irm_samples, data, cells));
        let mut log_evidences = stored_samples
            .iter()
            .map(|s| harmonic_mean_evidence(&s.logliks()))
            .collect::<Result<Vec<_>>>()?;
        log_evidences.push(harmonic_mean_evidence(&irm_samples.logliks())?);
        let predictions = (0..cells.len())
            .map(|t| per_component.iter().map(|p| p[t]).collect())
            .collect();
        Ok(HybridComponents {
            cells: cells.to_vec(),
            predictions,
            log_evidences,
        })
    }

    /// Number of stored systems.
    pub fn k(&self) -> usize {
        self.log_evidences.len() - 1
    }

    pub fn weights(&self, tau: f64) -> Result<Vec<f64>> {
        analogy_weights(&self.log_evidences, &log_hybrid_prior(self.k(), tau)?)
    }

    /// Weight of the theory component.
    pub fn theory_weight(&self, tau: f64) -> Result<f64> {
        Ok(*self.weights(tau)?.last().expect("K + 1 components"))
    }

    pub fn predict(&self, tau: f64) -> Result<Vec<f64>> {
        let w = self.weights(tau)?;
        self.predictions
            .iter()
            .map(|probs| Ok(clamp_prob(mixture_unclamped(probs, &w)?)))
            .collect()
    }

    pub fn predict_unclamped(&self, tau: f64) -> Result<Vec<f64>> {
        let w = self.weights(tau)?;
        self.predictions
            .iter()
            .map(|probs| mixture_unclamped(probs, &w))
            .collect()
    }

    /// Sum of log predictive probabilities of the true values (higher is
    /// better).
    pub fn log_score(&self, tau: f64, truth: &[u8]) -> Result<f64> {
        let preds = self.predict(tau)?;
        if preds.len() != truth.len() {
            return Err(Error::Dimension("truth and predictions differ in length".into()));
        }
        Ok(preds
            .iter()
            .zip(truth)
            .map(|(&p, &v)| if v == 1 { p.ln() } else { (1.0 - p).ln() })
            .sum())
    }
}

/// Mixture prediction for one cell over `K` stored systems and the IRM.
pub fn hybrid_predict(
    stored_samples: &[PosteriorSamples],
    irm_samples: &PosteriorSamples,
    systems: &[StoredSystem],
    data: &RelationData,
    tau: f64,
    cell: (usize, usize),
) -> Result<f64> {
    let comps = HybridComponents::new(stored_samples, irm_samples, systems, data, &[cell])?;
    Ok(comps.predict(tau)?[0])
}

/// Result of a `tau` search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauOptimum {
    pub tau: f64,
    pub log10_tau: f64,
    pub score: f64,
}

/// Maximizes `score_fn(tau)` over `log10(tau)` in `[lower, upper]` with
/// Brent's method. The endpoints are scored too and win if better, so a
/// monotone score returns the boundary.
pub fn optimize_tau<F>(mut score_fn: F, lower: f64, upper: f64, tol: f64) -> Result<TauOptimum>
where
    F: FnMut(f64) -> f64,
{
    if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
        return Err(Error::Argument(format!("bad tau bracket [{lower}, {upper}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    let mut failure = None;
    let mut eval = |x: f64| -> f64 {
        let tau = 10f64.powf(x);
        let s = score_fn(tau);
        if !s.is_finite() && failure.is_none() {
            failure = Some(Error::Optimization { tau, score: s });
        }
        if s.is_finite() { -s } else { f64::INFINITY }
    };
    let (x, fx) = crate::brent::minimize(&mut eval, lower, upper, tol);
    let f_lo = eval(lower);
    let f_hi = eval(upper);
    if let Some(err) = failure {
        return Err(err);
    }
    let (best_x, best_f) = [(x, fx), (lower, f_lo), (upper, f_hi)]
        .into_iter()
        .fold((x, fx), |best, cand| if cand.1 < best.1 { cand } else { best });
    Ok(TauOptimum {
        tau: 10f64.powf(best_x),
        log10_tau: best_x,
        score: -best_f,
    })
}
