//! Analogy-based learner.
//!
//! Each stored system keeps its class-level matrix and class prevalences
//! fixed; only the target entities' class labels are inferred. The chains'
//! per-draw likelihoods give a harmonic-mean estimate of each system's
//! evidence, and the normalized evidences weight the systems' predictions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::RelationData;
use crate::error::{Error, Result};
use crate::likelihood::{bernoulli_loglik_labels, log_bernoulli, mixture_unclamped, clamp_prob};
use crate::math::{logsumexp, sample_log_weights, sample_weights};
use crate::samples::{Draw, McmcSchedule, ModelTag, PosteriorSamples};
use crate::seed::{derive_seed, rng_from_seed};
use crate::system::StoredSystem;

/// Cached log-probabilities of a system's cells, clamped.
struct LogEta {
    m: usize,
    log_one: Vec<f64>,
    log_zero: Vec<f64>,
    log_zeta: Vec<f64>,
}

impl LogEta {
    fn new(system: &StoredSystem) -> Self {
        let eta = system.eta();
        LogEta {
            m: eta.dim(),
            log_one: eta.values().iter().map(|&p| log_bernoulli(p, 1)).collect(),
            log_zero: eta.values().iter().map(|&p| log_bernoulli(p, 0)).collect(),
            log_zeta: system.zeta().iter().map(|z| z.ln()).collect(),
        }
    }

    #[inline]
    fn cell(&self, a: usize, b: usize, v: u8) -> f64 {
        let k = a * self.m + b;
        if v == 1 {
            self.log_one[k]
        } else {
            self.log_zero[k]
        }
    }
}

fn draw_from_zeta<R: Rng + ?Sized>(system: &StoredSystem, n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| sample_weights(system.zeta(), rng)).collect()
}

fn sweep_labels<R: Rng + ?Sized>(data: &RelationData, cache: &LogEta, labels: &mut [usize], rng: &mut R) {
    let n = data.n_entities();
    let mut weights = vec![0.0; cache.m];
    for i in 0..n {
        for (c, w) in weights.iter_mut().enumerate() {
            let mut lw = cache.log_zeta[c];
            if lw == f64::NEG_INFINITY {
                *w = lw;
                continue;
            }
            for j in 0..n {
                if j == i {
                    continue;
                }
                if data.is_observed(i, j) {
                    lw += cache.cell(c, labels[j], data.value(i, j));
                }
                if data.is_observed(j, i) {
                    lw += cache.cell(labels[j], c, data.value(j, i));
                }
            }
            if data.is_observed(i, i) {
                lw += cache.cell(c, c, data.value(i, i));
            }
            *w = lw;
        }
        labels[i] = sample_log_weights(&weights, rng);
    }
}

/// One Gibbs pass over the target entities' labels under a fixed system:
/// entity `i` takes class `c` with probability proportional to
/// `zeta_c` times the likelihood of its observed cells.
pub fn gibbs_sweep_z_stored<R: Rng + ?Sized>(
    data: &RelationData,
    system: &StoredSystem,
    labels: &[usize],
    rng: &mut R,
) -> Result<Vec<usize>> {
    if labels.len() != data.n_entities() {
        return Err(Error::Dimension("label vector length differs from entity count".into()));
    }
    if labels.iter().any(|&c| c >= system.n_classes()) {
        return Err(Error::Dimension("label outside the system's classes".into()));
    }
    let mut next = labels.to_vec();
    sweep_labels(data, &LogEta::new(system), &mut next, rng);
    Ok(next)
}

/// Posterior samples of the target's class labels under one stored system.
/// Each draw records the Bernoulli log-likelihood of the observed cells.
pub fn run_stored_chain(
    data: &RelationData,
    system: &StoredSystem,
    schedule: &McmcSchedule,
) -> Result<PosteriorSamples> {
    schedule.validate()?;
    if system.n_classes() == 0 {
        return Err(Error::Config(format!("system {} has no classes", system.name())));
    }
    let mut rng = rng_from_seed(schedule.seed);
    let cache = LogEta::new(system);
    let mut labels = draw_from_zeta(system, data.n_entities(), &mut rng);
    let mut draws = Vec::with_capacity(schedule.retained_samples);
    for sweep in 1..=schedule.total_sweeps() {
        sweep_labels(data, &cache, &mut labels, &mut rng);
        if sweep > schedule.burn_in_sweeps && (sweep - schedule.burn_in_sweeps) % schedule.thinning == 0 {
            draws.push(Draw {
                labels: labels.clone(),
                loglik: bernoulli_loglik_labels(data, &labels, system.eta())?,
                hyper: None,
            });
        }
    }
    PosteriorSamples::new(ModelTag::Stored(system.name().to_string()), draws)
}

/// Runs one chain per system. Chain `k` is seeded with
/// `derive_seed(schedule.seed, [k])`.
pub fn run_stored_chains(
    data: &RelationData,
    systems: &[StoredSystem],
    schedule: &McmcSchedule,
) -> Result<Vec<PosteriorSamples>> {
    systems
        .iter()
        .enumerate()
        .map(|(k, s)| run_stored_chain(data, s, &schedule.with_seed(derive_seed(schedule.seed, &[k as u64]))))
        .collect()
}

/// Harmonic-mean estimate of the log evidence from per-draw log-likelihoods:
/// `-(logsumexp(-l) - ln Q)`.
pub fn harmonic_mean_evidence(logliks: &[f64]) -> Result<f64> {
    if logliks.is_empty() {
        return Err(Error::Argument("no draws for the evidence estimate".into()));
    }
    if logliks.iter().any(|l| !l.is_finite()) {
        return Err(Error::Argument("non-finite draw log-likelihood".into()));
    }
    // all-equal draws must come back exactly
    if logliks.iter().all(|&l| l == logliks[0]) {
        return Ok(logliks[0]);
    }
    let neg: Vec<f64> = logliks.iter().map(|l| -l).collect();
    Ok(-(logsumexp(&neg) - (logliks.len() as f64).ln()))
}

/// Normalized posterior weights from log evidences and log priors.
/// Components at `-inf` get exactly zero weight.
pub fn analogy_weights(log_evidences: &[f64], log_priors: &[f64]) -> Result<Vec<f64>> {
    if log_evidences.len() != log_priors.len() || log_evidences.is_empty() {
        return Err(Error::Dimension(format!(
            "{} evidences against {} priors",
            log_evidences.len(),
            log_priors.len()
        )));
    }
    let joint: Vec<f64> = log_evidences
        .iter()
        .zip(log_priors)
        .map(|(e, p)| e + p)
        .collect();
    if joint.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
        return Err(Error::Argument("evidence or prior is NaN or +inf".into()));
    }
    let norm = logsumexp(&joint);
    if norm == f64::NEG_INFINITY {
        return Err(Error::DegenerateWeights);
    }
    Ok(joint.iter().map(|x| (x - norm).exp()).collect())
}

/// `ln(1/K)` for each of `k` systems.
pub fn uniform_log_priors(k: usize) -> Vec<f64> {
    vec![-(k as f64).ln(); k]
}

/// Per-cell mean over draws of the system's probability for the cell's
/// class pair.
pub fn stored_mean_predictions(
    samples: &PosteriorSamples,
    system: &StoredSystem,
    cells: &[(usize, usize)],
) -> Vec<f64> {
    let eta = system.eta();
    let q = samples.len() as f64;
    cells
        .iter()
        .map(|&(r, c)| {
            samples
                .draws()
                .iter()
                .map(|d| eta.get(d.labels[r], d.labels[c]))
                .sum::<f64>()
                / q
        })
        .collect()
}

fn check_aligned(samples: &[PosteriorSamples], systems: &[StoredSystem]) -> Result<()> {
    if samples.len() != systems.len() {
        return Err(Error::Dimension(format!(
            "{} sample sets for {} systems",
            samples.len(),
            systems.len()
        )));
    }
    if let Some(first) = samples.first() {
        if samples.iter().any(|s| s.len() != first.len()) {
            return Err(Error::Argument("every system needs the same number of draws".into()));
        }
    }
    Ok(())
}

/// Weighted mixture of the systems' posterior-mean predictions for `cell`.
pub fn analogy_predict(
    per_system_samples: &[PosteriorSamples],
    systems: &[StoredSystem],
    weights: &[f64],
    cell: (usize, usize),
) -> Result<f64> {
    Ok(clamp_prob(analogy_predict_unclamped(per_system_samples, systems, weights, cell)?))
}

pub(crate) fn analogy_predict_unclamped(
    per_system_samples: &[PosteriorSamples],
    systems: &[StoredSystem],
    weights: &[f64],
    cell: (usize, usize),
) -> Result<f64> {
    check_aligned(per_system_samples, systems)?;
    let probs: Vec<f64> = per_system_samples
        .iter()
        .zip(systems)
        .map(|(s, sys)| stored_mean_predictions(s, sys, &[cell])[0])
        .collect();
    mixture_unclamped(&probs, weights)
}

/// Evidences, weights and ranking of the stored systems for one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalogyReport {
    pub names: Vec<String>,
    pub log_evidences: Vec<f64>,
    pub weights: Vec<f64>,
    /// Indices into `names`, by decreasing weight; ties by name.
    pub ranking: Vec<usize>,
}

impl AnalogyReport {
    pub fn new(names: Vec<String>, log_evidences: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if names.len() != weights.len() || log_evidences.len() != weights.len() {
            return Err(Error::Dimension("report columns differ in length".into()));
        }
        let mut ranking: Vec<usize> = (0..names.len()).collect();
        ranking.sort_by(|&a, &b| {
            weights[b]
                .total_cmp(&weights[a])
                .then_with(|| names[a].cmp(&names[b]))
        });
        Ok(AnalogyReport {
            names,
            log_evidences,
            weights,
            ranking,
        })
    }

    pub fn best(&self) -> usize {
        self.ranking[0]
    }

    pub fn ranked_names(&self) -> Vec<&str> {
        self.ranking.iter().map(|&k| self.names[k].as_str()).collect()
    }
}

/// A fitted analogy learner: chains for every stored system plus weights
/// under a uniform prior over systems.
#[derive(Debug, Clone)]
pub struct AnalogyFit {
    pub samples: Vec<PosteriorSamples>,
    pub report: AnalogyReport,
}

impl AnalogyFit {
    pub fn from_samples(systems: &[StoredSystem], samples: Vec<PosteriorSamples>) -> Result<Self> {
        check_aligned(&samples, systems)?;
        let log_evidences = samples
            .iter()
            .map(|s| harmonic_mean_evidence(&s.logliks()))
            .collect::<Result<Vec<_>>>()?;
        let weights = analogy_weights(&log_evidences, &uniform_log_priors(systems.len()))?;
        let names = systems.iter().map(|s| s.name().to_string()).collect();
        Ok(AnalogyFit {
            samples,
            report: AnalogyReport::new(names, log_evidences, weights)?,
        })
    }

    pub fn fit(data: &RelationData, systems: &[StoredSystem], schedule: &McmcSchedule) -> Result<Self> {
        if systems.is_empty() {
            return Err(Error::Config("the analogy learner needs at least one stored system".into()));
        }
        Self::from_samples(systems, run_stored_chains(data, systems, schedule)?)
    }

    pub fn predict_cells(
        &self,
        systems: &[StoredSystem],
        cells: &[(usize, usize)],
    ) -> Result<Vec<f64>> {
        let per_system: Vec<Vec<f64>> = self
            .samples
            .iter()
            .zip(systems)
            .map(|(s, sys)| stored_mean_predictions(s, sys, cells))
            .collect();
        (0..cells.len())
            .map(|t| {
                let probs: Vec<f64> = per_system.iter().map(|p| p[t]).collect();
                crate::likelihood::predictive_prob(&probs, &self.report.weights)
            })
            .collect()
    }
}
