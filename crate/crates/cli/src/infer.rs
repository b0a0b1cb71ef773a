//! One model on one dataset.

use relgen::{
    irm_predict_cells, optimize_tau, run_irm_chain, run_stored_chains, AnalogyFit, HybridComponents,
    McmcSchedule, RelationData, StoredSystem,
};
use serde::Serialize;

use crate::config::{ModelKind, TauSearch};
use crate::error::{HarnessError, Result};
use crate::results::{evaluate, THEORY_COMPONENT};

/// How the hybrid picks `tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauChoice {
    Fixed(f64),
    /// Maximize the score on the dataset's test cells.
    Optimize(TauSearch),
}

/// Predictions for the dataset's test cells (every unobserved cell when the
/// dataset has no test set) with the fitted weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InferReport {
    pub model: ModelKind,
    pub cells: Vec<(usize, usize)>,
    pub predictions: Vec<f64>,
    /// Negative log predictive probability of the test cells; absent without
    /// a test set.
    pub score: Option<f64>,
    pub components: Vec<String>,
    pub log_evidences: Vec<f64>,
    pub weights: Vec<f64>,
    pub tau: Option<f64>,
}

fn target_cells(data: &RelationData) -> (Vec<(usize, usize)>, bool) {
    if !data.test_cells().is_empty() {
        return (data.test_cells().to_vec(), true);
    }
    let n = data.n_entities();
    let cells = (0..n * n)
        .map(|k| (k / n, k % n))
        .filter(|&(r, c)| !data.is_observed(r, c))
        .collect();
    (cells, false)
}

pub fn infer(
    data: &RelationData,
    model: ModelKind,
    systems: &[StoredSystem],
    schedule: &McmcSchedule,
    tau: TauChoice,
) -> Result<InferReport> {
    let (cells, scored) = target_cells(data);
    let truth: Vec<u8> = cells.iter().map(|&(r, c)| data.value(r, c)).collect();
    let names = || systems.iter().map(|s| s.name().to_string());
    let mut report = InferReport {
        model,
        cells: cells.clone(),
        predictions: Vec::new(),
        score: None,
        components: Vec::new(),
        log_evidences: Vec::new(),
        weights: Vec::new(),
        tau: None,
    };
    match model {
        ModelKind::Irm => {
            let samples = run_irm_chain(data, schedule)?;
            report.predictions = irm_predict_cells(&samples, data, &cells);
            report.components = vec![THEORY_COMPONENT.to_string()];
            report.log_evidences = vec![relgen::harmonic_mean_evidence(&samples.logliks())?];
            report.weights = vec![1.0];
        }
        ModelKind::Analogy => {
            let fit = AnalogyFit::fit(data, systems, schedule)?;
            report.predictions = fit.predict_cells(systems, &cells)?;
            report.components = names().collect();
            report.log_evidences = fit.report.log_evidences;
            report.weights = fit.report.weights;
        }
        ModelKind::Hybrid => {
            if systems.is_empty() {
                return Err(HarnessError::Config("the hybrid needs at least one stored system".into()));
            }
            let stored = run_stored_chains(data, systems, schedule)?;
            let irm = run_irm_chain(data, schedule)?;
            let comps = HybridComponents::new(&stored, &irm, systems, data, &cells)?;
            let tau = match tau {
                TauChoice::Fixed(t) => t,
                TauChoice::Optimize(search) => {
                    if !scored {
                        return Err(HarnessError::Config(
                            "optimizing tau needs a dataset with test cells".into(),
                        ));
                    }
                    optimize_tau(
                        |t| comps.log_score(t, &truth).unwrap_or(f64::NAN),
                        search.log10_lower,
                        search.log10_upper,
                        search.tolerance,
                    )?
                    .tau
                }
            };
            report.predictions = comps.predict(tau)?;
            report.components = names().chain([THEORY_COMPONENT.to_string()]).collect();
            report.log_evidences = comps.log_evidences.clone();
            report.weights = comps.weights(tau)?;
            report.tau = Some(tau);
        }
    }
    if scored {
        report.score = Some(evaluate(&report.predictions, &truth)?);
    }
    Ok(report)
}
