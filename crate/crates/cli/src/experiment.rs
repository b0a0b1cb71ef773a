//! The experiment grid: every target system × observed fraction × model ×
//! pool size.
//!
//! For each (target, fraction) cell the target's data are simulated once and
//! split once; every model in the cell is scored on the same test cells. The
//! IRM chain and the stored-system chains are shared by all rows of a cell,
//! and pools for different K are prefixes of one shuffled pool.
//!
//! Seeds are derived from the master seed with [`relgen::derive_seed`]:
//!
//! | stream                       | coordinates                                  |
//! |------------------------------|----------------------------------------------|
//! | synthetic system `i`         | `[1, i]`                                     |
//! | target data                  | `[2, target]`                                |
//! | split (shared by fractions)  | `[3, target]`                                |
//! | pool order                   | `[4, target]`                                |
//! | chain for stored system `j`  | `[5, target, fraction, j]`                   |
//! | validation split             | `[6, target, fraction]`                      |
//! | row (and its IRM chain)      | `[target, fraction, model id, K]`            |
//!
//! Model ids are 0 (irm), 1 (analogy), 2 (hybrid); the IRM row has K = 0.
//! Validation-split chains use `derive_seed(chain seed, [6])`.

use std::time::Instant;

use log::{debug, info, warn};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use relgen::{
    analogy_weights, derive_seed, generate_synthetic_system, harmonic_mean_evidence,
    irm_mean_predictions, make_split, optimize_tau, rng_from_seed, run_irm_chain,
    run_stored_chain, simulate_interactions, stored_mean_predictions, uniform_log_priors,
    AnalogyReport, HybridComponents, PosteriorSamples, RelationData, SplitSpec, StoredSystem,
    TauOptimum,
};

use crate::config::{ExperimentConfig, ModelKind, PoolMode, TauMode};
use crate::error::{HarnessError, Result};
use crate::results::{evaluate, ResultRow, THEORY_COMPONENT};

const TAG_SYSTEM: u64 = 1;
const TAG_DATA: u64 = 2;
const TAG_SPLIT: u64 = 3;
const TAG_POOL: u64 = 4;
const TAG_STORED_CHAIN: u64 = 5;
const TAG_VALIDATION: u64 = 6;

pub fn row_seed(master: u64, target: usize, fraction: usize, model: ModelKind, k: usize) -> u64 {
    derive_seed(master, &[target as u64, fraction as u64, model.id(), k as u64])
}

/// Systems named `syn-000`, `syn-001`, ... drawn from the synthetic source.
pub fn synthetic_systems(config: &ExperimentConfig) -> Result<Vec<StoredSystem>> {
    let s = &config.synthetic;
    (0..s.count)
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(config.master_seed, &[TAG_SYSTEM, i as u64]));
            Ok(generate_synthetic_system(
                format!("syn-{i:03}"),
                s.gamma,
                s.alpha,
                s.min_classes..=s.max_classes,
                s.probe_entities,
                &mut rng,
            )?)
        })
        .collect()
}

/// The configured systems: loaded from `systems_dir` if set, generated
/// otherwise. Rows of `eta` with near-deterministic entries are reported.
pub fn load_systems(config: &ExperimentConfig) -> Result<Vec<StoredSystem>> {
    let systems = match &config.systems_dir {
        Some(dir) => relgen::formats::read_systems_dir(dir)?,
        None => synthetic_systems(config)?,
    };
    for sys in &systems {
        let rows = sys.extreme_rows();
        if !rows.is_empty() {
            warn!("system {}: eta rows {rows:?} contain entries within 1e-4 of 0 or 1", sys.name());
        }
    }
    Ok(systems)
}

/// Number of targets: `n_target_systems`, or every system when unset.
pub fn target_count(config: &ExperimentConfig, systems: &[StoredSystem]) -> Result<usize> {
    let n = config.n_target_systems.unwrap_or(systems.len());
    if n == 0 || n > systems.len() {
        return Err(HarnessError::Config(format!(
            "{n} target systems requested, {} available",
            systems.len()
        )));
    }
    Ok(n)
}

/// Stored-system indices available to `target`, in pool order.
pub fn pool_order(config: &ExperimentConfig, n_systems: usize, target: usize) -> Vec<usize> {
    let mut others: Vec<usize> = (0..n_systems).filter(|&j| j != target).collect();
    others.shuffle(&mut rng_from_seed(derive_seed(
        config.master_seed,
        &[TAG_POOL, target as u64],
    )));
    match config.pool {
        PoolMode::LeaveOneOut => others,
        PoolMode::IncludeTarget => std::iter::once(target).chain(others).collect(),
    }
}

/// The target's simulated data with the split for one observed fraction.
pub fn target_data(
    config: &ExperimentConfig,
    system: &StoredSystem,
    target: usize,
    fraction: f64,
) -> relgen::Result<RelationData> {
    let mut rng = rng_from_seed(derive_seed(config.master_seed, &[TAG_DATA, target as u64]));
    let (data, _) = simulate_interactions(system, config.entity_count, &mut rng)?;
    let spec = SplitSpec {
        observed_fraction: fraction,
        test_fraction: config.test_fraction,
        seed: derive_seed(config.master_seed, &[TAG_SPLIT, target as u64]),
    };
    make_split(&data, &spec)
}

/// Rows in canonical order for one (target, fraction) cell.
fn row_keys(config: &ExperimentConfig) -> Vec<(ModelKind, usize)> {
    let mut keys = Vec::new();
    if config.wants(ModelKind::Irm) {
        keys.push((ModelKind::Irm, 0));
    }
    for model in [ModelKind::Analogy, ModelKind::Hybrid] {
        if config.wants(model) {
            keys.extend(config.stored_system_counts.iter().map(|&k| (model, k)));
        }
    }
    keys
}

pub fn expected_rows(config: &ExperimentConfig, targets: usize) -> usize {
    targets * config.observed_fractions.len() * row_keys(config).len()
}

struct Timed<T> {
    value: T,
    seconds: f64,
}

fn timed<T>(f: impl FnOnce() -> T) -> Timed<T> {
    let start = Instant::now();
    let value = f();
    Timed {
        value,
        seconds: start.elapsed().as_secs_f64(),
    }
}

type Shared<T> = std::result::Result<T, String>;

/// Chains fitted to one dataset, with per-component predictions for a set of
/// cells.
struct Fitted {
    /// Per stored system in pool order: predictions for each cell and log
    /// evidence.
    stored: Vec<Shared<Timed<(Vec<f64>, f64)>>>,
    irm: Option<Shared<Timed<(Vec<f64>, f64)>>>,
}

fn summarize_stored(
    samples: relgen::Result<PosteriorSamples>,
    system: &StoredSystem,
    cells: &[(usize, usize)],
) -> relgen::Result<(Vec<f64>, f64)> {
    let samples = samples?;
    let ev = harmonic_mean_evidence(&samples.logliks())?;
    Ok((stored_mean_predictions(&samples, system, cells), ev))
}

fn summarize_irm(
    samples: relgen::Result<PosteriorSamples>,
    data: &RelationData,
    cells: &[(usize, usize)],
) -> relgen::Result<(Vec<f64>, f64)> {
    let samples = samples?;
    let ev = harmonic_mean_evidence(&samples.logliks())?;
    Ok((irm_mean_predictions(&samples, data, cells), ev))
}

struct CellTask<'a> {
    config: &'a ExperimentConfig,
    systems: &'a [StoredSystem],
    target: usize,
    fraction_index: usize,
    pool: Vec<usize>,
}

impl CellTask<'_> {
    fn fraction(&self) -> f64 {
        self.config.observed_fractions[self.fraction_index]
    }

    fn seed(&self, model: ModelKind, k: usize) -> u64 {
        row_seed(self.config.master_seed, self.target, self.fraction_index, model, k)
    }

    fn stored_chain_seed(&self, j: usize) -> u64 {
        derive_seed(
            self.config.master_seed,
            &[TAG_STORED_CHAIN, self.target as u64, self.fraction_index as u64, j as u64],
        )
    }

    /// Largest pool prefix any row needs.
    fn pool_needed(&self) -> usize {
        let max_k = self.config.pooled_counts().iter().copied().max().unwrap_or(0);
        max_k.min(self.pool.len())
    }

    fn needs_irm(&self) -> bool {
        self.config.wants(ModelKind::Irm) || self.config.wants(ModelKind::Hybrid)
    }

    /// Runs every chain the cell needs on `data`; `salt` distinguishes the
    /// validation fit from the main one.
    fn fit(&self, data: &RelationData, cells: &[(usize, usize)], salt: Option<u64>) -> Fitted {
        let salted = |seed: u64| match salt {
            Some(tag) => derive_seed(seed, &[tag]),
            None => seed,
        };
        let schedule = &self.config.mcmc;
        let stored = self.pool[..self.pool_needed()]
            .par_iter()
            .map(|&j| {
                let system = &self.systems[j];
                let sched = schedule.with_seed(salted(self.stored_chain_seed(j)));
                let t = timed(|| summarize_stored(run_stored_chain(data, system, &sched), system, cells));
                match t.value {
                    Ok(v) => Ok(Timed { value: v, seconds: t.seconds }),
                    Err(e) => Err(format!("chain for {}: {e}", system.name())),
                }
            })
            .collect();
        let irm = self.needs_irm().then(|| {
            let sched = schedule.with_seed(salted(self.seed(ModelKind::Irm, 0)));
            let t = timed(|| summarize_irm(run_irm_chain(data, &sched), data, cells));
            match t.value {
                Ok(v) => Ok(Timed { value: v, seconds: t.seconds }),
                Err(e) => Err(format!("irm chain: {e}")),
            }
        });
        Fitted { stored, irm }
    }

    fn base_row(&self, model: ModelKind, k: usize, n_test: usize) -> ResultRow {
        ResultRow {
            target: self.systems[self.target].name().to_string(),
            target_index: self.target,
            observed_fraction: self.fraction(),
            fraction_index: self.fraction_index,
            model,
            k,
            n_test,
            score: None,
            tau: None,
            log10_tau: None,
            irm_weight: None,
            best_system: None,
            weights: Vec::new(),
            seconds: None,
            seed: self.seed(model, k),
            error: None,
        }
    }

    fn names(&self, k: usize) -> Vec<String> {
        self.pool[..k]
            .iter()
            .map(|&j| self.systems[j].name().to_string())
            .collect()
    }
}

/// Hybrid ingredients for one row, before `tau` is chosen.
struct PendingHybrid {
    components: HybridComponents,
    truth: Vec<u8>,
    names: Vec<String>,
    seconds: f64,
    /// `tau` fitted on validation cells, in validation-split mode.
    validated: Option<TauOptimum>,
}

enum RowState {
    Done(ResultRow),
    Hybrid(ResultRow, Box<PendingHybrid>),
}

/// Components of the hybrid with pool prefix `k`, the theory last.
fn components_for(
    fitted: &Fitted,
    k: usize,
    cells: &[(usize, usize)],
) -> Shared<(HybridComponents, f64)> {
    let mut seconds = 0.0;
    let mut columns = Vec::with_capacity(k + 1);
    let mut log_evidences = Vec::with_capacity(k + 1);
    for part in fitted.stored[..k].iter().chain(fitted.irm.as_ref()) {
        let part = part.as_ref().map_err(Clone::clone)?;
        seconds += part.seconds;
        columns.push(&part.value.0);
        log_evidences.push(part.value.1);
    }
    let predictions = (0..cells.len())
        .map(|t| columns.iter().map(|c| c[t]).collect())
        .collect();
    Ok((
        HybridComponents {
            cells: cells.to_vec(),
            predictions,
            log_evidences,
        },
        seconds,
    ))
}

fn analogy_row(
    task: &CellTask<'_>,
    fitted: &Fitted,
    k: usize,
    truth: &[u8],
    mut row: ResultRow,
) -> ResultRow {
    let start = Instant::now();
    let result = (|| -> Shared<(f64, AnalogyReport, f64)> {
        let mut seconds = 0.0;
        let mut columns = Vec::with_capacity(k);
        let mut log_ev = Vec::with_capacity(k);
        for part in &fitted.stored[..k] {
            let part = part.as_ref().map_err(Clone::clone)?;
            seconds += part.seconds;
            columns.push(&part.value.0);
            log_ev.push(part.value.1);
        }
        let weights = analogy_weights(&log_ev, &uniform_log_priors(k)).map_err(|e| e.to_string())?;
        let preds = (0..truth.len())
            .map(|t| {
                let probs: Vec<f64> = columns.iter().map(|c| c[t]).collect();
                relgen::predictive_prob(&probs, &weights)
            })
            .collect::<relgen::Result<Vec<f64>>>()
            .map_err(|e| e.to_string())?;
        let score = evaluate(&preds, truth).map_err(|e| e.to_string())?;
        let report = AnalogyReport::new(task.names(k), log_ev, weights).map_err(|e| e.to_string())?;
        Ok((score, report, seconds))
    })();
    match result {
        Ok((score, report, seconds)) => {
            row.score = Some(score);
            row.best_system = Some(report.names[report.best()].clone());
            row.weights = report.names.into_iter().zip(report.weights).collect();
            row.seconds = Some(seconds + start.elapsed().as_secs_f64());
        }
        Err(e) => row.error = Some(e),
    }
    row
}

fn irm_row(fitted: &Fitted, truth: &[u8], mut row: ResultRow) -> ResultRow {
    let result = fitted
        .irm
        .as_ref()
        .expect("irm chain runs when the irm model is selected")
        .as_ref()
        .map_err(Clone::clone)
        .and_then(|part| {
            let preds: Vec<f64> = part.value.0.iter().map(|&p| relgen::clamp_prob(p)).collect();
            let score = evaluate(&preds, truth).map_err(|e| e.to_string())?;
            Ok((score, part.seconds))
        });
    match result {
        Ok((score, seconds)) => {
            row.score = Some(score);
            row.seconds = Some(seconds);
        }
        Err(e) => row.error = Some(e),
    }
    row
}

/// Chains fitted on part of the observed cells, with predictions for the
/// held-back part.
struct ValidationFit {
    fitted: Fitted,
    cells: Vec<(usize, usize)>,
    truth: Vec<u8>,
}

fn fit_validation(task: &CellTask<'_>, data: &RelationData) -> Shared<ValidationFit> {
    let cfg = task.config;
    let mut observed = data.observed_indices();
    observed.shuffle(&mut rng_from_seed(derive_seed(
        cfg.master_seed,
        &[TAG_VALIDATION, task.target as u64, task.fraction_index as u64],
    )));
    let n_val = (cfg.validation_fraction * observed.len() as f64 + 1e-9).floor() as usize;
    if n_val == 0 || n_val == observed.len() {
        return Err(format!(
            "validation split of {} observed cells leaves an empty side",
            observed.len()
        ));
    }
    let (val, train) = observed.split_at(n_val);
    let mut val = val.to_vec();
    val.sort_unstable();
    let fit_data = data
        .clone()
        .with_split(train, &val)
        .map_err(|e| e.to_string())?;
    let cells = fit_data.test_cells().to_vec();
    Ok(ValidationFit {
        fitted: task.fit(&fit_data, &cells, Some(TAG_VALIDATION)),
        truth: fit_data.test_values(),
        cells,
    })
}

fn search_tau(config: &ExperimentConfig, score: impl FnMut(f64) -> f64) -> Shared<TauOptimum> {
    let t = &config.tau_search;
    optimize_tau(score, t.log10_lower, t.log10_upper, t.tolerance).map_err(|e| e.to_string())
}

fn hybrid_state(
    task: &CellTask<'_>,
    data: &RelationData,
    fitted: &Fitted,
    validation: Option<&Shared<ValidationFit>>,
    k: usize,
    truth: &[u8],
    mut row: ResultRow,
) -> RowState {
    let start = Instant::now();
    let pending = (|| -> Shared<PendingHybrid> {
        let (components, mut seconds) = components_for(fitted, k, data.test_cells())?;
        let validated = match validation {
            Some(fit) => {
                let fit = fit.as_ref().map_err(Clone::clone)?;
                let (comps, val_seconds) = components_for(&fit.fitted, k, &fit.cells)?;
                seconds += val_seconds;
                Some(search_tau(task.config, |tau| {
                    comps.log_score(tau, &fit.truth).unwrap_or(f64::NAN)
                })?)
            }
            None => None,
        };
        Ok(PendingHybrid {
            components,
            truth: truth.to_vec(),
            names: task.names(k),
            seconds: seconds + start.elapsed().as_secs_f64(),
            validated,
        })
    })();
    match pending {
        Ok(p) => RowState::Hybrid(row, Box::new(p)),
        Err(e) => {
            row.error = Some(e);
            RowState::Done(row)
        }
    }
}

/// Fills a hybrid row scored at `opt.tau`.
fn finish_hybrid(mut row: ResultRow, p: &PendingHybrid, opt: &TauOptimum, extra_seconds: f64) -> ResultRow {
    let result = (|| -> relgen::Result<(f64, Vec<f64>)> {
        let preds = p.components.predict(opt.tau)?;
        Ok((evaluate(&preds, &p.truth)?, p.components.weights(opt.tau)?))
    })();
    match result {
        Ok((score, weights)) => {
            let k = p.names.len();
            row.score = Some(score);
            row.tau = Some(opt.tau);
            row.log10_tau = Some(opt.log10_tau);
            row.irm_weight = Some(weights[k]);
            let best = (0..k)
                .max_by(|&a, &b| {
                    weights[a]
                        .total_cmp(&weights[b])
                        .then_with(|| p.names[b].cmp(&p.names[a]))
                })
                .expect("pool is non-empty");
            row.best_system = Some(p.names[best].clone());
            row.weights = p
                .names
                .iter()
                .cloned()
                .chain(std::iter::once(THEORY_COMPONENT.to_string()))
                .zip(weights)
                .collect();
            row.seconds = Some(p.seconds + extra_seconds);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

fn run_cell(task: &CellTask<'_>) -> Vec<RowState> {
    let cfg = task.config;
    let keys = row_keys(cfg);
    let data = match target_data(cfg, &task.systems[task.target], task.target, task.fraction()) {
        Ok(d) => d,
        Err(e) => {
            return keys
                .iter()
                .map(|&(model, k)| {
                    let mut row = task.base_row(model, k, 0);
                    row.error = Some(e.to_string());
                    RowState::Done(row)
                })
                .collect()
        }
    };
    let cells = data.test_cells().to_vec();
    let truth = data.test_values();
    debug!(
        "target {} fraction {}: {} observed, {} test cells",
        task.target,
        task.fraction(),
        data.observed_count(),
        cells.len()
    );
    let fitted = task.fit(&data, &cells, None);
    let validation = (cfg.tau_mode == TauMode::ValidationSplit && cfg.wants(ModelKind::Hybrid))
        .then(|| fit_validation(task, &data));
    keys.iter()
        .map(|&(model, k)| {
            let row = task.base_row(model, k, cells.len());
            if model != ModelKind::Irm && k > task.pool.len() {
                let mut row = row;
                row.error = Some(format!("pool has {} systems, K = {k}", task.pool.len()));
                return RowState::Done(row);
            }
            match model {
                ModelKind::Irm => RowState::Done(irm_row(&fitted, &truth, row)),
                ModelKind::Analogy => RowState::Done(analogy_row(task, &fitted, k, &truth, row)),
                ModelKind::Hybrid => {
                    hybrid_state(task, &data, &fitted, validation.as_ref(), k, &truth, row)
                }
            }
        })
        .collect()
}

/// Chooses `tau` for every pending hybrid row and scores it.
fn resolve_hybrids(config: &ExperimentConfig, states: Vec<RowState>) -> Vec<ResultRow> {
    let mut global: Vec<(usize, Shared<TauOptimum>, f64)> = Vec::new();
    if config.tau_mode == TauMode::Global {
        for &k in &config.stored_system_counts {
            let members: Vec<&PendingHybrid> = states
                .iter()
                .filter_map(|s| match s {
                    RowState::Hybrid(row, p) if row.k == k => Some(p.as_ref()),
                    _ => None,
                })
                .collect();
            if members.is_empty() {
                continue;
            }
            let start = Instant::now();
            let opt = search_tau(config, |tau| {
                members
                    .iter()
                    .map(|p| p.components.log_score(tau, &p.truth).unwrap_or(f64::NAN))
                    .sum()
            });
            // the shared search cost is split evenly over its rows
            let share = start.elapsed().as_secs_f64() / members.len() as f64;
            info!("global tau for K = {k}: {:?}", opt.as_ref().map(|o| o.tau));
            global.push((k, opt, share));
        }
    }
    states
        .into_par_iter()
        .map(|state| match state {
            RowState::Done(row) => row,
            RowState::Hybrid(mut row, p) => {
                let start = Instant::now();
                let opt = match config.tau_mode {
                    TauMode::PerCell => search_tau(config, |tau| {
                        p.components.log_score(tau, &p.truth).unwrap_or(f64::NAN)
                    }),
                    TauMode::ValidationSplit => Ok(p.validated.expect("validated in this mode")),
                    TauMode::Global => global
                        .iter()
                        .find(|g| g.0 == row.k)
                        .expect("every pending K was searched")
                        .1
                        .clone(),
                };
                let share = global.iter().find(|g| g.0 == row.k).map_or(0.0, |g| g.2);
                match opt {
                    Ok(opt) => finish_hybrid(row, &p, &opt, start.elapsed().as_secs_f64() + share),
                    Err(e) => {
                        row.error = Some(e);
                        row
                    }
                }
            }
        })
        .collect()
}

/// Runs the whole grid. Rows come back in canonical order: by target, then
/// fraction, then IRM, analogy (per K), hybrid (per K). A failing row carries
/// an error message and leaves the others untouched.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let systems = load_systems(config)?;
    let n_targets = target_count(config, &systems)?;
    info!(
        "{} systems, {n_targets} targets, {} rows expected",
        systems.len(),
        expected_rows(config, n_targets)
    );
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;
    let mut rows = pool.install(|| {
        let tasks: Vec<CellTask<'_>> = (0..n_targets)
            .flat_map(|target| {
                let pool = pool_order(config, systems.len(), target);
                let systems = &systems;
                (0..config.observed_fractions.len()).map(move |fraction_index| CellTask {
                    config,
                    systems,
                    target,
                    fraction_index,
                    pool: pool.clone(),
                })
            })
            .collect();
        let states: Vec<RowState> = tasks.par_iter().flat_map_iter(run_cell).collect();
        resolve_hybrids(config, states)
    });
    if !config.record_timings {
        for row in &mut rows {
            row.seconds = None;
        }
    }
    Ok(rows)
}
