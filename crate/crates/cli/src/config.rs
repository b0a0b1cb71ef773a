//! Experiment configuration.
//!
//! Every field has a default, so an empty TOML document is a valid
//! configuration describing the full grid:
//!
//! ```toml
//! entity_count = 30
//! observed_fractions = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
//! test_fraction = 0.1
//! stored_system_counts = [2, 5, 10, 100]
//! models = ["irm", "analogy", "hybrid"]
//! # systems_dir = "systems"      # load systems instead of generating them
//! # n_target_systems = 101       # default: 101 synthetic, or every file
//! pool = "leave-one-out"         # or "include-target"
//! master_seed = 0
//! tau_mode = "per-cell"          # or "global", "validation-split"
//! validation_fraction = 0.2
//! workers = 0                    # 0 = one per core
//! record_timings = false
//!
//! [synthetic]
//! count = 101
//! gamma = 1.0
//! alpha = 1.0
//! min_classes = 3
//! max_classes = 6
//! probe_entities = 30
//!
//! [mcmc]
//! burn_in_sweeps = 500
//! retained_samples = 100
//! thinning = 5
//!
//! [tau_search]
//! log10_lower = -4.0
//! log10_upper = 4.0
//! tolerance = 1e-4
//! ```

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use relgen::hybrid::{TAU_LOG10_BOUNDS, TAU_TOLERANCE};
use relgen::McmcSchedule;
use serde::{Deserialize, Serialize};

use crate::error::{io_error, HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Irm,
    Analogy,
    Hybrid,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Irm, ModelKind::Analogy, ModelKind::Hybrid];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Irm => "irm",
            ModelKind::Analogy => "analogy",
            ModelKind::Hybrid => "hybrid",
        }
    }

    /// Stable numeric id used in seed derivation.
    pub fn id(self) -> u64 {
        match self {
            ModelKind::Irm => 0,
            ModelKind::Analogy => 1,
            ModelKind::Hybrid => 2,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown model {s:?}")))
    }
}

/// How the hybrid's `tau` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauMode {
    /// Maximize the held-out score separately for every (target, fraction).
    #[default]
    PerCell,
    /// One `tau` per pool size, maximizing the score summed over all targets
    /// and fractions.
    Global,
    /// Hold back part of the observed cells, fit `tau` on them with chains
    /// run on the rest, then score the full-data fit on the test cells.
    ValidationSplit,
}

impl FromStr for TauMode {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-cell" => Ok(TauMode::PerCell),
            "global" => Ok(TauMode::Global),
            "validation-split" => Ok(TauMode::ValidationSplit),
            _ => Err(HarnessError::Config(format!("unknown tau mode {s:?}"))),
        }
    }
}

/// Which systems make up a target's pool of stored systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolMode {
    /// Every other system, shuffled.
    #[default]
    LeaveOneOut,
    /// The target itself first, then every other system shuffled.
    IncludeTarget,
}

impl FromStr for PoolMode {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "leave-one-out" => Ok(PoolMode::LeaveOneOut),
            "include-target" => Ok(PoolMode::IncludeTarget),
            _ => Err(HarnessError::Config(format!("unknown pool mode {s:?}"))),
        }
    }
}

/// Parameters of the synthetic system generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSource {
    pub count: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub min_classes: usize,
    pub max_classes: usize,
    pub probe_entities: usize,
}

impl Default for SyntheticSource {
    fn default() -> Self {
        SyntheticSource {
            count: 101,
            gamma: 1.0,
            alpha: 1.0,
            min_classes: *relgen::datagen::DEFAULT_CLASS_RANGE.start(),
            max_classes: *relgen::datagen::DEFAULT_CLASS_RANGE.end(),
            probe_entities: relgen::datagen::DEFAULT_PROBE_ENTITIES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TauSearch {
    pub log10_lower: f64,
    pub log10_upper: f64,
    pub tolerance: f64,
}

impl Default for TauSearch {
    fn default() -> Self {
        TauSearch {
            log10_lower: TAU_LOG10_BOUNDS.0,
            log10_upper: TAU_LOG10_BOUNDS.1,
            tolerance: TAU_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub burn_in_sweeps: usize,
    pub retained_samples: usize,
    pub thinning: usize,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        let s = McmcSchedule::default();
        ScheduleConfig {
            burn_in_sweeps: s.burn_in_sweeps,
            retained_samples: s.retained_samples,
            thinning: s.thinning,
        }
    }
}

impl ScheduleConfig {
    pub fn with_seed(&self, seed: u64) -> McmcSchedule {
        McmcSchedule {
            burn_in_sweeps: self.burn_in_sweeps,
            retained_samples: self.retained_samples,
            thinning: self.thinning,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub entity_count: usize,
    pub observed_fractions: Vec<f64>,
    pub test_fraction: f64,
    pub stored_system_counts: Vec<usize>,
    pub models: Vec<ModelKind>,
    pub systems_dir: Option<PathBuf>,
    pub synthetic: SyntheticSource,
    pub n_target_systems: Option<usize>,
    pub pool: PoolMode,
    pub mcmc: ScheduleConfig,
    pub master_seed: u64,
    pub tau_search: TauSearch,
    pub tau_mode: TauMode,
    pub validation_fraction: f64,
    pub workers: usize,
    pub record_timings: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            entity_count: 30,
            observed_fractions: (1..=9).map(|k| k as f64 / 10.0).collect(),
            test_fraction: 0.1,
            stored_system_counts: vec![2, 5, 10, 100],
            models: ModelKind::ALL.to_vec(),
            systems_dir: None,
            synthetic: SyntheticSource::default(),
            n_target_systems: None,
            pool: PoolMode::default(),
            mcmc: ScheduleConfig::default(),
            master_seed: 0,
            tau_search: TauSearch::default(),
            tau_mode: TauMode::default(),
            validation_fraction: 0.2,
            workers: 0,
            record_timings: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_error(path))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration is always representable")
    }

    pub fn wants(&self, model: ModelKind) -> bool {
        self.models.contains(&model)
    }

    /// Pool sizes that need stored-system chains.
    pub fn pooled_counts(&self) -> &[usize] {
        if self.wants(ModelKind::Analogy) || self.wants(ModelKind::Hybrid) {
            &self.stored_system_counts
        } else {
            &[]
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.entity_count == 0 {
            return bad("entity_count must be positive".into());
        }
        if self.observed_fractions.is_empty() {
            return bad("no observed fractions".into());
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return bad(format!("test_fraction {} outside [0, 1)", self.test_fraction));
        }
        for &f in &self.observed_fractions {
            if !(f > 0.0 && f < 1.0) {
                return bad(format!("observed fraction {f} outside (0, 1)"));
            }
            if f + self.test_fraction > 1.0 + 1e-12 {
                return bad(format!(
                    "observed fraction {f} plus test fraction {} exceeds 1",
                    self.test_fraction
                ));
            }
        }
        if has_duplicates(self.observed_fractions.iter().map(|f| f.to_bits())) {
            return bad("observed fractions repeat".into());
        }
        if self.models.is_empty() {
            return bad("no models selected".into());
        }
        if has_duplicates(self.models.iter().copied()) {
            return bad("models repeat".into());
        }
        if self.stored_system_counts.contains(&0) {
            return bad("stored system counts must be positive".into());
        }
        if has_duplicates(self.stored_system_counts.iter().copied()) {
            return bad("stored system counts repeat".into());
        }
        if (self.wants(ModelKind::Analogy) || self.wants(ModelKind::Hybrid))
            && self.stored_system_counts.is_empty()
        {
            return bad("analogy and hybrid models need stored_system_counts".into());
        }
        if self.n_target_systems == Some(0) {
            return bad("n_target_systems must be positive".into());
        }
        let s = &self.synthetic;
        if self.systems_dir.is_none() {
            if s.count == 0 {
                return bad("synthetic count must be positive".into());
            }
            if s.min_classes == 0 || s.min_classes > s.max_classes {
                return bad(format!("class range {}..={} is empty", s.min_classes, s.max_classes));
            }
            if !(s.gamma > 0.0 && s.alpha > 0.0) || !s.gamma.is_finite() || !s.alpha.is_finite() {
                return bad("synthetic gamma and alpha must be positive".into());
            }
        }
        self.mcmc.with_seed(0).validate()?;
        let t = &self.tau_search;
        if !(t.log10_lower < t.log10_upper) || !t.log10_lower.is_finite() || !t.log10_upper.is_finite() {
            return bad(format!("tau bracket [{}, {}] is empty", t.log10_lower, t.log10_upper));
        }
        if !(t.tolerance > 0.0) {
            return bad("tau tolerance must be positive".into());
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad(format!("validation_fraction {} outside (0, 1)", self.validation_fraction));
        }
        Ok(())
    }
}

fn has_duplicates<T: Eq + std::hash::Hash>(items: impl IntoIterator<Item = T>) -> bool {
    let mut seen = HashSet::new();
    items.into_iter().any(|x| !seen.insert(x))
}
