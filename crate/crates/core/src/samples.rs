use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::Hyperparameters;
use crate::partition::Partition;

/// Burn-in, retention and thinning for a single chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcSchedule {
    pub burn_in_sweeps: usize,
    pub retained_samples: usize,
    pub thinning: usize,
    pub seed: u64,
}

impl Default for McmcSchedule {
    fn default() -> Self {
        McmcSchedule {
            burn_in_sweeps: 500,
            retained_samples: 100,
            thinning: 5,
            seed: 0,
        }
    }
}

impl McmcSchedule {
    pub fn with_seed(self, seed: u64) -> Self {
        McmcSchedule { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.retained_samples == 0 || self.thinning == 0 {
            return Err(Error::Config(format!(
                "schedule keeps no samples (retained {}, thinning {})",
                self.retained_samples, self.thinning
            )));
        }
        Ok(())
    }

    pub fn total_sweeps(&self) -> usize {
        self.burn_in_sweeps + self.retained_samples * self.thinning
    }
}

/// Which learner produced a sample set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelTag {
    Irm,
    Stored(String),
}

/// One retained state of a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    /// Class label per entity. Canonical for IRM draws; indexes the system's
    /// classes for stored-system draws.
    pub labels: Vec<usize>,
    /// Log-likelihood of the observed cells under this draw.
    pub loglik: f64,
    /// Hyperparameters at this draw (IRM only).
    pub hyper: Option<Hyperparameters>,
}

impl Draw {
    pub fn partition(&self) -> Partition {
        Partition::from_labels(&self.labels)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSamples {
    model: ModelTag,
    draws: Vec<Draw>,
}

impl PosteriorSamples {
    pub fn new(model: ModelTag, draws: Vec<Draw>) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::Argument("a sample set needs at least one draw".into()));
        }
        if let Some(d) = draws.iter().find(|d| !d.loglik.is_finite()) {
            return Err(Error::Argument(format!("non-finite draw log-likelihood {}", d.loglik)));
        }
        Ok(PosteriorSamples { model, draws })
    }

    pub fn model(&self) -> &ModelTag {
        &self.model
    }

    pub fn draws(&self) -> &[Draw] {
        &self.draws
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn logliks(&self) -> Vec<f64> {
        self.draws.iter().map(|d| d.loglik).collect()
    }
}
