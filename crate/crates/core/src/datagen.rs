//! Synthetic systems, simulated interactions and observation/test splits.

use std::ops::RangeInclusive;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::crp::sample_partition;
use crate::data::RelationData;
use crate::error::{Error, Result};
use crate::math::sample_weights;
use crate::seed::rng_from_seed;
use crate::system::{ProbMatrix, StoredSystem};

pub const DEFAULT_CLASS_RANGE: RangeInclusive<usize> = 3..=6;
pub const DEFAULT_PROBE_ENTITIES: usize = 30;
pub const MAX_REJECTIONS: usize = 10_000;

/// Draws a system from the IRM generative process: a CRP(gamma) partition of
/// `probe_entities`, resampled until its class count lies in `class_range`,
/// Beta(alpha, alpha) class-pair probabilities, and class prevalences equal
/// to the accepted partition's class proportions.
pub fn generate_synthetic_system<R: Rng + ?Sized>(
    name: impl Into<String>,
    gamma: f64,
    alpha: f64,
    class_range: RangeInclusive<usize>,
    probe_entities: usize,
    rng: &mut R,
) -> Result<StoredSystem> {
    if class_range.is_empty() || *class_range.start() == 0 || *class_range.start() > probe_entities {
        return Err(Error::Argument(format!(
            "class range {class_range:?} unusable with {probe_entities} probe entities"
        )));
    }
    let beta = Beta::new(alpha, alpha)
        .map_err(|e| Error::Argument(format!("Beta({alpha}, {alpha}): {e}")))?;
    for _ in 0..MAX_REJECTIONS {
        let z = sample_partition(probe_entities, gamma, rng);
        if !class_range.contains(&z.n_classes()) {
            continue;
        }
        let m = z.n_classes();
        let eta = (0..m * m).map(|_| beta.sample(rng)).collect();
        let zeta = z
            .counts()
            .iter()
            .map(|&c| c as f64 / probe_entities as f64)
            .collect();
        return StoredSystem::new(name, ProbMatrix::new(m, eta)?, zeta);
    }
    Err(Error::Generation(format!(
        "no partition with {class_range:?} classes after {MAX_REJECTIONS} draws (gamma = {gamma})"
    )))
}

/// Simulates a fully defined dataset from a system: labels iid from `zeta`,
/// then each directed cell iid Bernoulli(`eta[z_i, z_j]`). Nothing is marked
/// observed. Returns the data and the true labels.
pub fn simulate_interactions<R: Rng + ?Sized>(
    system: &StoredSystem,
    n_entities: usize,
    rng: &mut R,
) -> Result<(RelationData, Vec<usize>)> {
    if n_entities == 0 {
        return Err(Error::Argument("entity count must be positive".into()));
    }
    let labels: Vec<usize> = (0..n_entities)
        .map(|_| sample_weights(system.zeta(), rng))
        .collect();
    let eta = system.eta();
    let cells = (0..n_entities * n_entities)
        .map(|k| {
            let p = eta.get(labels[k / n_entities], labels[k % n_entities]);
            (rng.random::<f64>() < p) as u8
        })
        .collect();
    Ok((RelationData::new(n_entities, cells)?, labels))
}

/// Observed and held-out fractions of the `n^2` cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub observed_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(observed_fraction: f64, seed: u64) -> Self {
        SplitSpec {
            observed_fraction,
            test_fraction: 0.1,
            seed,
        }
    }

    /// `(observed, test)` cell counts for `total` cells.
    pub fn counts(&self, total: usize) -> Result<(usize, usize)> {
        let (obs, test) = (self.observed_fraction, self.test_fraction);
        if !(0.0..=1.0).contains(&obs) || !(0.0..=1.0).contains(&test) || obs + test > 1.0 + 1e-12 {
            return Err(Error::Split(format!(
                "observed {obs} + test {test} does not fit in the table"
            )));
        }
        let n_obs = floor_count(obs, total);
        let n_test = floor_count(test, total);
        if n_obs + n_test > total {
            return Err(Error::Split(format!(
                "{n_obs} observed + {n_test} test cells exceed {total}"
            )));
        }
        Ok((n_obs, n_test))
    }
}

/// `floor(fraction * total)`, ignoring representation error in `fraction`
/// (0.7 * 900 is 629.999... in binary).
fn floor_count(fraction: f64, total: usize) -> usize {
    (fraction * total as f64 + 1e-9).floor() as usize
}

/// Marks a uniformly random subset of cells observed and a disjoint subset as
/// held out. A single random ordering of all cells is drawn per seed; the
/// test cells are its head and the observed cells follow, so splits sharing
/// a seed share their test set and have nested observed sets.
pub fn make_split(data: &RelationData, spec: &SplitSpec) -> Result<RelationData> {
    let total = data.n_entities() * data.n_entities();
    let (n_obs, n_test) = spec.counts(total)?;
    let mut rng = rng_from_seed(spec.seed);
    let order = sample_indices(&mut rng, total, total).into_vec();
    let test = &order[..n_test];
    let observed = &order[n_test..n_test + n_obs];
    let mut test = test.to_vec();
    test.sort_unstable();
    data.clone().with_split(observed, &test)
}
