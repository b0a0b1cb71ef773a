//! Bayesian relational generalization.
//!
//! Three learners predict unobserved cells of a directed binary relation
//! among `n` entities:
//!
//! * [`irm`]: a theory-based learner that infers latent classes with an
//!   infinite relational model (CRP prior, Beta-Bernoulli likelihood).
//! * [`analogy`]: an analogy-based learner that reuses stored class-level
//!   systems and weights them by estimated evidence.
//! * [`hybrid`]: a mixture of the stored systems and a fresh IRM theory
//!   whose prior weight is tuned by Brent maximization.
//!
//! [`datagen`] produces synthetic systems and splits; [`formats`] reads and
//! writes system and dataset files.

pub mod analogy;
mod brent;
pub mod crp;
pub mod data;
pub mod datagen;
pub mod error;
pub mod formats;
pub mod hybrid;
pub mod irm;
pub mod likelihood;
pub mod math;
pub mod partition;
pub mod samples;
pub mod seed;
pub mod system;

#[cfg(test)]
pub(crate) mod testutil;

pub use analogy::{
    analogy_predict, analogy_weights, gibbs_sweep_z_stored, harmonic_mean_evidence,
    run_stored_chain, run_stored_chains, stored_mean_predictions, uniform_log_priors, AnalogyFit,
    AnalogyReport,
};
pub use crp::{crp_assignment_probs, crp_log_prior, sample_partition};
pub use data::RelationData;
pub use datagen::{generate_synthetic_system, make_split, simulate_interactions, SplitSpec};
pub use error::{Error, Result};
pub use hybrid::{hybrid_predict, hybrid_prior, optimize_tau, HybridComponents, TauOptimum};
pub use irm::{
    gibbs_sweep_z, irm_mean_predictions, irm_predict, irm_predict_cells, mh_update_alpha,
    mh_update_gamma, run_irm_chain, run_irm_chain_from,
};
pub use likelihood::{
    bernoulli_loglik, clamp_prob, collapsed_loglik, predictive_prob, Hyperparameters, PairCounts,
    EPS,
};
pub use partition::Partition;
pub use samples::{Draw, McmcSchedule, ModelTag, PosteriorSamples};
pub use seed::{derive_seed, rng_from_seed, SimRng};
pub use system::{ProbMatrix, StoredSystem};
