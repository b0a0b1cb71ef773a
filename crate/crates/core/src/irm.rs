//! Theory-based learner: the infinite relational model.
//!
//! Class-pair probabilities are integrated out (Beta-Bernoulli conjugacy), so
//! the chain state is the partition plus the two concentration parameters.
//! One sweep is a Gibbs pass over every entity's class followed by one
//! log-normal random-walk Metropolis step on `alpha` and one on `gamma`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::crp::{log_prior_from_sizes, sample_partition};
use crate::data::RelationData;
use crate::error::Result;
use crate::likelihood::{clamp_prob, ln_beta, Hyperparameters, PairCounts, HYPER_MAX, HYPER_MIN};
use crate::math::sample_log_weights;
use crate::partition::Partition;
use crate::samples::{Draw, McmcSchedule, ModelTag, PosteriorSamples};
use crate::seed::rng_from_seed;

/// Standard deviation of the log-scale random-walk proposal.
pub const PROPOSAL_SCALE: f64 = 0.5;

/// `ln p(alpha)` up to a constant: the improper `alpha^(-5/2)` prior.
pub fn log_alpha_prior(alpha: f64) -> f64 {
    -2.5 * alpha.ln()
}

/// `ln p(gamma)` up to a constant: Exponential(1).
pub fn log_gamma_prior(gamma: f64) -> f64 {
    -gamma
}

/// Log acceptance ratio of a log-normal random-walk move, including the
/// `proposal / current` Jacobian. Proposals outside the hyperparameter bounds
/// get `-inf`.
pub fn log_acceptance<F: Fn(f64) -> f64>(current: f64, proposal: f64, log_target: F) -> f64 {
    if !(HYPER_MIN..=HYPER_MAX).contains(&proposal) {
        return f64::NEG_INFINITY;
    }
    log_target(proposal) - log_target(current) + proposal.ln() - current.ln()
}

fn mh_step<R, F>(current: f64, log_target: F, rng: &mut R) -> f64
where
    R: Rng + ?Sized,
    F: Fn(f64) -> f64,
{
    let xi: f64 = rng.sample(StandardNormal);
    let proposal = current * (PROPOSAL_SCALE * xi).exp();
    let u: f64 = rng.random();
    if u.ln() < log_acceptance(current, proposal, log_target) {
        proposal
    } else {
        current
    }
}

/// Observed cells touching each entity, excluding the self-interaction.
struct Neighbours {
    outgoing: Vec<Vec<(usize, u8)>>,
    incoming: Vec<Vec<(usize, u8)>>,
    own: Vec<Option<u8>>,
    observed: usize,
}

impl Neighbours {
    fn new(data: &RelationData) -> Self {
        let n = data.n_entities();
        let mut nb = Neighbours {
            outgoing: vec![Vec::new(); n],
            incoming: vec![Vec::new(); n],
            own: vec![None; n],
            observed: 0,
        };
        for (i, j, v) in data.observed_cells() {
            nb.observed += 1;
            if i == j {
                nb.own[i] = Some(v);
            } else {
                nb.outgoing[i].push((j, v));
                nb.incoming[j].push((i, v));
            }
        }
        nb
    }
}

/// `ln B(alpha + a, alpha + b)` by table lookup for a fixed `alpha`.
struct LnBetaTable {
    lg: Vec<f64>,
    lg2: Vec<f64>,
}

impl LnBetaTable {
    fn new(alpha: f64, max_count: usize) -> Self {
        let mut lg = Vec::with_capacity(max_count + 1);
        let mut lg2 = Vec::with_capacity(max_count + 1);
        let mut a = statrs::function::gamma::ln_gamma(alpha);
        let mut b = statrs::function::gamma::ln_gamma(2.0 * alpha);
        for k in 0..=max_count {
            lg.push(a);
            lg2.push(b);
            a += (alpha + k as f64).ln();
            b += (2.0 * alpha + k as f64).ln();
        }
        LnBetaTable { lg, lg2 }
    }

    #[inline]
    fn f(&self, ones: u32, zeros: u32) -> f64 {
        let (a, b) = (ones as usize, zeros as usize);
        self.lg[a] + self.lg[b] - self.lg2[a + b]
    }
}

/// Mutable partition with class-pair sufficient statistics, stored in flat
/// `n x n` arrays (at most `n` classes).
struct ClusterState<'a> {
    data: &'a RelationData,
    nb: Neighbours,
    labels: Vec<usize>,
    sizes: Vec<usize>,
    ones: Vec<u32>,
    zeros: Vec<u32>,
}

const UNASSIGNED: usize = usize::MAX;

impl<'a> ClusterState<'a> {
    fn new(data: &'a RelationData, z: &Partition) -> Self {
        let n = data.n_entities();
        let mut state = ClusterState {
            data,
            nb: Neighbours::new(data),
            labels: z.assignments().to_vec(),
            sizes: z.counts().to_vec(),
            ones: vec![0; n * n],
            zeros: vec![0; n * n],
        };
        for (i, j, v) in data.observed_cells() {
            state.bump(z.class_of(i), z.class_of(j), v, true);
        }
        state
    }

    fn stride(&self) -> usize {
        self.data.n_entities()
    }

    #[inline]
    fn bump(&mut self, a: usize, b: usize, v: u8, add: bool) {
        let k = a * self.stride() + b;
        let slot = if v == 1 { &mut self.ones[k] } else { &mut self.zeros[k] };
        if add {
            *slot += 1;
        } else {
            *slot -= 1;
        }
    }

    fn move_cells(&mut self, i: usize, add: bool) {
        let c = self.labels[i];
        for idx in 0..self.nb.outgoing[i].len() {
            let (j, v) = self.nb.outgoing[i][idx];
            self.bump(c, self.labels[j], v, add);
        }
        for idx in 0..self.nb.incoming[i].len() {
            let (j, v) = self.nb.incoming[i][idx];
            self.bump(self.labels[j], c, v, add);
        }
        if let Some(v) = self.nb.own[i] {
            self.bump(c, c, v, add);
        }
    }

    fn remove(&mut self, i: usize) {
        self.move_cells(i, false);
        let c = self.labels[i];
        self.labels[i] = UNASSIGNED;
        self.sizes[c] -= 1;
        if self.sizes[c] == 0 {
            self.drop_class(c);
        }
    }

    /// Deletes empty class `c` by moving the last class into its slot.
    fn drop_class(&mut self, c: usize) {
        let last = self.sizes.len() - 1;
        let s = self.stride();
        if c != last {
            for b in 0..=last {
                self.ones[c * s + b] = self.ones[last * s + b];
                self.zeros[c * s + b] = self.zeros[last * s + b];
            }
            for a in 0..=last {
                self.ones[a * s + c] = self.ones[a * s + last];
                self.zeros[a * s + c] = self.zeros[a * s + last];
            }
            // the (last, last) entry now sits at (c, c)
            self.ones[c * s + c] = self.ones[last * s + last];
            self.zeros[c * s + c] = self.zeros[last * s + last];
            for l in self.labels.iter_mut() {
                if *l == last {
                    *l = c;
                }
            }
            self.sizes[c] = self.sizes[last];
        }
        for k in 0..=last {
            self.ones[last * s + k] = 0;
            self.zeros[last * s + k] = 0;
            self.ones[k * s + last] = 0;
            self.zeros[k * s + last] = 0;
        }
        self.sizes.pop();
    }

    fn insert(&mut self, i: usize, c: usize) {
        if c == self.sizes.len() {
            self.sizes.push(0);
        }
        self.sizes[c] += 1;
        self.labels[i] = c;
        self.move_cells(i, true);
    }

    /// Log weights over `0..K` existing classes plus one new class for the
    /// currently unassigned entity `i`.
    fn conditional(&self, i: usize, gamma: f64, table: &LnBetaTable) -> Vec<f64> {
        let k = self.sizes.len();
        let s = self.stride();
        let mut out = vec![(0u32, 0u32); k];
        let mut inc = vec![(0u32, 0u32); k];
        for &(j, v) in &self.nb.outgoing[i] {
            let e = &mut out[self.labels[j]];
            if v == 1 { e.0 += 1 } else { e.1 += 1 }
        }
        for &(j, v) in &self.nb.incoming[i] {
            let e = &mut inc[self.labels[j]];
            if v == 1 { e.0 += 1 } else { e.1 += 1 }
        }
        let own = match self.nb.own[i] {
            Some(1) => (1, 0),
            Some(_) => (0, 1),
            None => (0, 0),
        };
        let f0 = table.f(0, 0);

        let mut weights = Vec::with_capacity(k + 1);
        for c in 0..k {
            let mut delta = 0.0;
            for b in 0..k {
                if b == c {
                    continue;
                }
                let (o1, o0) = out[b];
                if o1 + o0 > 0 {
                    let (n1, n0) = (self.ones[c * s + b], self.zeros[c * s + b]);
                    delta += table.f(n1 + o1, n0 + o0) - table.f(n1, n0);
                }
                let (i1, i0) = inc[b];
                if i1 + i0 > 0 {
                    let (n1, n0) = (self.ones[b * s + c], self.zeros[b * s + c]);
                    delta += table.f(n1 + i1, n0 + i0) - table.f(n1, n0);
                }
            }
            let d1 = out[c].0 + inc[c].0 + own.0;
            let d0 = out[c].1 + inc[c].1 + own.1;
            if d1 + d0 > 0 {
                let (n1, n0) = (self.ones[c * s + c], self.zeros[c * s + c]);
                delta += table.f(n1 + d1, n0 + d0) - table.f(n1, n0);
            }
            weights.push((self.sizes[c] as f64).ln() + delta);
        }

        let mut delta = 0.0;
        for &(a1, a0) in out.iter().chain(inc.iter()) {
            if a1 + a0 > 0 {
                delta += table.f(a1, a0) - f0;
            }
        }
        if own.0 + own.1 > 0 {
            delta += table.f(own.0, own.1) - f0;
        }
        weights.push(gamma.ln() + delta);
        weights
    }

    fn reseat<R: Rng + ?Sized>(&mut self, i: usize, hp: Hyperparameters, table: &LnBetaTable, rng: &mut R) {
        self.remove(i);
        let weights = self.conditional(i, hp.gamma, table);
        let c = sample_log_weights(&weights, rng);
        self.insert(i, c);
    }

    fn sweep<R: Rng + ?Sized>(&mut self, hp: Hyperparameters, rng: &mut R) {
        let table = LnBetaTable::new(hp.alpha, self.nb.observed);
        for i in 0..self.labels.len() {
            self.reseat(i, hp, &table, rng);
        }
    }

    fn log_marginal(&self, alpha: f64) -> f64 {
        let k = self.sizes.len();
        let s = self.stride();
        let base = ln_beta(alpha, alpha);
        let mut total = 0.0;
        for a in 0..k {
            for b in 0..k {
                let (n1, n0) = (self.ones[a * s + b], self.zeros[a * s + b]);
                if n1 + n0 > 0 {
                    total += ln_beta(alpha + n1 as f64, alpha + n0 as f64) - base;
                }
            }
        }
        total
    }

    fn partition(&self) -> Partition {
        Partition::from_labels(&self.labels)
    }
}

/// One Gibbs pass over all entities in index order with `alpha` and `gamma`
/// held fixed. Each entity is removed and re-seated in an existing class or a
/// fresh one with probability proportional to its CRP weight times the
/// collapsed likelihood of the observed cells.
pub fn gibbs_sweep_z<R: Rng + ?Sized>(
    data: &RelationData,
    z: &Partition,
    hp: Hyperparameters,
    rng: &mut R,
) -> Partition {
    let mut state = ClusterState::new(data, z);
    state.sweep(hp, rng);
    state.partition()
}

/// One Metropolis step on `alpha` targeting `p(alpha) p(R | z, alpha)`.
pub fn mh_update_alpha<R: Rng + ?Sized>(
    data: &RelationData,
    z: &Partition,
    hp: Hyperparameters,
    rng: &mut R,
) -> Hyperparameters {
    let counts = PairCounts::new(data, z);
    let alpha = mh_step(hp.alpha, |a| log_alpha_prior(a) + counts.log_marginal(a), rng);
    Hyperparameters { alpha, ..hp }
}

/// One Metropolis step on `gamma` targeting `p(gamma) CRP(z | gamma)`.
pub fn mh_update_gamma<R: Rng + ?Sized>(
    z: &Partition,
    hp: Hyperparameters,
    rng: &mut R,
) -> Hyperparameters {
    let gamma = mh_step(
        hp.gamma,
        |g| log_gamma_prior(g) + log_prior_from_sizes(z.counts(), g),
        rng,
    );
    Hyperparameters { gamma, ..hp }
}

/// Runs the collapsed sampler from `alpha = gamma = 1` and a CRP(1) draw.
pub fn run_irm_chain(data: &RelationData, schedule: &McmcSchedule) -> Result<PosteriorSamples> {
    run_irm_chain_from(data, schedule, Hyperparameters::default(), None)
}

pub fn run_irm_chain_from(
    data: &RelationData,
    schedule: &McmcSchedule,
    init: Hyperparameters,
    init_z: Option<Partition>,
) -> Result<PosteriorSamples> {
    schedule.validate()?;
    let mut rng = rng_from_seed(schedule.seed);
    let z = init_z.unwrap_or_else(|| sample_partition(data.n_entities(), init.gamma, &mut rng));
    let mut state = ClusterState::new(data, &z);
    let mut hp = init;
    let mut draws = Vec::with_capacity(schedule.retained_samples);
    for sweep in 0..schedule.total_sweeps() {
        state.sweep(hp, &mut rng);
        let alpha = mh_step(
            hp.alpha,
            |a| log_alpha_prior(a) + state.log_marginal(a),
            &mut rng,
        );
        let gamma = mh_step(
            hp.gamma,
            |g| log_gamma_prior(g) + log_prior_from_sizes(&state.sizes, g),
            &mut rng,
        );
        hp = Hyperparameters { alpha, gamma };
        let after_burn = sweep + 1;
        if after_burn > schedule.burn_in_sweeps
            && (after_burn - schedule.burn_in_sweeps) % schedule.thinning == 0
        {
            let partition = state.partition();
            draws.push(Draw {
                labels: partition.assignments().to_vec(),
                loglik: state.log_marginal(hp.alpha),
                hyper: Some(hp),
            });
        }
    }
    PosteriorSamples::new(ModelTag::Irm, draws)
}

/// Unclamped per-cell predictions: for each draw, the posterior mean of the
/// cell's class-pair probability given that draw's partition and `alpha`,
/// averaged over draws.
pub fn irm_mean_predictions(
    samples: &PosteriorSamples,
    data: &RelationData,
    cells: &[(usize, usize)],
) -> Vec<f64> {
    let mut sums = vec![0.0; cells.len()];
    for draw in samples.draws() {
        let partition = draw.partition();
        let alpha = draw.hyper.map_or(1.0, |h| h.alpha);
        let counts = PairCounts::new(data, &partition);
        for (sum, &(r, c)) in sums.iter_mut().zip(cells) {
            *sum += counts.posterior_mean(partition.class_of(r), partition.class_of(c), alpha);
        }
    }
    let q = samples.len() as f64;
    sums.into_iter().map(|s| s / q).collect()
}

/// Posterior predictive probabilities for several cells at once.
pub fn irm_predict_cells(
    samples: &PosteriorSamples,
    data: &RelationData,
    cells: &[(usize, usize)],
) -> Vec<f64> {
    irm_mean_predictions(samples, data, cells)
        .into_iter()
        .map(clamp_prob)
        .collect()
}

pub fn irm_predict(samples: &PosteriorSamples, data: &RelationData, cell: (usize, usize)) -> f64 {
    irm_predict_cells(samples, data, &[cell])[0]
}
