//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so the lines always print; exits non-zero if any check fails.

#[path = "../../core/tests/oracle/mod.rs"]
mod oracle;

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand_distr::{Beta, Distribution};
use relgen::{
    crp_assignment_probs, crp_log_prior, generate_synthetic_system, harmonic_mean_evidence,
    hybrid_prior, irm_predict_cells, likelihood::ln_beta, make_split, optimize_tau,
    rng_from_seed, run_irm_chain, run_stored_chain, run_stored_chains, simulate_interactions,
    stored_mean_predictions, AnalogyFit, HybridComponents, McmcSchedule, Partition, SplitSpec,
};
use relgen_cli::{emit_rows, run_experiment, ExperimentConfig, ModelKind, PoolMode, ResultRow};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn oracle_schedule(seed: u64) -> McmcSchedule {
    McmcSchedule {
        burn_in_sweeps: 500,
        retained_samples: 20_000,
        thinning: 2,
        seed,
    }
}

fn irm_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut instances = 0;
    let mut seed = 0u64;
    while instances < 20 {
        seed += 1;
        let data = oracle::random_instance(4, 0.6, 10_000 + seed);
        let cells = data.test_cells().to_vec();
        if cells.is_empty() {
            continue;
        }
        instances += 1;
        let exact = oracle::exact_irm_predictive(&data, &cells);
        let samples = run_irm_chain(&data, &oracle_schedule(seed)).unwrap();
        for (e, a) in exact.iter().zip(irm_predict_cells(&samples, &data, &cells)) {
            worst = worst.max((e - a).abs());
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 0.02 && elapsed < Duration::from_secs(60),
        format!("{instances} instances, max |error| {worst:.4}, {:.1}s", elapsed.as_secs_f64()),
    )
}

fn analogy_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for inst in 0..20u64 {
        let data = oracle::random_instance(3, 0.6, 20_000 + inst);
        let system = oracle::random_system(2, 30_000 + inst);
        let cells: Vec<(usize, usize)> = (0..9)
            .map(|k| (k / 3, k % 3))
            .filter(|&(r, c)| !data.is_observed(r, c))
            .collect();
        let exact = oracle::exact_stored_predictive(&data, &system, &cells);
        let samples = run_stored_chain(&data, &system, &oracle_schedule(inst)).unwrap();
        let approx = stored_mean_predictions(&samples, &system, &cells);
        for (e, a) in exact.iter().zip(&approx) {
            worst = worst.max((e - a).abs());
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 0.02 && elapsed < Duration::from_secs(60),
        format!("20 systems, max |error| {worst:.4}, {:.1}s", elapsed.as_secs_f64()),
    )
}

fn crp_checks() -> Outcome {
    let mut worst_norm = 0.0f64;
    for n in 1..=5 {
        for gamma in [0.1, 1.0, 3.7] {
            let total: f64 = oracle::enumerate_partitions(n)
                .iter()
                .map(|z| crp_log_prior(&Partition::from_labels(z), gamma).exp())
                .sum();
            worst_norm = worst_norm.max((total - 1.0).abs());
        }
    }
    let mut rng = rng_from_seed(7);
    let labels: Vec<usize> = (0..12).map(|i| (i * 7) % 4 + i / 9).collect();
    let z = Partition::from_labels(&labels);
    let base = crp_log_prior(&z, 1.3);
    let exchangeable = (0..100).all(|_| {
        let mut perm: Vec<usize> = (0..12).collect();
        perm.shuffle(&mut rng);
        crp_log_prior(&z.permute(&perm), 1.3) == base
    });
    let sums_to_one = [vec![], vec![1], vec![3, 1, 4], vec![10; 6]].iter().all(|counts| {
        [0.01, 1.0, 50.0]
            .iter()
            .all(|&g| (crp_assignment_probs(counts, g).iter().sum::<f64>() - 1.0).abs() < 1e-12)
    });
    outcome(
        worst_norm <= 1e-9 && exchangeable && sums_to_one,
        format!(
            "max normalization error {worst_norm:.1e}, exchangeable {exchangeable}, conditionals sum to one {sums_to_one}"
        ),
    )
}

fn evidence_checks() -> Outcome {
    let mut rng = rng_from_seed(11);
    let mut worst = 0.0f64;
    for &(n1, n0, alpha) in &[(7.0, 3.0, 1.0), (2.0, 8.0, 0.5), (15.0, 5.0, 2.0), (0.0, 4.0, 1.0)] {
        let exact = ln_beta(alpha + n1, alpha + n0) - ln_beta(alpha, alpha);
        let posterior = Beta::new(alpha + n1, alpha + n0).unwrap();
        let logliks: Vec<f64> = (0..10_000)
            .map(|_| {
                let theta: f64 = posterior.sample(&mut rng);
                n1 * theta.ln() + n0 * (1.0 - theta).ln()
            })
            .collect();
        worst = worst.max((harmonic_mean_evidence(&logliks).unwrap() - exact).abs());
    }
    let c = -17.25;
    let constant = harmonic_mean_evidence(&vec![c; 500]).unwrap() == c;
    outcome(
        worst <= 0.3 && constant,
        format!("max |error| {worst:.3} nats at Q = 10^4, constant draws exact {constant}"),
    )
}

fn analogical_recovery() -> Outcome {
    let start = Instant::now();
    let mut hits = 0;
    for trial in 0..20u64 {
        let mut rng = rng_from_seed(40_000 + trial);
        let systems: Vec<_> = (0..5)
            .map(|k| generate_synthetic_system(format!("s{k}"), 1.0, 1.0, 3..=6, 30, &mut rng).unwrap())
            .collect();
        let truth = (trial % 5) as usize;
        let (data, _) = simulate_interactions(&systems[truth], 30, &mut rng).unwrap();
        let data = make_split(&data, &SplitSpec::new(0.5, trial)).unwrap();
        let fit = AnalogyFit::fit(&data, &systems, &McmcSchedule::default().with_seed(trial)).unwrap();
        if fit.report.best() == truth {
            hits += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        hits >= 16 && elapsed < Duration::from_secs(300),
        format!("true system ranked first in {hits}/20 trials, {:.1}s", elapsed.as_secs_f64()),
    )
}

/// 40 synthetic targets at every fraction; each pool holds the target and
/// one other system. Harmonic-mean evidences of the IRM and of stored
/// systems routinely differ by more than ln(10^4), so the tau bracket is
/// widened until both limits of the hybrid are reachable.
fn trend_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.synthetic.count = 40;
    cfg.n_target_systems = Some(40);
    cfg.stored_system_counts = vec![2];
    cfg.pool = PoolMode::IncludeTarget;
    cfg.tau_search.log10_lower = -30.0;
    cfg.tau_search.log10_upper = 30.0;
    cfg.master_seed = 2024;
    cfg
}

fn mean_score(rows: &[ResultRow], model: ModelKind, fraction_index: usize) -> f64 {
    let scores: Vec<f64> = rows
        .iter()
        .filter(|r| r.model == model && r.fraction_index == fraction_index)
        .map(|r| r.score.expect("row succeeded"))
        .collect();
    scores.iter().sum::<f64>() / scores.len() as f64
}

fn trends(rows: &[ResultRow], elapsed: Duration) -> Outcome {
    let irm: Vec<f64> = (0..9).map(|f| mean_score(rows, ModelKind::Irm, f)).collect();
    let analogy: Vec<f64> = (0..9).map(|f| mean_score(rows, ModelKind::Analogy, f)).collect();
    let learns = irm[8] < irm[0];
    let early = (0..3).all(|f| analogy[f] < irm[f]);
    outcome(
        learns && early && elapsed < Duration::from_secs(1800),
        format!(
            "IRM mean score {:.2} at 0.1 vs {:.2} at 0.9; analogy vs IRM at 0.1-0.3: {}; {:.1}s",
            irm[0],
            irm[8],
            (0..3)
                .map(|f| format!("{:.2}/{:.2}", analogy[f], irm[f]))
                .collect::<Vec<_>>()
                .join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn hybrid_dominance(rows: &[ResultRow]) -> Outcome {
    let mut worst_gap = f64::NEG_INFINITY;
    for f in 0..9 {
        let hybrid = mean_score(rows, ModelKind::Hybrid, f);
        let best = mean_score(rows, ModelKind::Irm, f).min(mean_score(rows, ModelKind::Analogy, f));
        worst_gap = worst_gap.max(hybrid - best);
    }
    outcome(
        worst_gap <= 0.5,
        format!("max over fractions of hybrid - min(IRM, analogy) = {worst_gap:.3} nats"),
    )
}

fn limit_identities() -> Outcome {
    let mut rng = rng_from_seed(50);
    let systems: Vec<_> = (0..3)
        .map(|k| generate_synthetic_system(format!("s{k}"), 1.0, 1.0, 3..=6, 30, &mut rng).unwrap())
        .collect();
    let (data, _) = simulate_interactions(&systems[1], 20, &mut rng).unwrap();
    let data = make_split(&data, &SplitSpec::new(0.4, 3)).unwrap();
    let sched = McmcSchedule::default().with_seed(5);
    let stored = run_stored_chains(&data, &systems, &sched).unwrap();
    let irm = run_irm_chain(&data, &sched).unwrap();
    let cells = data.test_cells().to_vec();
    let comps = HybridComponents::new(&stored, &irm, &systems, &data, &cells).unwrap();
    let analogy = AnalogyFit::from_samples(&systems, stored.clone())
        .unwrap()
        .predict_cells(&systems, &cells)
        .unwrap();
    let theory = irm_predict_cells(&irm, &data, &cells);
    let max_diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);

    let (tiny, huge) = (1e-250, 1e250);
    let weights_ok = comps.theory_weight(tiny).unwrap() < 1e-9 && comps.theory_weight(huge).unwrap() > 1.0 - 1e-9;
    let low = max_diff(&comps.predict(tiny).unwrap(), &analogy);
    let high = max_diff(&comps.predict(huge).unwrap(), &theory);

    let mut norm = 0.0f64;
    for k in [1, 2, 5, 10, 100] {
        for tau in [1e-4, 0.3, 1.0, 7.5, 1e4] {
            norm = norm.max((hybrid_prior(k, tau).unwrap().iter().sum::<f64>() - 1.0).abs());
        }
    }
    let tol = 1e-4;
    let opt = optimize_tau(|t| -(t.log10() - 0.5).powi(2), -4.0, 4.0, tol).unwrap();
    let peak = (opt.log10_tau - 0.5).abs() <= tol;
    outcome(
        weights_ok && low <= 1e-6 && high <= 1e-6 && norm <= 1e-12 && peak,
        format!(
            "analogy limit {low:.1e}, IRM limit {high:.1e}, prior normalization {norm:.1e}, argmax log10 tau {:.6}",
            opt.log10_tau
        ),
    )
}

fn determinism() -> Outcome {
    let mut cfg = ExperimentConfig::default();
    cfg.entity_count = 12;
    cfg.synthetic.count = 6;
    cfg.n_target_systems = Some(3);
    cfg.observed_fractions = vec![0.2, 0.5, 0.8];
    cfg.stored_system_counts = vec![2, 5];
    cfg.mcmc.burn_in_sweeps = 100;
    cfg.mcmc.retained_samples = 40;
    cfg.master_seed = 99;
    let run = |workers: usize| {
        let mut c = cfg.clone();
        c.workers = workers;
        emit_rows(&run_experiment(&c).unwrap()).unwrap()
    };
    let first = run(1);
    let same = [run(1), run(4), run(0)].iter().all(|t| *t == first);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    relgen_cli::results::write_rows(&path, &run_experiment(&cfg).unwrap()).unwrap();
    let file_same = std::fs::read_to_string(&path).unwrap() == first;
    outcome(
        same && file_same,
        format!("{} bytes, identical across 5 runs and worker counts: {}", first.len(), same && file_same),
    )
}

fn main() {
    let start = Instant::now();
    let grid_start = Instant::now();
    let grid = run_experiment(&trend_config());
    let grid_elapsed = grid_start.elapsed();
    let (c6, c7) = match &grid {
        Ok(rows) if rows.iter().all(|r| !r.is_error()) => (trends(rows, grid_elapsed), hybrid_dominance(rows)),
        Ok(rows) => {
            let e = rows.iter().find(|r| r.is_error()).and_then(|r| r.error.clone()).unwrap_or_default();
            (outcome(false, format!("row failed: {e}")), outcome(false, "grid incomplete"))
        }
        Err(e) => (outcome(false, e.to_string()), outcome(false, "grid failed")),
    };
    let results = [
        ("1 IRM matches exact posterior", irm_oracle()),
        ("2 stored system matches exact posterior", analogy_oracle()),
        ("3 CRP prior", crp_checks()),
        ("4 harmonic-mean evidence", evidence_checks()),
        ("5 analogical recovery", analogical_recovery()),
        ("6 learning curves", c6),
        ("7 hybrid dominance", c7),
        ("8 hybrid limits", limit_identities()),
        ("9 determinism", determinism()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "{} of {} criteria passed in {:.1}s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
