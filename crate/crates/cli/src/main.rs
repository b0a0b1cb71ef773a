use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use relgen::formats;
use relgen::{make_split, rng_from_seed, simulate_interactions, McmcSchedule, SplitSpec};
use relgen_cli::config::{ScheduleConfig, TauSearch};
use relgen_cli::experiment::synthetic_systems;
use relgen_cli::summary::write_summary;
use relgen_cli::{
    infer, run_experiment, summarize, ExperimentConfig, ModelKind, PoolMode, TauChoice, TauMode,
};

#[derive(Parser)]
#[command(name = "relgen", version, about = "Theory, analogy and hybrid relational generalization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic system files.
    Generate(GenerateArgs),
    /// Simulate a dataset from a system file and split it.
    Simulate(SimulateArgs),
    /// Fit one model to one dataset and predict its test cells.
    Infer(InferArgs),
    /// Run the full experiment grid and write the results table.
    Experiment(ExperimentArgs),
    /// Aggregate a results table by model, K and observed fraction.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 101)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 3)]
    min_classes: usize,
    #[arg(long, default_value_t = 6)]
    max_classes: usize,
    #[arg(long, default_value_t = 30)]
    probe_entities: usize,
    /// Directory receiving `<name>.json` files.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long, default_value_t = 30)]
    entities: usize,
    #[arg(long, default_value_t = 0.5)]
    observed: f64,
    #[arg(long, default_value_t = 0.1)]
    test: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InferArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    model: ModelKind,
    /// Stored systems for the analogy and hybrid models.
    #[arg(long)]
    systems_dir: Option<PathBuf>,
    /// Fixed tau for the hybrid; optimized on the test cells when omitted.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    thinning: Option<usize>,
    /// Predictions CSV (row, col, truth, probability); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON report with evidences and weights.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    entities: Option<usize>,
    /// Comma-separated observed fractions.
    #[arg(long, value_delimiter = ',')]
    fractions: Option<Vec<f64>>,
    /// Comma-separated stored-system counts.
    #[arg(long, value_delimiter = ',')]
    k_values: Option<Vec<usize>>,
    /// Comma-separated subset of irm, analogy, hybrid.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<ModelKind>>,
    #[arg(long)]
    systems_dir: Option<PathBuf>,
    #[arg(long)]
    targets: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses one per core.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    tau_mode: Option<TauMode>,
    #[arg(long)]
    pool: Option<PoolMode>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    thinning: Option<usize>,
    /// Record wall-clock seconds per row (makes the output non-reproducible).
    #[arg(long)]
    timings: bool,
    #[arg(long)]
    out: PathBuf,
    /// Also write the aggregate table here.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Leave the smallest observed fraction out of the aggregate table.
    #[arg(long)]
    exclude_smallest_partition: bool,
    /// Exit successfully even if some rows failed.
    #[arg(long)]
    keep_going: bool,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    exclude_smallest_partition: bool,
}

fn schedule(base: ScheduleConfig, burn_in: Option<usize>, samples: Option<usize>, thinning: Option<usize>) -> ScheduleConfig {
    ScheduleConfig {
        burn_in_sweeps: burn_in.unwrap_or(base.burn_in_sweeps),
        retained_samples: samples.unwrap_or(base.retained_samples),
        thinning: thinning.unwrap_or(base.thinning),
    }
}

fn generate(args: GenerateArgs) -> anyhow::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.master_seed = args.seed;
    cfg.synthetic.count = args.count;
    cfg.synthetic.gamma = args.gamma;
    cfg.synthetic.alpha = args.alpha;
    cfg.synthetic.min_classes = args.min_classes;
    cfg.synthetic.max_classes = args.max_classes;
    cfg.synthetic.probe_entities = args.probe_entities;
    cfg.validate()?;
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    for system in synthetic_systems(&cfg)? {
        let path = args.out_dir.join(format!("{}.json", system.name()));
        formats::write_system(&path, &system)?;
    }
    info!("wrote {} systems to {}", args.count, args.out_dir.display());
    Ok(())
}

fn simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let system = formats::read_system(&args.system)?;
    let mut rng = rng_from_seed(args.seed);
    let (data, _) = simulate_interactions(&system, args.entities, &mut rng)?;
    let spec = SplitSpec {
        observed_fraction: args.observed,
        test_fraction: args.test,
        seed: relgen::derive_seed(args.seed, &[1]),
    };
    formats::write_dataset(&args.out, &make_split(&data, &spec)?)?;
    Ok(())
}

fn load_pool(dir: Option<&Path>) -> anyhow::Result<Vec<relgen::StoredSystem>> {
    match dir {
        Some(dir) => Ok(formats::read_systems_dir(dir)?),
        None => Ok(Vec::new()),
    }
}

fn run_infer(args: InferArgs) -> anyhow::Result<()> {
    let data = formats::read_dataset(&args.dataset)?;
    let systems = load_pool(args.systems_dir.as_deref())?;
    if args.model != ModelKind::Irm && systems.is_empty() {
        bail!("--systems-dir with at least one system is required for {}", args.model);
    }
    let sched = schedule(ScheduleConfig::default(), args.burn_in, args.samples, args.thinning);
    let sched: McmcSchedule = sched.with_seed(args.seed);
    let tau = match args.tau {
        Some(t) => TauChoice::Fixed(t),
        None => TauChoice::Optimize(TauSearch::default()),
    };
    let report = infer(&data, args.model, &systems, &sched, tau)?;

    let mut table = String::from("row,col,truth,probability\n");
    for (&(r, c), p) in report.cells.iter().zip(&report.predictions) {
        table.push_str(&format!("{r},{c},{},{p}\n", data.value(r, c)));
    }
    match &args.out {
        Some(path) => std::fs::write(path, table).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{table}"),
    }
    let json = serde_json::to_string_pretty(&report)?;
    match &args.report {
        Some(path) => std::fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))?,
        None => {
            if let Some(score) = report.score {
                eprintln!("score {score}");
            }
        }
    }
    Ok(())
}

fn experiment_config(args: &ExperimentArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = args.entities {
        cfg.entity_count = v;
    }
    if let Some(v) = &args.fractions {
        cfg.observed_fractions = v.clone();
    }
    if let Some(v) = &args.k_values {
        cfg.stored_system_counts = v.clone();
    }
    if let Some(v) = &args.models {
        cfg.models = v.clone();
    }
    if let Some(v) = &args.systems_dir {
        cfg.systems_dir = Some(v.clone());
    }
    if let Some(v) = args.targets {
        cfg.n_target_systems = Some(v);
    }
    if let Some(v) = args.seed {
        cfg.master_seed = v;
    }
    if let Some(v) = args.workers {
        cfg.workers = v;
    }
    if let Some(v) = args.tau_mode {
        cfg.tau_mode = v;
    }
    if let Some(v) = args.pool {
        cfg.pool = v;
    }
    cfg.mcmc = schedule(cfg.mcmc, args.burn_in, args.samples, args.thinning);
    cfg.record_timings |= args.timings;
    cfg.validate()?;
    Ok(cfg)
}

/// Returns whether every row succeeded.
fn experiment(args: ExperimentArgs) -> anyhow::Result<bool> {
    let cfg = experiment_config(&args)?;
    let rows = run_experiment(&cfg)?;
    relgen_cli::results::write_rows(&args.out, &rows)?;
    let failed = rows.iter().filter(|r| r.is_error()).count();
    info!("{} rows written to {}, {failed} failed", rows.len(), args.out.display());
    if let Some(path) = &args.summary {
        write_summary(path, &summarize(&rows, args.exclude_smallest_partition)?)?;
    }
    if failed > 0 {
        for row in rows.iter().filter(|r| r.is_error()).take(5) {
            warn!(
                "{} fraction {} {} K={}: {}",
                row.target,
                row.observed_fraction,
                row.model,
                row.k,
                row.error.as_deref().unwrap_or_default()
            );
        }
        if args.keep_going {
            warn!("{failed} rows failed");
        } else {
            return Ok(false);
        }
    }
    Ok(true)
}

fn run_summarize(args: SummarizeArgs) -> anyhow::Result<()> {
    let rows = relgen_cli::results::read_rows(&args.input)?;
    write_summary(&args.out, &summarize(&rows, args.exclude_smallest_partition)?)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(a) => generate(a).map(|()| true),
        Command::Simulate(a) => simulate(a).map(|()| true),
        Command::Infer(a) => run_infer(a).map(|()| true),
        Command::Experiment(a) => experiment(a),
        Command::Summarize(a) => run_summarize(a).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
