use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use unimatch::indices::IndexKind;
use unimatch::oracle::{gap_constants, verify_lemmas};
use unimatch::runner::{
    emit_csv, run_all, run_experiment_1, run_experiment_2, write_aggregate_csv, write_csv, Algo,
    ExperimentConfig, InstanceSpec, Schedule, SweepResult, SweepSettings,
};
use unimatch::{Error, Result};

#[derive(Parser)]
#[command(
    name = "unimatch",
    version,
    about = "Unimodal bandits for online mono-partite matching"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one algorithm on one instance over several seeds.
    Run(RunArgs),
    /// Machine-check the structural lemmas on random small instances.
    Verify(VerifyArgs),
    /// Sweep the number of couples on experiment-1 instances.
    Exp1(Exp1Args),
    /// Sweep the mean quality on experiment-2 instances.
    Exp2(Exp2Args),
    /// Print the gap constants of an instance.
    Gaps(InstanceArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Grab,
    GrabPlus,
    Klcombucb,
    Random,
}

impl From<AlgoArg> for Algo {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Grab => Algo::Grab,
            AlgoArg::GrabPlus => Algo::GrabPlus,
            AlgoArg::Klcombucb => Algo::KlCombUcb,
            AlgoArg::Random => Algo::Random,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum IndexArg {
    Klucb,
    SimpleUcb,
}

impl From<IndexArg> for IndexKind {
    fn from(a: IndexArg) -> Self {
        match a {
            IndexArg::Klucb => IndexKind::KlUcb,
            IndexArg::SimpleUcb => IndexKind::SimpleUcb,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum InstanceKind {
    Exp1,
    Exp2,
    Custom,
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long, value_enum)]
    instance: InstanceKind,
    /// Number of couples.
    #[arg(long = "L")]
    l: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// Comma-separated player qualities for a custom instance.
    #[arg(long, value_delimiter = ',')]
    theta: Option<Vec<f64>>,
    /// Accept experiment-2 instances with mu + (L+1) delta > 1.
    #[arg(long)]
    relax_exp2_constraint: bool,
}

impl InstanceArgs {
    fn spec(&self) -> Result<InstanceSpec> {
        let need = |name: &str| Error::Config(format!("--{name} is required for this instance"));
        Ok(match self.instance {
            InstanceKind::Exp1 => InstanceSpec::Exp1 {
                l: self.l.ok_or_else(|| need("L"))?,
                delta: self.delta.ok_or_else(|| need("delta"))?,
            },
            InstanceKind::Exp2 => InstanceSpec::Exp2 {
                l: self.l.ok_or_else(|| need("L"))?,
                mu: self.mu.ok_or_else(|| need("mu"))?,
                delta: self.delta.ok_or_else(|| need("delta"))?,
                relax_upper: self.relax_exp2_constraint,
            },
            InstanceKind::Custom => InstanceSpec::Custom {
                theta: self.theta.clone().ok_or_else(|| need("theta"))?,
            },
        })
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    algo: AlgoArg,
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    horizon: u64,
    /// Number of replications.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    base_seed: u64,
    #[arg(long, value_enum, default_value = "simple-ucb")]
    index: IndexArg,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit a record every n rounds instead of at geometric checkpoints.
    #[arg(long)]
    trace_every: Option<u64>,
    /// Worker threads (all cores by default).
    #[arg(long)]
    threads: Option<usize>,
    /// Record wall-clock seconds in the elapsed_s column.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Check optimality of the paired ranking, leader uniqueness and
    /// relaxed unimodality (the only suite; accepted for clarity).
    #[arg(long)]
    lemmas: bool,
    #[arg(long = "L-max", default_value_t = 4)]
    l_max: usize,
    #[arg(long, default_value_t = 20)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    /// Algorithms to compare.
    #[arg(long, value_enum, value_delimiter = ',', default_values = ["grab", "grab-plus"])]
    algos: Vec<AlgoArg>,
    #[arg(long, default_value_t = 1_000_000)]
    horizon: u64,
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    base_seed: u64,
    #[arg(long, value_enum, default_value = "simple-ucb")]
    index: IndexArg,
    /// Aggregated table; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-seed checkpoint records.
    #[arg(long)]
    raw_out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

impl SweepArgs {
    fn settings(&self) -> SweepSettings {
        SweepSettings {
            algos: self.algos.iter().map(|&a| a.into()).collect(),
            horizon: self.horizon,
            base_seed: self.base_seed,
            seeds: self.seeds,
            index: self.index.into(),
            schedule: Schedule::Geometric,
            threads: self.threads,
        }
    }
}

#[derive(Args)]
struct Exp1Args {
    #[arg(long = "L-min", default_value_t = 2)]
    l_min: usize,
    #[arg(long = "L-max", default_value_t = 6)]
    l_max: usize,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[command(flatten)]
    sweep: SweepArgs,
}

#[derive(Args)]
struct Exp2Args {
    /// Comma-separated mean qualities.
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.55, 0.6])]
    mu: Vec<f64>,
    #[arg(long = "L", default_value_t = 4)]
    l: usize,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long)]
    relax_exp2_constraint: bool,
    #[command(flatten)]
    sweep: SweepArgs,
}

fn run(args: RunArgs) -> Result<()> {
    let mut config = ExperimentConfig::new(args.algo.into(), args.instance.spec()?, args.horizon)
        .with_seeds(args.base_seed, args.seeds)
        .with_index(args.index.into());
    if let Some(n) = args.trace_every {
        config = config.with_schedule(Schedule::Every(n));
    }
    config.record_timing = args.timing;
    let records = run_all(&config, args.threads)?;
    let comments = config.comment_lines();
    match &args.out {
        Some(path) => emit_csv(&records, &comments, path),
        None => write_csv(&records, &comments, std::io::stdout().lock()),
    }
}

fn verify(args: VerifyArgs) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let report = verify_lemmas(args.l_max, args.instances, &mut rng)?;
    for t in &report.tallies {
        println!(
            "L={} instances={} optimum_failures={} uniqueness_failures={} \
             unimodality_checked={} unimodality_counterexamples={}",
            t.couples,
            t.instances,
            t.optimum_failures,
            t.uniqueness_failures,
            t.unimodality_checked,
            t.unimodality_counterexamples
        );
    }
    let passed = report.passed();
    println!("{}", if passed { "PASS" } else { "FAIL" });
    Ok(passed)
}

fn write_sweep(result: &SweepResult, sweep: &SweepArgs, comments: Vec<String>) -> Result<()> {
    if let Some(path) = &sweep.raw_out {
        emit_csv(&result.records, &comments, path)?;
    }
    match &sweep.out {
        Some(path) => write_aggregate_csv(&result.rows, &comments, File::create(path)?),
        None => write_aggregate_csv(&result.rows, &comments, std::io::stdout().lock()),
    }
}

fn sweep_comments(kind: &str, sweep: &SweepArgs, extra: Vec<String>) -> Vec<String> {
    let algos: Vec<String> = sweep
        .settings()
        .algos
        .iter()
        .map(|a| a.to_string())
        .collect();
    let mut lines = vec![
        format!("experiment={kind}"),
        format!("algos={}", algos.join(" ")),
        format!("horizon={}", sweep.horizon),
        format!("seeds={} base_seed={}", sweep.seeds, sweep.base_seed),
        format!("index={}", IndexKind::from(sweep.index)),
    ];
    lines.extend(extra);
    lines
}

fn exp1(args: Exp1Args) -> Result<()> {
    let ls: Vec<usize> = (args.l_min..=args.l_max).collect();
    let result = run_experiment_1(&ls, args.delta, &args.sweep.settings())?;
    let comments = sweep_comments(
        "exp1",
        &args.sweep,
        vec![format!(
            "L={}..{} delta={}",
            args.l_min, args.l_max, args.delta
        )],
    );
    write_sweep(&result, &args.sweep, comments)
}

fn exp2(args: Exp2Args) -> Result<()> {
    let result = run_experiment_2(
        &args.mu,
        args.l,
        args.delta,
        args.relax_exp2_constraint,
        &args.sweep.settings(),
    )?;
    let mus: Vec<String> = args.mu.iter().map(|m| m.to_string()).collect();
    let comments = sweep_comments(
        "exp2",
        &args.sweep,
        vec![format!(
            "L={} mu={} delta={}",
            args.l,
            mus.join(" "),
            args.delta
        )],
    );
    write_sweep(&result, &args.sweep, comments)
}

fn gaps(args: InstanceArgs) -> Result<()> {
    let inst = args.spec()?.build()?;
    let c = gap_constants(&inst)?;
    println!("delta={}", c.delta);
    println!("delta_tilde={}", c.delta_tilde);
    for ((m, gap), k) in c.neighbor_gaps.iter().zip(&c.differing_pairs) {
        println!("neighbor={m} gap={gap} differing_pairs={k}");
    }
    println!("grab_log_coefficient={}", c.grab_log_coefficient);
    println!("grab_plus_log_coefficient={}", c.grab_plus_log_coefficient);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args).map(|_| true),
        Command::Verify(args) => verify(args),
        Command::Exp1(args) => exp1(args).map(|_| true),
        Command::Exp2(args) => exp2(args).map(|_| true),
        Command::Gaps(args) => gaps(args).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
