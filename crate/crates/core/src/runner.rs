//! Seeded simulation runs, aggregation across seeds and CSV export.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environment::Instance;
use crate::error::{Error, Result};
use crate::indices::IndexKind;
use crate::oracle::gap_constants;
use crate::policies::{Criterion, Grab, KlCombUcb, Policy, RandomPolicy};

/// Column header of the per-checkpoint CSV.
pub const RECORD_HEADER: &str =
    "algo,instance,seed,t,cum_regret,frac_opt_play,frac_opt_leader,elapsed_s";
/// Column header of the aggregated CSV.
pub const AGGREGATE_HEADER: &str =
    "algo,instance,L,mu,delta,horizon,seeds,mean_regret,stderr_regret,normalized_regret";
/// Log-spaced checkpoints added to the powers of ten.
pub const LOG_SPACED_CHECKPOINTS: u32 = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algo {
    Grab,
    GrabPlus,
    KlCombUcb,
    Random,
}

impl Algo {
    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Grab => "grab",
            Algo::GrabPlus => "grab-plus",
            Algo::KlCombUcb => "klcombucb",
            Algo::Random => "random",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grab" => Ok(Algo::Grab),
            "grab-plus" | "grab+" => Ok(Algo::GrabPlus),
            "klcombucb" => Ok(Algo::KlCombUcb),
            "random" => Ok(Algo::Random),
            other => Err(Error::Config(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// How the player qualities of a run are produced.
#[derive(Clone, Debug, PartialEq)]
pub enum InstanceSpec {
    Exp1 {
        l: usize,
        delta: f64,
    },
    Exp2 {
        l: usize,
        mu: f64,
        delta: f64,
        relax_upper: bool,
    },
    Custom {
        theta: Vec<f64>,
    },
}

impl InstanceSpec {
    pub fn build(&self) -> Result<Instance> {
        match self {
            InstanceSpec::Exp1 { l, delta } => Instance::experiment_1(*l, *delta),
            InstanceSpec::Exp2 {
                l,
                mu,
                delta,
                relax_upper,
            } => Instance::experiment_2(*l, *mu, *delta, *relax_upper),
            InstanceSpec::Custom { theta } => Instance::new(theta.clone()),
        }
    }

    /// Comma-free label used in the `instance` CSV column.
    pub fn label(&self) -> String {
        match self {
            InstanceSpec::Exp1 { l, delta } => format!("exp1(L={l} delta={delta})"),
            InstanceSpec::Exp2 { l, mu, delta, .. } => {
                format!("exp2(L={l} mu={mu} delta={delta})")
            }
            InstanceSpec::Custom { theta } => {
                let values: Vec<String> = theta.iter().map(|v| v.to_string()).collect();
                format!("custom({})", values.join(" "))
            }
        }
    }
}

/// Rounds at which a run emits a record.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// Powers of ten plus log-spaced points up to the horizon.
    Geometric,
    /// Every `n` rounds.
    Every(u64),
}

impl Schedule {
    /// Sorted, distinct checkpoints in `1..=horizon`, always ending at the
    /// horizon.
    pub fn checkpoints(self, horizon: u64) -> Vec<u64> {
        let mut points = Vec::new();
        match self {
            Schedule::Geometric => {
                let mut p = 1u64;
                while p <= horizon {
                    points.push(p);
                    match p.checked_mul(10) {
                        Some(next) => p = next,
                        None => break,
                    }
                }
                let log_h = (horizon as f64).ln();
                for i in 1..=LOG_SPACED_CHECKPOINTS {
                    let t = (log_h * i as f64 / LOG_SPACED_CHECKPOINTS as f64)
                        .exp()
                        .round() as u64;
                    points.push(t.clamp(1, horizon));
                }
            }
            Schedule::Every(n) => {
                let n = n.max(1);
                points.extend((1..=horizon / n).map(|k| k * n));
            }
        }
        points.push(horizon);
        points.sort_unstable();
        points.dedup();
        points
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub algo: Algo,
    pub instance: InstanceSpec,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    pub index: IndexKind,
    pub schedule: Schedule,
    /// Record wall-clock seconds in `elapsed_s`; off by default so that
    /// output is reproducible byte for byte.
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn new(algo: Algo, instance: InstanceSpec, horizon: u64) -> Self {
        ExperimentConfig {
            algo,
            instance,
            horizon,
            seeds: vec![0],
            index: IndexKind::SimpleUcb,
            schedule: Schedule::Geometric,
            record_timing: false,
        }
    }

    pub fn with_seeds(mut self, base_seed: u64, count: u64) -> Self {
        self.seeds = (0..count).map(|i| base_seed + i).collect();
        self
    }

    pub fn with_index(mut self, index: IndexKind) -> Self {
        self.index = index;
        self
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    /// Checks the horizon, the seed list and the instance; returns the
    /// instance.
    pub fn validate(&self) -> Result<Instance> {
        if self.horizon < 1 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if let Schedule::Every(0) = self.schedule {
            return Err(Error::Config("trace interval must be at least 1".into()));
        }
        let inst = self.instance.build()?;
        if self.algo == Algo::KlCombUcb && inst.couples() > crate::policies::MAX_EXHAUSTIVE_COUPLES
        {
            return Err(Error::TooLarge {
                l: inst.couples(),
                max: crate::policies::MAX_EXHAUSTIVE_COUPLES,
            });
        }
        Ok(inst)
    }

    /// `#`-prefixed lines echoing the configuration.
    pub fn comment_lines(&self) -> Vec<String> {
        let schedule = match self.schedule {
            Schedule::Geometric => "geometric".to_string(),
            Schedule::Every(n) => format!("every-{n}"),
        };
        let seeds: Vec<String> = self.seeds.iter().map(|s| s.to_string()).collect();
        vec![
            format!("algo={}", self.algo),
            format!("instance={}", self.instance.label()),
            format!("horizon={}", self.horizon),
            format!("seeds={}", seeds.join(" ")),
            format!("index={}", self.index),
            format!("schedule={schedule}"),
        ]
    }
}

/// One checkpoint of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algo: String,
    pub instance: String,
    pub seed: u64,
    pub t: u64,
    /// Cumulative pseudo-regret up to and including round `t`.
    pub cum_regret: f64,
    /// Share of rounds since the previous checkpoint that played the
    /// optimal matching.
    pub frac_opt_play: f64,
    /// Share of rounds since the previous checkpoint whose elected leader
    /// was the optimum leader; empty for policies without a leader.
    pub frac_opt_leader: Option<f64>,
    pub elapsed_s: Option<f64>,
}

fn make_policy(config: &ExperimentConfig, inst: &Instance, seed: u64) -> Result<Box<dyn Policy>> {
    let l = inst.couples();
    Ok(match config.algo {
        Algo::Grab => Box::new(Grab::new(l, Criterion::V1, config.index)?),
        Algo::GrabPlus => Box::new(Grab::new(l, Criterion::V2, config.index)?),
        Algo::KlCombUcb => Box::new(KlCombUcb::new(l)?),
        Algo::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1);
            Box::new(RandomPolicy::with_rng(l, rng))
        }
    })
}

/// Runs `config` for `config.horizon` rounds with `seed`.
pub fn run_single(config: &ExperimentConfig, seed: u64) -> Result<Vec<RunRecord>> {
    let inst = config.validate()?;
    run_on_instance(config, &inst, seed)
}

fn run_on_instance(
    config: &ExperimentConfig,
    inst: &Instance,
    seed: u64,
) -> Result<Vec<RunRecord>> {
    let started = Instant::now();
    let mut policy = make_policy(config, inst, seed)?;
    let mut env_rng = ChaCha8Rng::seed_from_u64(seed);
    let label = config.instance.label();
    let optimal = inst.optimal_matching();
    let optimum_leader = inst.optimum_leader();

    let checkpoints = config.schedule.checkpoints(config.horizon);
    let mut records = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().copied().peekable();

    let mut cum_regret = 0.0;
    let mut window = 0u64;
    let mut optimal_plays = 0u64;
    let mut optimal_leaders = 0u64;
    let mut leader_known = false;

    for t in 1..=config.horizon {
        let decision = policy.recommend(t);
        let feedback = inst.sample_feedback(&decision.matching, &mut env_rng);
        cum_regret += inst.pseudo_regret(&decision.matching);
        window += 1;
        if decision.matching == *optimal {
            optimal_plays += 1;
        }
        if let (Some(leader), Some(best)) = (decision.leader.as_ref(), optimum_leader) {
            leader_known = true;
            if leader == best {
                optimal_leaders += 1;
            }
        }
        policy.update(&decision, &feedback)?;

        if next.peek() == Some(&t) {
            next.next();
            records.push(RunRecord {
                algo: config.algo.to_string(),
                instance: label.clone(),
                seed,
                t,
                cum_regret,
                frac_opt_play: optimal_plays as f64 / window as f64,
                frac_opt_leader: leader_known.then(|| optimal_leaders as f64 / window as f64),
                elapsed_s: config
                    .record_timing
                    .then(|| started.elapsed().as_secs_f64()),
            });
            window = 0;
            optimal_plays = 0;
            optimal_leaders = 0;
        }
    }
    Ok(records)
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Runs every seed of `config`, in parallel over at most `threads` workers
/// (all cores when `None`). Records come back grouped by seed, in the
/// order of `config.seeds`.
pub fn run_all(config: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<RunRecord>> {
    let inst = config.validate()?;
    let pool = thread_pool(threads)?;
    let per_seed: Vec<Result<Vec<RunRecord>>> = pool.install(|| {
        config
            .seeds
            .par_iter()
            .map(|&seed| run_on_instance(config, &inst, seed))
            .collect()
    });
    let mut out = Vec::new();
    for records in per_seed {
        out.extend(records?);
    }
    Ok(out)
}

/// Writes `records` as CSV, preceded by `#`-prefixed `comments`.
pub fn write_csv<W: Write>(records: &[RunRecord], comments: &[String], out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    for line in comments {
        writeln!(out, "# {line}")?;
    }
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for record in records {
        writer.serialize(record)?;
    }
    if records.is_empty() {
        writer.write_record(RECORD_HEADER.split(','))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn emit_csv(records: &[RunRecord], comments: &[String], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Config("no records to write".into()));
    }
    write_csv(records, comments, File::create(path)?)
}

/// Reads records written by [`write_csv`], skipping comment lines.
pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let mut out = Vec::new();
    for row in reader.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

pub fn read_csv_file(path: &Path) -> Result<Vec<RunRecord>> {
    read_csv(File::open(path)?)
}

/// Comment lines at the top of a CSV file, without the `# ` prefix.
pub fn read_comments(path: &Path) -> Result<Vec<String>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        match line.strip_prefix('#') {
            Some(rest) => out.push(rest.trim_start().to_string()),
            None => break,
        }
    }
    Ok(out)
}

/// Mean and standard error of the final cumulative regret of one
/// (algorithm, instance) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub algo: String,
    pub instance: String,
    #[serde(rename = "L")]
    pub l: usize,
    pub mu: f64,
    pub delta: f64,
    pub horizon: u64,
    pub seeds: usize,
    pub mean_regret: f64,
    pub stderr_regret: f64,
    /// `mean_regret * Δ / L`; empty when the instance has no strict
    /// inter-pair order.
    pub normalized_regret: Option<f64>,
}

/// Sample mean and standard error (`sd / sqrt(n)`, with the `n - 1`
/// variance); the error is 0 for a single value.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Final cumulative regret of each seed in `records` (last checkpoint per
/// seed), in first-appearance order.
pub fn final_regrets(records: &[RunRecord]) -> Vec<(u64, f64)> {
    let mut out: Vec<(u64, u64, f64)> = Vec::new();
    for r in records {
        match out.iter_mut().find(|(seed, _, _)| *seed == r.seed) {
            Some(entry) => {
                if r.t >= entry.1 {
                    entry.1 = r.t;
                    entry.2 = r.cum_regret;
                }
            }
            None => out.push((r.seed, r.t, r.cum_regret)),
        }
    }
    out.into_iter()
        .map(|(seed, _, regret)| (seed, regret))
        .collect()
}

/// Aggregates the records of one configuration.
pub fn aggregate(config: &ExperimentConfig, records: &[RunRecord]) -> Result<AggregateRow> {
    let inst = config.validate()?;
    let regrets: Vec<f64> = final_regrets(records).into_iter().map(|(_, r)| r).collect();
    let (mean, stderr) = mean_and_stderr(&regrets);
    let l = inst.couples();
    let normalized = gap_constants(&inst).ok().map(|c| mean * c.delta / l as f64);
    let (mu, delta) = match &config.instance {
        InstanceSpec::Exp1 { l, delta } => ((*l as f64 - 1.0) * delta / 2.0, *delta),
        InstanceSpec::Exp2 { mu, delta, .. } => (*mu, *delta),
        InstanceSpec::Custom { theta } => {
            (theta.iter().sum::<f64>() / theta.len() as f64, f64::NAN)
        }
    };
    Ok(AggregateRow {
        algo: config.algo.to_string(),
        instance: config.instance.label(),
        l,
        mu,
        delta,
        horizon: config.horizon,
        seeds: regrets.len(),
        mean_regret: mean,
        stderr_regret: stderr,
        normalized_regret: normalized,
    })
}

pub fn write_aggregate_csv<W: Write>(
    rows: &[AggregateRow],
    comments: &[String],
    out: W,
) -> Result<()> {
    let mut out = BufWriter::new(out);
    for line in comments {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "# normalized_regret = mean_regret * Delta / L")?;
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_aggregate_csv<R: std::io::Read>(input: R) -> Result<Vec<AggregateRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let mut out = Vec::new();
    for row in reader.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Settings shared by the two sweep experiments.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSettings {
    pub algos: Vec<Algo>,
    pub horizon: u64,
    pub base_seed: u64,
    pub seeds: u64,
    pub index: IndexKind,
    pub schedule: Schedule,
    pub threads: Option<usize>,
}

/// Raw records and per-cell aggregates of a sweep.
#[derive(Clone, Debug, Default)]
pub struct SweepResult {
    pub records: Vec<RunRecord>,
    pub rows: Vec<AggregateRow>,
}

fn run_sweep(specs: Vec<InstanceSpec>, settings: &SweepSettings) -> Result<SweepResult> {
    let configs: Vec<ExperimentConfig> = specs
        .iter()
        .flat_map(|spec| {
            settings.algos.iter().map(move |&algo| ExperimentConfig {
                algo,
                instance: spec.clone(),
                horizon: settings.horizon,
                seeds: (0..settings.seeds)
                    .map(|i| settings.base_seed + i)
                    .collect(),
                index: settings.index,
                schedule: settings.schedule,
                record_timing: false,
            })
        })
        .collect();
    let mut jobs = Vec::new();
    for (c, config) in configs.iter().enumerate() {
        let inst = config.validate()?;
        for &seed in &config.seeds {
            jobs.push((c, inst.clone(), seed));
        }
    }
    let pool = thread_pool(settings.threads)?;
    let finished: Vec<Result<Vec<RunRecord>>> = pool.install(|| {
        jobs.par_iter()
            .map(|(c, inst, seed)| run_on_instance(&configs[*c], inst, *seed))
            .collect()
    });
    let mut per_config: Vec<Vec<RunRecord>> = vec![Vec::new(); configs.len()];
    for ((c, _, _), records) in jobs.iter().zip(finished) {
        per_config[*c].extend(records?);
    }
    let mut result = SweepResult::default();
    for (config, records) in configs.iter().zip(per_config) {
        result.rows.push(aggregate(config, &records)?);
        result.records.extend(records);
    }
    Ok(result)
}

/// Sweep over `L` on experiment-1 instances with gap `delta`.
pub fn run_experiment_1(ls: &[usize], delta: f64, settings: &SweepSettings) -> Result<SweepResult> {
    let specs = ls
        .iter()
        .map(|&l| InstanceSpec::Exp1 { l, delta })
        .collect();
    run_sweep(specs, settings)
}

/// Sweep over the mean quality `mu` on experiment-2 instances.
pub fn run_experiment_2(
    mus: &[f64],
    l: usize,
    delta: f64,
    relax_upper: bool,
    settings: &SweepSettings,
) -> Result<SweepResult> {
    let specs = mus
        .iter()
        .map(|&mu| InstanceSpec::Exp2 {
            l,
            mu,
            delta,
            relax_upper,
        })
        .collect();
    run_sweep(specs, settings)
}
