//! Command-line driver: parses flags and scenario files, runs one scenario
//! and writes its CSV files.

pub mod config;

use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use tangle_sim::attack::{run_attack, AttackSize, CutSet, ParasiteKind, ParasiteSpec};
use tangle_sim::bench::{bench, DEFAULT_BENCH_LAMBDA};
use tangle_sim::metrics::{
    check_tip_approval_relation, exit_profile, run_batch, run_recorded, scaling_study, summarize_approval,
    summarize_tips, RecordOptions, DEFAULT_ORPHAN_HORIZON,
};
use tangle_sim::{output, SelectorKind, SimConfig};

use crate::config::{List, Resolver, ScenarioFile};

#[derive(Debug, Parser)]
#[command(name = "tanglesim", version, about = "Continuous-time Tangle simulator")]
pub struct Cli {
    /// Scenario file with key=value lines; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for multi-run subcommands (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One run: tips.csv, tip_hist.csv, approval.csv, cw.csv.
    Simulate(SimulateArgs),
    /// Many runs at one setting, summarized into scaling.csv.
    Batch(BatchArgs),
    /// Batches over several arrival rates: scaling.csv.
    Scaling(ScalingArgs),
    /// Ranked, run-averaged exit probabilities: exit_profile.csv.
    Exitprofile(ExitArgs),
    /// Parasite-chain attack on a grown Tangle: attack.csv.
    Attack(AttackArgs),
    /// Runtime against Tangle size: bench.csv.
    Bench(BenchArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct SelectorFlags {
    /// urts, urw, brw (needs --alpha), walk, or brw:<alpha>.
    #[arg(long)]
    pub selector: Option<String>,
    /// Walk bias; 0 is the unbiased walk.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct TimeFlags {
    #[arg(long)]
    pub duration: Option<f64>,
    /// Recording starts at this simulated time.
    #[arg(long)]
    pub warmup: Option<f64>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonFlags {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, alias = "output_dir", value_name = "DIR")]
    pub output_dir: Option<String>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct SimulateArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[command(flatten)]
    pub selector: SelectorFlags,
    #[command(flatten)]
    pub time: TimeFlags,
    #[command(flatten)]
    pub common: CommonFlags,
    /// Unapproved this long after issuance counts as an orphan.
    #[arg(long, alias = "orphan_horizon")]
    pub orphan_horizon: Option<f64>,
    /// Transactions whose cumulative weight is traced into cw.csv.
    #[arg(long)]
    pub tracked: Option<usize>,
    #[arg(long, alias = "max_transactions")]
    pub max_transactions: Option<usize>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct BatchArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[command(flatten)]
    pub selector: SelectorFlags,
    #[command(flatten)]
    pub time: TimeFlags,
    #[command(flatten)]
    pub common: CommonFlags,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long, alias = "orphan_horizon")]
    pub orphan_horizon: Option<f64>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct ScalingArgs {
    /// Comma-separated arrival rates.
    #[arg(long)]
    pub lambdas: Option<List<f64>>,
    #[command(flatten)]
    pub selector: SelectorFlags,
    #[command(flatten)]
    pub time: TimeFlags,
    #[command(flatten)]
    pub common: CommonFlags,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long, alias = "orphan_horizon")]
    pub orphan_horizon: Option<f64>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct ExitArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[command(flatten)]
    pub selector: SelectorFlags,
    #[command(flatten)]
    pub time: TimeFlags,
    #[command(flatten)]
    pub common: CommonFlags,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Selections per grown Tangle.
    #[arg(long)]
    pub walks: Option<usize>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct AttackArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Selector that grows the honest Tangle.
    #[command(flatten)]
    pub selector: SelectorFlags,
    #[command(flatten)]
    pub time: TimeFlags,
    #[command(flatten)]
    pub common: CommonFlags,
    /// tip_flood or cut_set_chain.
    #[arg(long)]
    pub kind: Option<ParasiteKind>,
    /// Flood tips, or chain budget: a count or a multiple of the honest
    /// tip count such as 3L.
    #[arg(long, alias = "size", alias = "attacker_size")]
    pub attacker_size: Option<AttackSize>,
    /// Target share of cut-set approvers (chain only).
    #[arg(long)]
    pub kappa: Option<f64>,
    /// genesis_approvers or genesis.
    #[arg(long, alias = "cut_set")]
    pub cut_set: Option<CutSet>,
    /// Selectors whose confidence in the double-spend is measured.
    #[arg(long)]
    pub evaluate: Option<List<SelectorKind>>,
    /// Selections per confidence estimate.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct BenchArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[command(flatten)]
    pub selector: SelectorFlags,
    #[command(flatten)]
    pub common: CommonFlags,
    /// Comma-separated transaction counts.
    #[arg(long, alias = "tx_counts")]
    pub tx_counts: Option<List<usize>>,
    /// Repetitions per size; the fastest is kept.
    #[arg(long)]
    pub reps: Option<usize>,
}

const SIM_KEYS: [&str; 7] = ["lambda", "selector", "alpha", "duration", "warmup", "seed", "output_dir"];

fn keys(extra: &[&'static str]) -> Vec<&'static str> {
    SIM_KEYS.iter().chain(extra).copied().collect()
}

/// Files produced by one command, held in memory until everything has
/// succeeded so that a failing command leaves nothing behind.
struct Outputs {
    dir: PathBuf,
    files: Vec<(&'static str, Vec<u8>)>,
}

impl Outputs {
    fn new(dir: PathBuf) -> Self {
        Outputs { dir, files: Vec::new() }
    }

    fn add(&mut self, name: &'static str, f: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf).with_context(|| format!("formatting {name}"))?;
        self.files.push((name, buf));
        Ok(())
    }

    fn write(self, used: &[(String, String)]) -> Result<()> {
        let mut files = self.files;
        let mut echo = Vec::new();
        output::write_config_used(&mut echo, used)?;
        files.push(("config_used.txt", echo));
        for (name, bytes) in files {
            output::write_file(&self.dir, name, |w| w.write_all(&bytes))
                .with_context(|| format!("writing {}", self.dir.join(name).display()))?;
        }
        Ok(())
    }
}

/// Runs a parsed command line, printing summaries to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let file = match &cli.config {
        Some(path) => ScenarioFile::load(path)?,
        None => ScenarioFile::default(),
    };
    if cli.jobs == Some(0) {
        bail!("--jobs must be at least 1");
    }
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.unwrap_or(0)).build().context("starting worker pool")?;
    let mut report = Vec::new();
    let result = pool.install(|| {
        let buf = &mut report;
        match cli.command {
            Command::Simulate(a) => simulate(a, file, buf),
            Command::Batch(a) => batch(a, file, buf),
            Command::Scaling(a) => scaling(a, file, buf),
            Command::Exitprofile(a) => exitprofile(a, file, buf),
            Command::Attack(a) => attack(a, file, buf),
            Command::Bench(a) => bench_cmd(a, file, buf),
        }
    });
    out.write_all(&report)?;
    result
}

/// Parses `args` (program name first) and runs them.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    execute(Cli::try_parse_from(args)?, out)
}

fn sim_config(
    r: &mut Resolver,
    lambda: Option<f64>,
    sel: SelectorFlags,
    time: TimeFlags,
    seed: Option<u64>,
    default_selector: &str,
) -> Result<SimConfig> {
    let lambda = r.value("lambda", lambda, 100.0)?;
    base_config(r, lambda, sel, time, seed, default_selector)
}

fn base_config(
    r: &mut Resolver,
    lambda: f64,
    sel: SelectorFlags,
    time: TimeFlags,
    seed: Option<u64>,
    default_selector: &str,
) -> Result<SimConfig> {
    let selector = r.selector(sel.selector, sel.alpha, default_selector)?;
    let config = SimConfig::new(lambda, selector)
        .with_duration(r.value("duration", time.duration, tangle_sim::arrival::DEFAULT_DURATION)?)
        .with_warmup(r.value("warmup", time.warmup, tangle_sim::arrival::DEFAULT_WARMUP)?)
        .with_seed(r.value("seed", seed, 0)?);
    Ok(config)
}

fn output_dir(r: &mut Resolver, flag: Option<String>, command: &str) -> Result<PathBuf> {
    Ok(PathBuf::from(r.value("output_dir", flag, format!("output/{command}"))?))
}

fn record_options(r: &mut Resolver, horizon: Option<f64>, tracked: usize) -> Result<RecordOptions> {
    let orphan_horizon = r.value("orphan_horizon", horizon, DEFAULT_ORPHAN_HORIZON)?;
    if orphan_horizon.is_nan() || orphan_horizon < 0.0 {
        bail!("orphan_horizon must be >= 0");
    }
    Ok(RecordOptions { orphan_horizon, tracked })
}

fn positive(name: &str, v: usize) -> Result<usize> {
    if v == 0 {
        bail!("{name} must be at least 1");
    }
    Ok(v)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| format!("{x:.4}"))
}

fn simulate(a: SimulateArgs, file: ScenarioFile, out: &mut dyn Write) -> Result<()> {
    let mut r = Resolver::new(file, "simulate", &keys(&["orphan_horizon", "tracked", "max_transactions"]))?;
    let mut config = sim_config(&mut r, a.lambda, a.selector, a.time, a.common.seed, "urts")?;
    let tracked = r.value("tracked", a.tracked, 1)?;
    let options = record_options(&mut r, a.orphan_horizon, tracked)?;
    config.max_transactions = r.optional("max_transactions", a.max_transactions)?;
    let dir = output_dir(&mut r, a.common.output_dir, "simulate")?;
    config.validate()?;

    let (_, record) = run_recorded(&config, &options)?;
    let tips = summarize_tips(&record).ok();
    let approval = summarize_approval(&record).ok();

    let mut files = Outputs::new(dir.clone());
    files.add("tips.csv", |b| output::write_tips(b, &record))?;
    files.add("tip_hist.csv", |b| output::write_tip_hist(b, &record))?;
    files.add("approval.csv", |b| output::write_approval(b, &record))?;
    files.add("cw.csv", |b| output::write_cw(b, &record))?;
    files.write(r.used())?;

    writeln!(
        out,
        "lambda={} selector={} EL={} sigma={} tA={}",
        config.lambda,
        config.selector,
        fmt_opt(tips.map(|s| s.mean)),
        fmt_opt(tips.map(|s| s.std)),
        fmt_opt(approval.map(|s| s.mean)),
    )?;
    if record.truncated {
        writeln!(out, "note: stopped at the transaction cap at t={}", record.end_time)?;
    }
    if record.orphan_count > 0 {
        writeln!(out, "orphans={}", record.orphan_count)?;
    }
    writeln!(out, "output={}", dir.display())?;
    Ok(())
}

fn batch(a: BatchArgs, file: ScenarioFile, out: &mut dyn Write) -> Result<()> {
    let mut r = Resolver::new(file, "batch", &keys(&["runs", "orphan_horizon"]))?;
    let config = sim_config(&mut r, a.lambda, a.selector, a.time, a.common.seed, "urts")?;
    let runs = positive("runs", r.value("runs", a.runs, 100)?)?;
    let options = record_options(&mut r, a.orphan_horizon, 0)?;
    let dir = output_dir(&mut r, a.common.output_dir, "batch")?;
    config.validate()?;

    let (summary, _) = run_batch(&config, runs, &options)?;
    let mut files = Outputs::new(dir.clone());
    files.add("scaling.csv", |b| output::write_scaling(b, std::slice::from_ref(&summary)))?;
    files.write(r.used())?;

    writeln!(
        out,
        "lambda={} selector={} EL={:.4} sigma={:.4} tA={:.4}",
        config.lambda, config.selector, summary.mean_tips, summary.std_tips, summary.mean_ta
    )?;
    writeln!(
        out,
        "runs={runs} sigma_tA={:.4} orphans={} relation_residual={:.4}",
        summary.std_ta,
        summary.orphans,
        check_tip_approval_relation(summary.mean_tips, summary.mean_ta, config.lambda)
    )?;
    writeln!(out, "output={}", dir.display())?;
    Ok(())
}

fn scaling(a: ScalingArgs, file: ScenarioFile, out: &mut dyn Write) -> Result<()> {
    let allowed: Vec<&str> =
        keys(&["lambdas", "runs", "orphan_horizon"]).into_iter().filter(|k| *k != "lambda").collect();
    let mut r = Resolver::new(file, "scaling", &allowed)?;
    let lambdas = r.value("lambdas", a.lambdas, List(vec![10.0, 100.0, 1000.0]))?;
    let base = base_config(&mut r, lambdas.0[0], a.selector, a.time, a.common.seed, "urts")?;
    let runs = positive("runs", r.value("runs", a.runs, 100)?)?;
    let options = record_options(&mut r, a.orphan_horizon, 0)?;
    let dir = output_dir(&mut r, a.common.output_dir, "scaling")?;
    for &lambda in &lambdas.0 {
        SimConfig { lambda, ..base.clone() }.validate()?;
    }

    let study = scaling_study(&lambdas.0, &base, runs, &options)?;
    let mut files = Outputs::new(dir.clone());
    files.add("scaling.csv", |b| output::write_scaling(b, &study.rows))?;
    files.write(r.used())?;

    for row in &study.rows {
        writeln!(
            out,
            "lambda={} selector={} EL={:.4} sigma={:.4} tA={:.4}",
            row.lambda, row.selector, row.mean_tips, row.std_tips, row.mean_ta
        )?;
    }
    if let (Some(m), Some(s)) = (study.mean_exponent, study.std_exponent) {
        writeln!(out, "loglog_exponent_EL={m:.4} loglog_exponent_sigma={s:.4}")?;
    }
    writeln!(out, "output={}", dir.display())?;
    Ok(())
}

fn exitprofile(a: ExitArgs, file: ScenarioFile, out: &mut dyn Write) -> Result<()> {
    let mut r = Resolver::new(file, "exitprofile", &keys(&["runs", "walks"]))?;
    let config = sim_config(&mut r, a.lambda, a.selector, a.time, a.common.seed, "urw")?;
    let runs = positive("runs", r.value("runs", a.runs, 50)?)?;
    let walks = positive("walks", r.value("walks", a.walks, 100_000)?)?;
    let dir = output_dir(&mut r, a.common.output_dir, "exitprofile")?;
    config.validate()?;

    let profile = exit_profile(&config, runs, walks)?;
    let mut files = Outputs::new(dir.clone());
    files.add("exit_profile.csv", |b| output::write_exit_profile(b, &profile))?;
    files.write(r.used())?;

    let top: Vec<String> = profile.probabilities.iter().take(5).map(|p| format!("{p:.4}")).collect();
    writeln!(
        out,
        "lambda={} selector={} runs={runs} walks={walks} ranks={} top={}",
        config.lambda,
        config.selector,
        profile.probabilities.len(),
        top.join(",")
    )?;
    writeln!(out, "output={}", dir.display())?;
    Ok(())
}

fn attack(a: AttackArgs, file: ScenarioFile, out: &mut dyn Write) -> Result<()> {
    let mut r =
        Resolver::new(file, "attack", &keys(&["kind", "attacker_size", "kappa", "cut_set", "evaluate", "samples"]))?;
    let config = sim_config(&mut r, a.lambda, a.selector, a.time, a.common.seed, "urts")?;
    let kind = r.value("kind", a.kind, ParasiteKind::TipFlood)?;
    let default_size = match kind {
        ParasiteKind::TipFlood => AttackSize::TipMultiple(3.0),
        ParasiteKind::CutSetChain => AttackSize::Absolute(1_000_000),
    };
    let size = r.value("attacker_size", a.attacker_size, default_size)?;
    let kappa = r.value("kappa", a.kappa, 0.6)?;
    let cut_set = r.value("cut_set", a.cut_set, CutSet::default())?;
    let evaluators =
        r.value("evaluate", a.evaluate, List(vec![SelectorKind::Urts, SelectorKind::Walk { alpha: 0.0 }]))?;
    let samples = positive("samples", r.value("samples", a.samples, 100_000)?)?;
    let dir = output_dir(&mut r, a.common.output_dir, "attack")?;
    config.validate()?;
    let spec = ParasiteSpec { kind, size: 1, kappa, ..ParasiteSpec::tip_flood(1) }.with_cut_set(cut_set);
    spec.validate()?;
    if size == AttackSize::Absolute(0) {
        bail!("attacker size must be at least 1");
    }

    let outcomes = run_attack(&config, &spec, size, &evaluators.0, samples)?;
    let mut files = Outputs::new(dir.clone());
    files.add("attack.csv", |b| output::write_attack(b, &outcomes))?;
    files.write(r.used())?;

    for o in &outcomes {
        writeln!(
            out,
            "kind={} selector={} attacker_size={} honest_tips={} confidence={:.4}",
            o.kind, o.selector, o.attacker_size, o.honest_tips, o.confidence
        )?;
    }
    writeln!(out, "output={}", dir.display())?;
    Ok(())
}

fn bench_cmd(a: BenchArgs, file: ScenarioFile, out: &mut dyn Write) -> Result<()> {
    let allowed = ["lambda", "selector", "alpha", "seed", "output_dir", "tx_counts", "reps"];
    let mut r = Resolver::new(file, "bench", &allowed)?;
    let lambda = r.value("lambda", a.lambda, DEFAULT_BENCH_LAMBDA)?;
    let selector = r.selector(a.selector.selector, a.selector.alpha, "urts")?;
    let seed = r.value("seed", a.common.seed, 0)?;
    let counts = r.value("tx_counts", a.tx_counts, List(vec![10_000, 30_000, 100_000]))?;
    let reps = positive("reps", r.value("reps", a.reps, 1)?)?;
    let dir = output_dir(&mut r, a.common.output_dir, "bench")?;
    SimConfig::new(lambda, selector).validate()?;
    if counts.0.contains(&0) {
        bail!("tx_counts entries must be at least 1");
    }

    let report = bench(selector, lambda, &counts.0, reps, seed)?;
    let mut files = Outputs::new(dir.clone());
    files.add("bench.csv", |b| output::write_bench(b, &report.rows))?;
    files.write(r.used())?;

    for row in &report.rows {
        writeln!(out, "selector={} n={} seconds={:.4}", row.selector, row.n, row.seconds)?;
    }
    if let Some(e) = report.exponent {
        writeln!(out, "exponent={e:.3}")?;
    }
    writeln!(out, "output={}", dir.display())?;
    Ok(())
}
