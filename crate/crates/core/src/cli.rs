//! The `abcs` command line.
//!
//! Every command writes into `--out` a `config.json` echo of its arguments,
//! its artifacts, and a `manifest.json` with the SHA-256 of each artifact.
//! Exit codes: 0 success, 2 configuration or input error, 3 numerical
//! non-convergence.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use ndarray::Array1;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::model::{Instance, Mode};
use crate::oracle::{self, OracleOptions, OracleResult};
use crate::policy::{PolicyKind, Threshold, Tracking};
use crate::sim::{self, RunOptions, TracedRun};

pub const SEED_ENV: &str = "ABCS_SEED";

#[derive(Debug, Parser)]
#[command(name = "abcs", version, about = "Identify all arms better than a control across subpopulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Characteristic time and oracle weights of an instance.
    Oracle(OracleArgs),
    /// Repeated episodes of one or more policies on one instance.
    Simulate(SimulateArgs),
    /// Risk calibration over random single-population instances.
    Calibrate(CalibrateArgs),
    /// Average stopping times over random multi-population instances.
    Sweep(SweepArgs),
    /// Policies replayed on a logged dataset.
    Replay(ReplayArgs),
    /// Writes a synthetic event log drawn from an instance.
    SynthLog(SynthLogArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Master seed (falls back to $ABCS_SEED, then 0).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct OracleArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, default_value = "agnostic", conflicts_with = "all_modes")]
    pub mode: Mode,
    /// Solve every available mode and check their ordering.
    #[arg(long)]
    pub all_modes: bool,
    /// Require an exact Gaussian closed form.
    #[arg(long)]
    pub closed_form: bool,
    /// Target relative gap of the iterative solver.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long, default_value_t = 50_000)]
    pub max_iters: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EpisodeArgs {
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = sim::DEFAULT_HORIZON)]
    pub horizon: u64,
    #[arg(long, default_value = "stylized")]
    pub threshold: Threshold,
    #[arg(long, default_value = "d")]
    pub tracking: Tracking,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

impl EpisodeArgs {
    fn options(&self, trace_stride: Option<u64>) -> RunOptions {
        RunOptions {
            delta: self.delta,
            horizon: self.horizon,
            threshold: self.threshold,
            tracking: self.tracking,
            workers: self.workers.max(1),
            trace_stride,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Instance JSON file.
    #[arg(long, conflicts_with = "generate")]
    pub instance: Option<PathBuf>,
    /// Random Bernoulli instance `ARMS:SUBPOPS` (treatment arms, then
    /// subpopulations), importance from a symmetric Dirichlet(10).
    #[arg(long)]
    pub generate: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "tas")]
    pub policy: Vec<PolicyKind>,
    #[arg(long, value_delimiter = ',', default_value = "agnostic")]
    pub mode: Vec<Mode>,
    #[arg(long, default_value_t = 100)]
    pub reps: u64,
    /// Write every N-th round of each episode under `trace/`.
    #[arg(long)]
    pub trace_stride: Option<u64>,
    /// Skip the oracle bounds.
    #[arg(long)]
    pub no_bounds: bool,
    #[command(flatten)]
    pub episode: EpisodeArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct CalibrateArgs {
    #[arg(long, default_value_t = 1000)]
    pub instances: u64,
    /// Treatment arms per instance.
    #[arg(long, default_value_t = 2)]
    pub arms: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.2,0.1,0.05,0.02,0.01,0.005,0.002,0.001")]
    pub delta_grid: Vec<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    pub horizon: u64,
    #[arg(long, default_value = "stylized")]
    pub threshold: Threshold,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 3000)]
    pub instances: u64,
    /// Treatment arms per instance.
    #[arg(long, default_value_t = 2)]
    pub arms: usize,
    #[command(flatten)]
    pub episode: EpisodeArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct ReplayArgs {
    /// Event log with header `subpopulation,arm,outcome`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "bernoulli")]
    pub outcomes: String,
    /// Policies as `kind:mode`.
    #[arg(long, value_delimiter = ',', default_value = "tas:active,tas:proportional,tas:agnostic,uniform:agnostic")]
    pub policies: Vec<String>,
    #[arg(long, default_value_t = 1)]
    pub reps: u64,
    /// Draw with replacement instead of consuming the log.
    #[arg(long)]
    pub bootstrap: bool,
    #[arg(long, default_value_t = 10_000)]
    pub trace_stride: u64,
    #[command(flatten)]
    pub episode: EpisodeArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthLogArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::NotConverged(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "error: {m}"),
            CliError::NotConverged(m) => write!(f, "not converged: {m}"),
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

fn resolve_seed(seed: Option<u64>) -> Result<u64, CliError> {
    match seed {
        Some(s) => Ok(s),
        None => match std::env::var(SEED_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| CliError::Input(format!("{SEED_ENV}='{v}' is not an integer"))),
            Err(_) => Ok(0),
        },
    }
}

/// Collects artifacts of one command and writes the manifest.
struct Output {
    dir: PathBuf,
    artifacts: Vec<(String, String)>,
}

impl Output {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Output { dir: dir.to_path_buf(), artifacts: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(input)?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
        self.artifacts.push((name.to_owned(), hex::encode(Sha256::digest(bytes))));
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value).map_err(input)?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(input)?;
        }
        let bytes = w.into_inner().map_err(input)?;
        self.write(name, &bytes)
    }

    fn finish<C: Serialize>(mut self, command: &str, seed: Option<u64>, config: &C) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Echo<'a, C> {
            command: &'a str,
            seed: Option<u64>,
            args: &'a C,
        }
        let echo = Echo { command, seed, args: config };
        self.json("config.json", &echo)?;
        #[derive(Serialize)]
        struct Artifact<'a> {
            path: &'a str,
            sha256: &'a str,
        }
        #[derive(Serialize)]
        struct Manifest<'a, C> {
            command: &'a str,
            seed: Option<u64>,
            config: &'a C,
            artifacts: Vec<Artifact<'a>>,
        }
        let manifest = Manifest {
            command,
            seed,
            config,
            artifacts: self.artifacts.iter().map(|(p, h)| Artifact { path: p, sha256: h }).collect(),
        };
        let mut s = serde_json::to_string_pretty(&manifest).map_err(input)?;
        s.push('\n');
        fs::write(self.dir.join("manifest.json"), s).map_err(input)
    }
}

fn load_instance(path: &Path) -> Result<Instance, CliError> {
    Instance::from_json_file(path).map_err(input)
}

fn write_runs(out: &mut Output, runs: &[TracedRun]) -> Result<(), CliError> {
    let records: Vec<_> = runs.iter().map(|r| r.record.clone()).collect();
    out.csv("runs.csv", &records)?;
    out.csv("summary.csv", &sim::summarize(&records))?;
    for r in runs.iter().filter(|r| !r.trace.is_empty()) {
        out.csv(&format!("trace/{}.csv", r.trace_name()), &r.trace)?;
    }
    Ok(())
}

fn print_summary(runs: &[sim::RunRecord]) {
    for s in sim::summarize(runs) {
        println!(
            "{:<8} {:<12} runs={} mean_stop={:.1} censored={} errors={}",
            s.policy, s.mode, s.runs, s.mean_stop_time, s.censored, s.errors
        );
    }
}

pub fn cmd_oracle(args: &OracleArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.instance)?;
    let opts = OracleOptions { tol: args.tol, max_iters: args.max_iters, perturb_seed: None };
    let solve = |mode: Mode| -> Result<OracleResult, CliError> {
        inst.meta().check_mode(mode).map_err(input)?;
        if args.closed_form {
            oracle::tstar_ab_gaussian(&inst, mode).or_else(|_| oracle::homoscedastic_oracle(&inst, mode)).map_err(input)
        } else {
            oracle::solve(&inst, mode, &opts).map_err(input)
        }
    };
    let mut out = Output::new(&args.out)?;
    let results: Vec<OracleResult> = if args.all_modes {
        let mut rs = Vec::new();
        for mode in Mode::ALL {
            match solve(mode) {
                Ok(r) => rs.push(r),
                Err(e) => eprintln!("skipping {mode}: {}", e),
            }
        }
        rs
    } else {
        vec![solve(args.mode)?]
    };
    for r in &results {
        let t = if r.tstar.is_finite() { format!("{:.6e}", r.tstar) } else { "inf".into() };
        println!(
            "{:<12} tstar={t} gap={:.2e} iterations={} arm_marginals=[{}]",
            r.mode.as_str(),
            r.gap(),
            r.iterations,
            format_marginals(&r.arm_marginals())
        );
    }
    let reports: Vec<_> = results.iter().map(OracleResult::report).collect();
    if args.all_modes {
        let ordered = results.windows(2).all(|p| p[0].tstar <= p[1].tstar * (1.0 + 1e-3));
        println!("ordering {}", if ordered { "holds" } else { "VIOLATED" });
        #[derive(Serialize)]
        struct AllModes<'a> {
            results: &'a [oracle::OracleReport],
            ordering_holds: bool,
        }
        out.json("oracle.json", &AllModes { results: &reports, ordering_holds: ordered })?;
    } else {
        out.json("oracle.json", &reports[0])?;
    }
    out.finish("oracle", None, args)?;
    let stuck: Vec<_> = results.iter().filter(|r| !r.converged).map(|r| format!("{} gap {:.2e}", r.mode, r.gap())).collect();
    if stuck.is_empty() {
        Ok(())
    } else {
        Err(CliError::NotConverged(stuck.join(", ")))
    }
}

fn parse_generate(spec: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Input(format!("--generate expects ARMS:SUBPOPS, got '{spec}'"));
    let (a, j) = spec.split_once(':').ok_or_else(bad)?;
    let (a, j) = (a.trim().parse().map_err(|_| bad())?, j.trim().parse::<usize>().map_err(|_| bad())?);
    if j == 0 {
        return Err(bad());
    }
    Ok((a, j))
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.common.seed)?;
    let inst = match (&args.instance, &args.generate) {
        (Some(path), _) => load_instance(path)?,
        (None, Some(g)) => {
            let (arms, j) = parse_generate(g)?;
            let mut rng = sim::episode_rng(seed, u64::MAX);
            let alpha = sim::gen_alpha_dirichlet(j, 10.0, &mut rng);
            sim::gen_instance_uniform(arms, &alpha, &mut rng)
        }
        (None, None) => return Err(CliError::Input("one of --instance or --generate is required".into())),
    };
    let policies: Vec<(PolicyKind, Mode)> = args.policy.iter().flat_map(|&p| args.mode.iter().map(move |&m| (p, m))).collect();
    let opts = args.episode.options(args.trace_stride);
    let runs = sim::experiment_fixed_instance(&inst, &policies, args.reps, seed, &opts).map_err(input)?;
    let mut out = Output::new(&args.common.out)?;
    out.json("instance.json", &inst.to_spec())?;
    write_runs(&mut out, &runs)?;
    if !args.no_bounds {
        let mut modes: Vec<Mode> = policies.iter().map(|p| p.1).collect();
        modes.sort();
        modes.dedup();
        let b = sim::bounds(&inst, &modes, args.episode.delta, &OracleOptions::default()).map_err(input)?;
        out.json("bounds.json", &b)?;
    }
    print_summary(&runs.iter().map(|r| r.record.clone()).collect::<Vec<_>>());
    out.finish("simulate", Some(seed), args)
}

pub fn cmd_calibrate(args: &CalibrateArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.common.seed)?;
    if args.delta_grid.is_empty() || args.delta_grid.iter().any(|&d| !(d > 0.0 && d <= 1.0)) {
        return Err(CliError::Input("--delta-grid values must lie in (0, 1]".into()));
    }
    let opts = RunOptions { horizon: args.horizon, threshold: args.threshold, workers: args.workers.max(1), ..RunOptions::default() };
    let rows = sim::experiment_calibrate(args.instances, args.arms, &args.delta_grid, seed, &opts).map_err(input)?;
    let mut out = Output::new(&args.common.out)?;
    out.csv("calibration.csv", &rows)?;
    for &d in &args.delta_grid {
        let at: Vec<_> = rows.iter().filter(|r| r.delta_level == d).collect();
        let wrong = at.iter().filter(|r| r.ever_wrong).count();
        let crossed = at.iter().filter(|r| r.crossed).count();
        println!("delta={d:<8} crossed={crossed}/{} error_fraction={:.4}", at.len(), wrong as f64 / at.len().max(1) as f64);
    }
    out.finish("calibrate", Some(seed), args)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.common.seed)?;
    let runs = sim::experiment_sweep(args.instances, args.arms, seed, &args.episode.options(None)).map_err(input)?;
    let mut out = Output::new(&args.common.out)?;
    out.csv("runs.csv", &runs)?;
    out.csv("summary.csv", &sim::summarize(&runs))?;
    print_summary(&runs);
    out.finish("sweep", Some(seed), args)
}

fn parse_policy(s: &str) -> Result<(PolicyKind, Mode), CliError> {
    let (k, m) = s.split_once(':').ok_or_else(|| CliError::Input(format!("policy '{s}' is not kind:mode")))?;
    Ok((k.parse().map_err(CliError::Input)?, m.parse().map_err(CliError::Input)?))
}

pub fn cmd_replay(args: &ReplayArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.common.seed)?;
    let kind = match args.outcomes.as_str() {
        "bernoulli" => sim::OutcomeKind::Bernoulli,
        "gaussian" => sim::OutcomeKind::Gaussian,
        other => return Err(CliError::Input(format!("unknown outcome kind '{other}'"))),
    };
    let policies = args.policies.iter().map(|s| parse_policy(s)).collect::<Result<Vec<_>, _>>()?;
    let data = Arc::new(sim::ReplayData::load(&args.data, kind, None).map_err(input)?);
    println!("log: {} rows, {} arms, {} subpopulations", data.capacity(), data.arms(), data.subpops());
    let opts = args.episode.options(Some(args.trace_stride));
    let runs = sim::experiment_replay(data.clone(), &policies, args.reps, seed, args.bootstrap, &opts).map_err(input)?;
    let mut out = Output::new(&args.common.out)?;
    out.json("instance.json", &data.instance().map_err(input)?.to_spec())?;
    write_runs(&mut out, &runs)?;
    for r in &runs {
        let r = &r.record;
        let end = if r.exhausted { "exhausted" } else if r.censored { "censored" } else { "stopped" };
        println!("{:<8} {:<12} rep={} {end} at {} delta_hat={:.3e} correct={}", r.policy, r.mode, r.seed, r.rounds, r.delta_final, r.correct);
    }
    out.finish("replay", Some(seed), args)
}

pub fn cmd_synth_log(args: &SynthLogArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.seed)?;
    let inst = load_instance(&args.instance)?;
    if !inst.meta().alpha_equals_beta() {
        eprintln!("note: subpopulations are drawn from alpha; beta is not recorded in the log");
    }
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(input)?;
    }
    let file = fs::File::create(&args.out).map_err(|e| CliError::Input(format!("cannot create {}: {e}", args.out.display())))?;
    let mut rng = sim::episode_rng(seed, 0);
    sim::write_synthetic_log(std::io::BufWriter::new(file), &inst, args.rows, &mut rng).map_err(input)?;
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Oracle(a) => cmd_oracle(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Replay(a) => cmd_replay(a),
        Command::SynthLog(a) => cmd_synth_log(a),
    }
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn format_marginals(m: &Array1<f64>) -> String {
    m.iter().map(|x| format!("{x:.5}")).collect::<Vec<_>>().join(" ")
}
