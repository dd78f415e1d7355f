//! The `wspls` command-line front end.
//!
//! Five subcommands: `simulate` writes synthetic data, `fit` runs one
//! solver, `extract` pulls out several co-modules in sequence, `score`
//! evaluates a result against a planted truth and/or by S-score and
//! permutation test, and `bench` runs the repeated-run method comparison.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 solver failure.

mod commands;
pub mod io;
pub mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Preprocessing;
use crate::mwspls::Scheme;
use crate::simbench::Method;
use crate::wspls::{SolverConfig, StopRule};

pub use commands::{ModulesFile, ScoreReport, SolutionFile, TruthFile};

/// Environment variable that, when set, replaces every `--seed` value.
pub const SEED_ENV: &str = "COMODULE_SEED";

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "wspls",
    version,
    about = "Weighted sparse PLS: joint sample and feature selection across data views"
)]
pub struct Cli {
    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic pair X.csv, Y.csv with its planted truth.
    Simulate(SimulateArgs),
    /// Fit one method and write solution.json.
    Fit(FitArgs),
    /// Extract co-modules one after another by deleting their samples.
    Extract(ExtractArgs),
    /// Score a solution or module file.
    Score(ScoreArgs),
    /// Repeated-run comparison of methods on synthetic data.
    Bench(BenchArgs),
}

fn parse_stop_rule(s: &str) -> std::result::Result<StopRule, String> {
    match s {
        "iterate_change" | "iterate-change" => Ok(StopRule::IterateChange),
        "objective_change" | "objective-change" => Ok(StopRule::ObjectiveChange),
        "both" => Ok(StopRule::Both),
        _ => Err(format!(
            "expected iterate_change, objective_change or both, got `{s}`"
        )),
    }
}

fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    match s {
        "sum" => Ok(Scheme::Sum),
        "product" | "prod" => Ok(Scheme::Product),
        _ => Err(format!("expected sum or product, got `{s}`")),
    }
}

fn parse_preprocessing(s: &str) -> std::result::Result<Preprocessing, String> {
    match s {
        "standardize" => Ok(Preprocessing::Standardize),
        "none" | "identity" => Ok(Preprocessing::Identity),
        _ => Err(format!("expected standardize or none, got `{s}`")),
    }
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse::<Method>().map_err(|e| e.to_string())
}

/// Settings shared by every solver.
#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    /// Random restarts; the lowest objective wins.
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,

    #[arg(long = "max-iter", default_value_t = 20)]
    pub max_iter: usize,

    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,

    /// Step constants: one value for all blocks, or `L_u,L_v,L_w`.
    #[arg(long = "L", value_delimiter = ',', default_value = "1")]
    pub step: Vec<f64>,

    /// iterate_change, objective_change or both.
    #[arg(long = "stop-rule", default_value = "both", value_parser = parse_stop_rule)]
    pub stop_rule: StopRule,

    /// Overridden by the COMODULE_SEED environment variable when set.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SolverArgs {
    /// Applies the environment seed override.
    fn resolve(&mut self) -> Result<()> {
        self.seed = resolve_seed(self.seed)?;
        Ok(())
    }

    fn config(&self, k_u: usize, k_v: usize, k_w: usize) -> Result<SolverConfig> {
        let (l_u, l_v, l_w) = match self.step.as_slice() {
            [l] => (*l, *l, *l),
            [a, b, c] => (*a, *b, *c),
            other => {
                return Err(Error::InvalidConfig(format!(
                    "--L takes 1 or 3 values, got {}",
                    other.len()
                )))
            }
        };
        let config = SolverConfig {
            max_iter: self.max_iter,
            tol: self.tol,
            restarts: self.restarts,
            seed: self.seed,
            stop_rule: self.stop_rule,
            ..SolverConfig::new(k_u, k_v, k_w).with_steps(l_u, l_v, l_w)
        };
        config.validate_common()?;
        Ok(config)
    }
}

/// `--seed`, unless COMODULE_SEED is set.
pub fn resolve_seed(flag: u64) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Error::InvalidConfig(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))
        }),
        Err(_) => Ok(flag),
    }
}

/// Sample budget from `--kw`: a count (`71`) or a fraction of `n` in
/// `(0, 1)` (`0.8`), floored.
pub fn resolve_kw(raw: &str, n: usize) -> Result<usize> {
    let bad = || {
        Error::InvalidConfig(format!(
            "--kw `{raw}` is neither a count nor a fraction in (0, 1)"
        ))
    };
    if let Ok(count) = raw.trim().parse::<usize>() {
        return Ok(count);
    }
    let value: f64 = raw.trim().parse().map_err(|_| bad())?;
    if value > 0.0 && value < 1.0 {
        Ok((value * n as f64).floor() as usize)
    } else if value >= 1.0 && value.fract() == 0.0 {
        Ok(value as usize)
    } else {
        Err(bad())
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// I, II, III or custom.
    #[arg(long, default_value = "I")]
    pub scenario: String,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    /// Signal-to-noise ratio of both views.
    #[arg(long, default_value_t = crate::simbench::DEFAULT_SNR)]
    pub snr: f64,
    /// Signal-to-noise ratio of Y when it differs from X's.
    #[arg(long)]
    pub snr2: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    /// wspls, l2l0, l0spls, pmd, pls or mwspls.
    #[arg(long, default_value = "wspls")]
    pub method: String,
    /// Data matrices (CSV), one per view, in order.
    #[arg(long = "data", required = true, num_args = 1..)]
    pub data: Vec<PathBuf>,
    #[arg(long)]
    pub ku: Option<usize>,
    #[arg(long)]
    pub kv: Option<usize>,
    /// Sample budget: a count, or a fraction of n in (0, 1).
    #[arg(long)]
    pub kw: Option<String>,
    /// Per-view feature budgets for mwspls.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
    /// Coupling for mwspls: sum or product.
    #[arg(long, default_value = "sum", value_parser = parse_scheme)]
    pub scheme: Scheme,
    /// Explicit l1 bounds for pmd (otherwise calibrated to --ku/--kv).
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    /// standardize (default) or none.
    #[arg(long, default_value = "standardize", value_parser = parse_preprocessing)]
    pub preprocess: Preprocessing,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = "solution.json")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExtractArgs {
    /// X and Y matrices (CSV).
    #[arg(long = "data", required = true, num_args = 2)]
    pub data: Vec<PathBuf>,
    #[arg(long)]
    pub ku: usize,
    #[arg(long)]
    pub kv: usize,
    #[arg(long)]
    pub kw: String,
    /// Number of modules to extract.
    #[arg(long, default_value_t = 1)]
    pub rounds: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = "modules.json")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScoreArgs {
    /// solution.json or modules.json.
    #[arg(long)]
    pub solution: PathBuf,
    /// Data matrices, needed for the S-score.
    #[arg(long = "data", num_args = 1..)]
    pub data: Vec<PathBuf>,
    /// truth.json from `simulate`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Random modules for the permutation test.
    #[arg(long = "n-perm")]
    pub n_perm: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report path; a long-format CSV is written next to it.
    #[arg(long, default_value = "report.json")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchArgs {
    #[arg(long, default_value = "I")]
    pub scenario: String,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long, default_value_t = crate::simbench::DEFAULT_SNR)]
    pub snr: f64,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "pls,pmd,l0spls,l2l0,wspls",
        value_parser = parse_method
    )]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    /// none (default; keeps the planted sample structure) or standardize.
    #[arg(long, default_value = "none", value_parser = parse_preprocessing)]
    pub preprocess: Preprocessing,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) | Error::BadBudget { .. } => EXIT_USAGE,
        Error::ConstantColumn(_)
        | Error::NonFinite
        | Error::DimensionMismatch(_)
        | Error::BadShape { .. }
        | Error::LengthMismatch { .. }
        | Error::Parse { .. }
        | Error::IncompatibleFiles(_)
        | Error::Io(_)
        | Error::Json(_) => EXIT_DATA,
        Error::ZeroVariance
        | Error::ZeroInput
        | Error::Infeasible(_)
        | Error::DegenerateStep(_)
        | Error::ZeroMatrix
        | Error::CannotMatch { .. }
        | Error::EmptySelection(_)
        | Error::InsufficientSamples { .. }
        | Error::ZeroSignal => EXIT_SOLVER,
    }
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Error::InvalidConfig("--threads must be at least 1".into()));
        }
        // a pool may already exist when called repeatedly in one process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match cli.command {
        Command::Simulate(args) => commands::simulate(args),
        Command::Fit(args) => commands::fit(args),
        Command::Extract(args) => commands::extract(args),
        Command::Score(args) => commands::score(args),
        Command::Bench(args) => commands::bench(args),
    }
}

/// Parses `args`, runs the command, reports errors on stderr and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
