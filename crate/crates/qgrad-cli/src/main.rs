//! `qgrad` — experiment runner and analysis tool for quantized gradient
//! methods. Subcommands: `run` (one trace), `sweep` (one trace per step
//! size), `cover` (cover-angle analysis of a quantization set), `bounds`
//! (closed-form step/iteration calculators).
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid configuration.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "qgrad", version, about = "Quantized gradient method simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one run and write a CSV trace plus a JSON sidecar.
    Run(RunArgs),
    /// Run one trace per step size against a shared instance and summarize
    /// the error floors.
    Sweep(SweepArgs),
    /// Analyze the cover angle of a quantization set.
    Cover(CoverArgs),
    /// Evaluate step-size rules and iteration bounds.
    Bounds(BoundsArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Config file (`[section]` headers with key = value lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config entry (repeatable): section.key=value.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    /// Step size (shorthand for --set schedule.gamma=…).
    #[arg(long)]
    gamma: Option<f64>,
    /// Iteration budget (shorthand for --set run.max_iter=…).
    #[arg(long)]
    max_iter: Option<usize>,
    /// Seed (overrides both the config file and QGRAD_SEED).
    #[arg(long)]
    seed: Option<u64>,
    /// Output path stem (.csv / .json appended).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Record the full iterate in every trace row.
    #[arg(long)]
    record_x: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: ConfigArgs,
    /// Replay a previous run from its JSON sidecar (exact instance reuse).
    #[arg(long, conflicts_with = "config")]
    replay: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: ConfigArgs,
    /// Comma-separated step sizes; default 0.005,0.01,0.05,0.1,0.5,1.
    #[arg(long, value_delimiter = ',')]
    gammas: Vec<f64>,
    /// Run members in isolation from the shared start point instead of
    /// warm-starting each from the previous (descending-γ) member.
    #[arg(long)]
    independent: bool,
}

#[derive(Args)]
struct CoverArgs {
    /// Built-in kind: sign | minimal | circular | normal_basis.
    #[arg(long, conflicts_with = "file")]
    kind: Option<String>,
    /// Dimension N for sign/minimal/normal_basis.
    #[arg(long)]
    dims: Option<usize>,
    /// Element count n for circular sets.
    #[arg(long)]
    n: Option<usize>,
    /// Load a custom set (first line N, one unit direction per line).
    #[arg(long)]
    file: Option<PathBuf>,
    /// Also run the properness LP and print its certificate.
    #[arg(long)]
    certify: bool,
    /// Print the analysis as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(subcommand)]
    which: BoundsCommand,
}

#[derive(Subcommand)]
enum BoundsCommand {
    /// Type-1 plan: admissible γ range, optimal γ*, iteration bounds.
    Type1(Type1Args),
    /// Best guaranteed accuracy after a fixed number of iterations.
    Rate(RateArgs),
    /// Strongly convex Type-2 plan.
    Strong(StrongArgs),
    /// Per-step descent margins δ and δ̄ at a given γ.
    Margins(MarginsArgs),
}

#[derive(Args)]
struct CommonConstants {
    #[arg(long)]
    lipschitz: f64,
    #[arg(long, default_value_t = 1.0)]
    cos_theta: f64,
    #[arg(long, default_value_t = 1)]
    dims: usize,
    /// Exact initial gap f(x0) − f*.
    #[arg(long)]
    gap: Option<f64>,
    /// Upper bound K on the initial gap (fallback when --gap is absent).
    #[arg(long)]
    gap_upper: Option<f64>,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct Type1Args {
    #[command(flatten)]
    consts: CommonConstants,
    #[arg(long)]
    eps: f64,
    /// Step size to plan at; defaults to the optimal γ*.
    #[arg(long)]
    gamma: Option<f64>,
    /// ‖∇f(x0)‖ for the lower bound.
    #[arg(long)]
    grad0_norm: Option<f64>,
    /// Use the orthant/sign variant (requires --grad-bound).
    #[arg(long)]
    constrained: bool,
    #[arg(long)]
    grad_bound: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
}

#[derive(Args)]
struct RateArgs {
    #[command(flatten)]
    consts: CommonConstants,
    /// Iteration budget T.
    #[arg(long)]
    iters: u64,
}

#[derive(Args)]
struct StrongArgs {
    #[command(flatten)]
    consts: CommonConstants,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    mu: f64,
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Args)]
struct MarginsArgs {
    #[command(flatten)]
    consts: CommonConstants,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    grad_bound: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
}

/// Failures carry their exit code: 2 for configuration, 1 for runtime.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => commands::cmd_run(args),
        Command::Sweep(args) => commands::cmd_sweep(args),
        Command::Cover(args) => commands::cmd_cover(args),
        Command::Bounds(args) => commands::cmd_bounds(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
