//! Command-line entry point: `run`, `experiment`, `complexity` and
//! `lowerbound` subcommands.
//!
//! Results go to standard output as JSON (or CSV for experiment reports);
//! diagnostics go to standard error. Exit codes: 0 on success, 1 on
//! validation errors (bad flags, unreadable or invalid inputs), 2 on
//! runtime failures.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::complexity::{complexity_report, ComplexityError};
use crate::harness::{
    emit, lower_bound_report, resolve_rate, run_experiment, ExperimentConfig, HarnessError,
    RateParams,
};
use crate::model::{load_instance, GameInstance};
use crate::strategies::{run_strategy, Algorithm, StrategyConfig, StrategyError};
use crate::model::SamplingEnv;

#[derive(Parser)]
#[command(
    name = "maximin",
    about = "Fixed-confidence maximin action identification in two-round stochastic games",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RateArgs {
    /// Exploration rate: practical | corollary1 | corollary2 | chernoff-pac | racing
    #[arg(long, default_value = "practical")]
    rate: String,
    /// alpha parameter for the corollary1 rate
    #[arg(long)]
    alpha: Option<f64>,
    /// C constant for the corollary1 rate (derived when omitted)
    #[arg(long = "C")]
    c_cap: Option<f64>,
    /// b parameter for the corollary2 rate
    #[arg(long)]
    b: Option<f64>,
    /// c parameter for the corollary2 rate
    #[arg(long)]
    c: Option<f64>,
    /// Use the refined racing constant K * max_i K_i instead of K_bar^2
    #[arg(long)]
    refined_ck: bool,
}

impl RateArgs {
    fn params(&self) -> RateParams {
        RateParams {
            alpha: self.alpha,
            c_cap: self.c_cap,
            b: self.b,
            c: self.c,
            refined_ck: self.refined_ck,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one strategy once and print the RunResult as JSON
    Run {
        #[arg(long)]
        instance: PathBuf,
        /// m-lucb | m-kl-lucb | m-chernoff | m-racing | kl-lucb
        #[arg(long)]
        algo: String,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        rate: RateArgs,
        /// Draw one arm per decision instead of two (K = 2 only)
        #[arg(long)]
        two_action_single_draw: bool,
        /// In single-draw mode, draw the most-drawn of {H_t, S_t}
        #[arg(long)]
        two_action_most_drawn: bool,
        /// Clip confidence intervals to [0,1]
        #[arg(long)]
        clip_intervals: bool,
        /// Hard cap on total samples
        #[arg(long, default_value_t = 10_000_000)]
        cap: u64,
        /// Override the racing round cap r0
        #[arg(long)]
        racing_round_cap: Option<u64>,
    },
    /// Run a batch experiment described by a JSON config and print the report
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the sample-complexity calculators for an instance as JSON
    Complexity {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[command(flatten)]
        rate: RateArgs,
    },
    /// Print the information-theoretic lower bound for a 2x2 instance
    Lowerbound {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        delta: f64,
    },
}

enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<StrategyError> for CliError {
    fn from(e: StrategyError) -> Self {
        match e {
            StrategyError::UndrawnArm => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ComplexityError> for CliError {
    fn from(e: ComplexityError) -> Self {
        match e {
            ComplexityError::OptimizationFailed | ComplexityError::Unsatisfiable { .. } => {
                CliError::Runtime(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Strategy(inner) => inner.into(),
            HarnessError::Report(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

fn read_instance(path: &PathBuf) -> Result<GameInstance, CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    load_instance(&bytes).map_err(|e| CliError::Validation(e.to_string()))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("serialization failed: {e}")))?;
    println!("{text}");
    Ok(())
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run {
            instance,
            algo,
            delta,
            epsilon,
            seed,
            rate,
            two_action_single_draw,
            two_action_most_drawn,
            clip_intervals,
            cap,
            racing_round_cap,
        } => {
            let inst = read_instance(&instance)?;
            let algorithm: Algorithm = algo.parse().map_err(CliError::Validation)?;
            let mut config = StrategyConfig::new(delta, epsilon);
            config.rate = resolve_rate(&rate.rate, &rate.params(), &inst)?;
            config.two_action_single_draw = two_action_single_draw;
            config.two_action_most_drawn = two_action_most_drawn;
            config.clip_intervals = clip_intervals;
            config.sample_cap = cap;
            config.racing_round_cap = racing_round_cap;
            let mut env = SamplingEnv::new(seed);
            let result = run_strategy(&inst, algorithm, &config, &mut env)?;
            print_json(&result)
        }
        Command::Experiment { config } => {
            let bytes = fs::read(&config).map_err(|e| {
                CliError::Validation(format!("cannot read {}: {e}", config.display()))
            })?;
            let config = ExperimentConfig::from_json(&bytes)?;
            let format = config.output_format()?;
            let report = run_experiment(&config)?;
            let bytes = emit(&report, format);
            use std::io::Write;
            std::io::stdout()
                .write_all(&bytes)
                .map_err(|e| CliError::Runtime(format!("write failed: {e}")))?;
            Ok(())
        }
        Command::Complexity {
            instance,
            delta,
            epsilon,
            rate,
        } => {
            let inst = read_instance(&instance)?;
            let resolved = resolve_rate(&rate.rate, &rate.params(), &inst)?;
            let report = complexity_report(&inst, resolved, delta, epsilon)?;
            print_json(&report)
        }
        Command::Lowerbound { instance, delta } => {
            let inst = read_instance(&instance)?;
            if !(delta > 0.0 && delta < 0.5) {
                return Err(CliError::Validation(
                    "the lower bound needs delta in (0, 1/2)".into(),
                ));
            }
            let report = lower_bound_report(&inst, delta)?;
            print_json(&report)
        }
    }
}

/// Parses `argv` and dispatches; returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version land here with a zero exit code
            let code = if e.exit_code() == 0 { 0 } else { 1 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}
