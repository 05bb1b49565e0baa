//! Command-line front end: solve, verify, simulate, and experiment on
//! stochastic network models described by TOML files.
//!
//! Exit codes: 0 success (and, for commands with a verdict, pass); 1 a
//! verdict failed; 2 the configuration or input could not be used; 3 a
//! numerical or runtime failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use psnet_core::balance::{solve_for_spec, verify_partial_balance};
use psnet_core::config::{load_baseline_network, load_experiment, ConfigError};
use psnet_core::harness::{insensitivity_experiment, sensitivity_control};
use psnet_core::report::{
    experiment_json, parse_occupancy_table, render_balance_report, render_control,
    render_experiment, render_occupancy_table, render_sim_summary,
};
use psnet_core::sim::{run, Initialization, SimConfig};

/// Reports written to relative `--out` paths land under this directory when
/// it is set.
const REPORT_DIR_VAR: &str = "PSNET_REPORT_DIR";

#[derive(Parser)]
#[command(
    name = "psnet",
    version,
    about = "Stationary laws, balance checks, and insensitivity experiments for stochastic networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the stationary occupancy law and print it as a table.
    Solve {
        /// Network TOML file (or an experiment file; its network is used).
        #[arg(long)]
        config: PathBuf,
        /// Per-class truncation bounds, comma separated.
        #[arg(long, value_delimiter = ',')]
        truncation: Vec<u32>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the partial-balance equations of a stationary law.
    VerifyBalance {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        truncation: Vec<u32>,
        /// Occupancy table to verify; solved from the config when absent.
        #[arg(long)]
        pi: Option<PathBuf>,
        /// Largest acceptable interior relative residual.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the network and summarize the run.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Truncation for the stationary starting law (unused with
        /// --empty-start).
        #[arg(long, value_delimiter = ',')]
        truncation: Vec<u32>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        events: u64,
        /// Start from an empty network (with warmup) instead of the solved
        /// stationary law.
        #[arg(long)]
        empty_start: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an insensitivity experiment from an experiment file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Also write a JSON summary here.
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the FIFO-versus-sharing sensitivity control battery.
    Control {
        #[arg(long, default_value_t = 0.8)]
        load: f64,
        #[arg(long, default_value_t = 1_000_000)]
        events: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum CliError {
    /// Unusable input: bad config, bad table, bad flags. Exit 2.
    Input(String),
    /// The computation itself failed. Exit 3.
    Run(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> CliError {
        CliError::Input(e.to_string())
    }
}

impl From<psnet_core::balance::BalanceError> for CliError {
    fn from(e: psnet_core::balance::BalanceError) -> CliError {
        CliError::Run(e.to_string())
    }
}

impl From<psnet_core::sim::SimError> for CliError {
    fn from(e: psnet_core::sim::SimError) -> CliError {
        CliError::Run(e.to_string())
    }
}

impl From<psnet_core::harness::HarnessError> for CliError {
    fn from(e: psnet_core::harness::HarnessError) -> CliError {
        CliError::Run(e.to_string())
    }
}

/// Resolve an output path against `PSNET_REPORT_DIR` when relative.
fn resolve_out(path: &Path) -> PathBuf {
    if path.is_relative() {
        if let Ok(dir) = std::env::var(REPORT_DIR_VAR) {
            return PathBuf::from(dir).join(path);
        }
    }
    path.to_path_buf()
}

/// Print the text, or write it to the resolved path.
fn deliver(text: &str, out: &Option<PathBuf>) -> Result<(), CliError> {
    match out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => {
            let path = resolve_out(path);
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)
                        .map_err(|e| CliError::Run(format!("creating {}: {e}", parent.display())))?;
                }
            }
            std::fs::write(&path, text)
                .map_err(|e| CliError::Run(format!("writing {}: {e}", path.display())))?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn require_truncation(truncation: &[u32]) -> Result<(), CliError> {
    if truncation.is_empty() {
        Err(CliError::Input("--truncation is required for this command".into()))
    } else {
        Ok(())
    }
}

/// Run one command; `Ok(true)` is a passing verdict (exit 0), `Ok(false)` a
/// failing one (exit 1).
fn dispatch(command: Command) -> Result<bool, CliError> {
    match command {
        Command::Solve { config, truncation, out } => {
            require_truncation(&truncation)?;
            let spec = load_baseline_network(&config)?;
            let pi = solve_for_spec(&spec, &truncation)?;
            deliver(&render_occupancy_table(&pi), &out)?;
            Ok(true)
        }
        Command::VerifyBalance { config, truncation, pi, tolerance, out } => {
            let spec = load_baseline_network(&config)?;
            let pi = match pi {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| {
                        CliError::Input(format!("reading {}: {e}", path.display()))
                    })?;
                    parse_occupancy_table(&text)
                        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
                }
                None => {
                    require_truncation(&truncation)?;
                    solve_for_spec(&spec, &truncation)?
                }
            };
            let report = verify_partial_balance(&spec, &pi)?;
            deliver(&render_balance_report(&report, tolerance), &out)?;
            Ok(report.passes(tolerance))
        }
        Command::Simulate { config, truncation, seed, events, empty_start, out } => {
            let spec = load_baseline_network(&config)?;
            let initialization = if empty_start {
                Initialization::Empty
            } else {
                require_truncation(&truncation)?;
                Initialization::Stationary(solve_for_spec(&spec, &truncation)?)
            };
            let stats = run(&spec, &SimConfig::new(seed, events, initialization))?;
            deliver(&render_sim_summary(&stats), &out)?;
            Ok(true)
        }
        Command::Experiment { config, json, out } => {
            let plan = load_experiment(&config)?;
            let outcome = insensitivity_experiment(&plan)?;
            deliver(&render_experiment(&outcome), &out)?;
            if let Some(path) = json {
                let value = experiment_json(&outcome);
                let text = format!(
                    "{}\n",
                    serde_json::to_string_pretty(&value)
                        .expect("experiment summaries serialize")
                );
                deliver(&text, &Some(path))?;
            }
            Ok(outcome.pass)
        }
        Command::Control { load, events, seed, out } => {
            let control = sensitivity_control(load, events, seed)
                .map_err(|e| match e {
                    psnet_core::harness::HarnessError::InvalidLoad(_) => {
                        CliError::Input(e.to_string())
                    }
                    other => CliError::Run(other.to_string()),
                })?;
            deliver(&render_control(&control), &out)?;
            Ok(control.detected)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Input(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Run(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(3)
        }
    }
}
