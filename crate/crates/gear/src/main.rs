use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gear::config::{ConfigFile, Overrides};
use gear::logfile::load_log;
use gear::replay::replay_verify;
use gear::report::{frontier_table, quarters_csv, state_at, ReportSeries};
use gear::run::run_logged;
use gear::sweep::{parse_seed_range, sweep};
use gear::{GearError, Result};
use gear_core::harness::PolicyKind;

#[derive(Parser)]
#[command(name = "gear", version, about = "Frontier-based genetic search over synthetic training landscapes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// hillclimb or gear-fixed
    #[arg(long, value_parser = parse_policy)]
    policy: Option<PolicyKind>,
    /// Landscape TOML file, or "ladder" for the built-in fixture
    #[arg(long)]
    landscape: Option<String>,
    #[arg(long)]
    steps: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// TOML config with run.*, policy.* and guards.* keys
    #[arg(long)]
    config: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            policy: self.policy,
            steps: self.steps,
            seed: self.seed,
            landscape: self.landscape.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one search and write its log
    Run {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute every decision in a log and check its invariants
    Replay {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = parse_policy)]
        policy: Option<PolicyKind>,
        #[arg(long)]
        landscape: Option<String>,
    },
    /// Write the running-best series as CSV
    Report {
        #[arg(long)]
        log: PathBuf,
        /// Also print the per-quarter improvement summary
        #[arg(long)]
        quarters: bool,
        /// Defaults to standard output
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Show the frontier as it stood after a given step
    Frontier {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        at_step: u32,
    },
    /// Run a range of seeds in parallel, one log per seed
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Half-open range, e.g. 0..50
        #[arg(long)]
        seeds: String,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn parse_policy(s: &str) -> std::result::Result<PolicyKind, String> {
    match s {
        "hillclimb" => Ok(PolicyKind::Hillclimb),
        "gear-fixed" => Ok(PolicyKind::GearFixed),
        _ => Err(format!("unknown policy '{s}', expected hillclimb or gear-fixed")),
    }
}

fn write_out(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| GearError::io(path, e))
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run { run, out } => {
            let config = ConfigFile::load_or_default(run.config.as_deref())?.run_config(&run.overrides())?;
            let log = run_logged(&config, &out)?;
            let best = log
                .records
                .iter()
                .filter_map(|r| r.outcome.metrics())
                .map(|m| m.bpb)
                .fold(f64::INFINITY, f64::min);
            println!(
                "{} steps of {} (seed {}), best bpb {best:.6}, log {}",
                log.records.len(),
                config.policy_kind,
                config.seed,
                out.display()
            );
        }
        Command::Replay { log, config, policy, landscape } => {
            let loaded = load_log(&log)?;
            if let Some(line) = loaded.partial_tail {
                eprintln!("note: ignoring partial record on line {line}");
            }
            let overrides = Overrides {
                // The log knows which policy wrote it.
                policy: policy.or(Some(loaded.header.policy)),
                landscape,
                seed: Some(loaded.header.seed),
                steps: Some((loaded.records.len() as u32).max(1)),
            };
            let run_config = ConfigFile::load_or_default(config.as_deref())?.run_config(&overrides)?;
            let report = replay_verify(&loaded, &run_config)?;
            println!("{report}");
            if !report.passed() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Report { log, quarters, out } => {
            let series = ReportSeries::from_log(&load_log(&log)?);
            let csv = series.to_csv();
            match &out {
                Some(path) => write_out(path, &csv)?,
                None => print!("{csv}"),
            }
            if quarters {
                print!("{}", quarters_csv(&series.quarters()));
            }
        }
        Command::Frontier { log, at_step } => {
            print!("{}", frontier_table(&state_at(&load_log(&log)?, at_step)?));
        }
        Command::Sweep { run, seeds, workers, out_dir } => {
            let range = parse_seed_range(&seeds)?;
            let config = ConfigFile::load_or_default(run.config.as_deref())?.run_config(&run.overrides())?;
            let paths = sweep(&config, range, workers, &out_dir)?;
            println!("{} logs written to {}", paths.len(), out_dir.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
