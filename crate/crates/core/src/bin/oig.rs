use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use oig_learn::harness::{audit, run_experiment, selftest, write_reports, ExperimentConfig, Format, RunOptions};
use oig_learn::Error;

#[derive(Parser)]
#[command(name = "oig", version, about = "Oracle-efficient learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Jsonl,
}

#[derive(Subcommand)]
enum Command {
    /// Run every trial of an experiment and write one row per trial.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutFormat,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Fill in wall_ms. Output is then no longer reproducible.
        #[arg(long)]
        timing: bool,
    },
    /// Exact orientation audit of one drawn sample, printed as JSON.
    Audit {
        #[arg(long)]
        config: PathBuf,
    },
    /// Quick end-to-end check on a built-in experiment.
    Selftest,
}

enum Failure {
    Lib(Error),
    Sink(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

const SELFTEST_SEED: u64 = 20;

fn load(path: &PathBuf) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(path)?;
    cfg.apply_env()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, out, format, threads, timing } => {
            let cfg = load(&config)?;
            let format = match format {
                OutFormat::Csv => Format::Csv,
                OutFormat::Jsonl => Format::Jsonl,
            };
            // Open the sink first so an unwritable path fails before any work.
            let sink: Box<dyn Write> = match &out {
                Some(path) => Box::new(BufWriter::new(File::create(path).map_err(Failure::Sink)?)),
                None => Box::new(io::stdout().lock()),
            };
            let reports = run_experiment(&cfg, &RunOptions { threads, timing })?;
            write_reports(&reports, format, sink).map_err(Failure::Sink)
        }
        Command::Audit { config } => {
            let cfg = load(&config)?;
            let report = audit(&cfg)?;
            let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::Sink(e.into()))?;
            println!("{json}");
            Ok(())
        }
        Command::Selftest => {
            let checks = selftest(SELFTEST_SEED)?;
            for c in &checks {
                let verdict = if c.passed() { "PASS" } else { "FAIL" };
                println!("{verdict} {} ({} cases, {} failures)", c.name, c.cases, c.failures);
            }
            if checks.iter().all(|c| c.passed()) {
                Ok(())
            } else {
                Err(Error::Numerical("selftest found disagreements".into()).into())
            }
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Sink(e)) => {
            eprintln!("error: cannot write output: {e}");
            ExitCode::from(4)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Capability { .. } => 2,
                Error::Config(_) => 3,
                _ => 1,
            })
        }
    }
}
