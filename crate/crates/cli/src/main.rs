//! qinstr: scenario runner and self-test driver for the quantum-instrument
//! calculus.
//!
//! Exit codes: 0 on success, 1 on verification failure, 2 on input errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qinstruments_cli::error::CliError;
use qinstruments_cli::report::Format;
use qinstruments_cli::scenario;
use qinstruments_cli::selftest::{selftest, SelfTestConfig};

#[derive(Parser)]
#[command(name = "qinstr", version, about = "Quantum instrument scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a scenario file and check every object invariant and reference.
    Validate { file: PathBuf },
    /// Run a scenario's tasks and print the report (text by default).
    Run {
        file: PathBuf,
        #[arg(long, default_value = "text")]
        format: Format,
    },
    /// Run a scenario and print its report in the requested format.
    Report {
        file: PathBuf,
        #[arg(long)]
        format: Format,
    },
    /// Run the seeded property suite over every module's invariants.
    Selftest {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Comma-separated dimension pool, e.g. 2,3.
        #[arg(long, default_value = "2,3")]
        dims: DimList,
        /// Overrides every tolerance field with one absolute value.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value = "text")]
        format: Format,
    },
}

#[derive(Clone, Debug)]
struct DimList(Vec<usize>);

impl std::str::FromStr for DimList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let dims = s
            .split(',')
            .map(|part| part.trim().parse::<usize>().map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        if dims.is_empty() || dims.iter().any(|&d| d == 0 || d > 16) {
            return Err("dims must be between 1 and 16".into());
        }
        Ok(DimList(dims))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Validate { file } => {
            let text = std::fs::read_to_string(&file)?;
            scenario::validate_scenario(&text)?;
            println!("ok: {} is a valid scenario", file.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { file, format } | Command::Report { file, format } => {
            let text = std::fs::read_to_string(&file)?;
            let mut loaded = scenario::load_scenario(&text)?;
            let report = scenario::run_scenario(&mut loaded)?;
            match format {
                Format::Json => println!("{}", report.to_json()),
                Format::Text => print!("{}", report.to_text()),
            }
            if report.any_failed() {
                Ok(ExitCode::from(1))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
        Command::Selftest {
            seed,
            trials,
            dims,
            tol,
            format,
        } => {
            if trials == 0 {
                return Err(CliError::Invariant("trials must be at least 1".into()));
            }
            let tolerances = match tol {
                Some(t) if t > 0.0 => qinstruments::Tolerances::uniform(t),
                Some(_) => return Err(CliError::Invariant("tolerance must be positive".into())),
                None => qinstruments::Tolerances::default(),
            };
            let cfg = SelfTestConfig {
                seed,
                trials,
                dims: dims.0,
                tol: tolerances,
            };
            let report = selftest(&cfg);
            match format {
                Format::Json => println!("{}", report.to_json()),
                Format::Text => print!("{}", report.to_text()),
            }
            if report.all_pass() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
    }
}
