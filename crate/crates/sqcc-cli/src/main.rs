//! `sqcc`: link budget sweeps and simulator self-checks from the command
//! line.
//!
//! Exit codes: 0 on success, 2 for invalid usage or a failed validation, 3
//! for runtime evaluation errors, 4 when a statistical comparison had too
//! little data to decide.

mod config;
mod sweep;
mod validate;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::SweepSpec;
use validate::Status;

#[derive(Parser)]
#[command(
    name = "sqcc",
    version,
    about = "Key rate and classical error rate engine for coherent links that \
             carry Gaussian key material and QPSK bits on the same pulses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the link over a grid of distances and phase noise budgets,
    /// writing one CSV row per operating point.
    Sweep {
        /// JSON sweep description; `print-defaults` emits a template.
        #[arg(long)]
        config: PathBuf,
        /// CSV destination; overrides the config's `output`, stdout if both
        /// are absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Simulate a fixed battery of operating points and compare error rates
    /// and decision noise against the closed forms. JSON report on stdout.
    Validate {
        /// Simulated rounds per battery point.
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        /// Master seed for the simulations.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Corrupt the believed electronic noise by this much (shot-noise
        /// units) before solving the amplitude, to demonstrate that the
        /// checks catch a wrong budget.
        #[arg(long)]
        inject_vel_bias: Option<f64>,
    },
    /// Print a sweep configuration template with the reference parameters.
    PrintDefaults,
}

/// Terminal outcome carrying the process exit code.
struct Failure {
    code: u8,
    message: Option<String>,
}

impl Failure {
    fn usage(message: String) -> Self {
        Failure { code: 2, message: Some(message) }
    }
}

impl From<sqcc_core::Error> for Failure {
    fn from(e: sqcc_core::Error) -> Self {
        let code = match &e {
            sqcc_core::Error::InvalidArgument { .. } => 2,
            sqcc_core::Error::Domain { .. }
            | sqcc_core::Error::Physicality { .. }
            | sqcc_core::Error::Io(_) => 3,
            sqcc_core::Error::InsufficientStatistics(_) => 4,
        };
        Failure { code, message: Some(e.to_string()) }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Sweep { config, output } => {
            let text = fs::read_to_string(&config).map_err(|e| Failure {
                code: 3,
                message: Some(format!("{}: {e}", config.display())),
            })?;
            let spec: SweepSpec = serde_json::from_str(&text)
                .map_err(|e| Failure::usage(format!("{}: {e}", config.display())))?;
            let destination = output.or_else(|| spec.output.clone());
            match destination {
                Some(path) => {
                    let file = fs::File::create(&path).map_err(|e| Failure {
                        code: 3,
                        message: Some(format!("{}: {e}", path.display())),
                    })?;
                    let mut out = BufWriter::new(file);
                    sweep::run_sweep(&spec, &mut out)?;
                    out.flush().map_err(sqcc_core::Error::from)?;
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut out = BufWriter::new(stdout.lock());
                    sweep::run_sweep(&spec, &mut out)?;
                    out.flush().map_err(sqcc_core::Error::from)?;
                }
            }
            Ok(())
        }
        Command::Validate { trials, seed, inject_vel_bias } => {
            let stdout = std::io::stdout();
            let mut out = BufWriter::new(stdout.lock());
            let status = validate::run_validate(trials, seed, inject_vel_bias, &mut out)?;
            out.flush().map_err(sqcc_core::Error::from)?;
            match status {
                Status::Pass => Ok(()),
                Status::Fail => Err(Failure {
                    code: 2,
                    message: Some("validation failed; see the report above".into()),
                }),
                Status::Insufficient => Err(Failure {
                    code: 4,
                    message: Some(
                        "validation could not resolve every check; raise --trials".into(),
                    ),
                }),
            }
        }
        Command::PrintDefaults => {
            let text = serde_json::to_string_pretty(&SweepSpec::example())
                .expect("the template always serializes");
            println!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if let Some(message) = f.message {
                eprintln!("error: {message}");
            }
            ExitCode::from(f.code)
        }
    }
}
