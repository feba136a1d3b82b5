//! Command-line front end: builds family states, runs verification
//! campaigns, and emits machine-readable reports.
//!
//! Exit status: 0 when every scenario passes, 1 when any fails (the failing
//! scenario ids go to stderr), 2 on usage errors, 3 on capacity errors.

mod campaigns;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hqmodel_core::Error;

use report::RunReport;

#[derive(Parser)]
#[command(
    name = "hqmodel",
    version,
    about = "Verification campaigns for hidden quantum models of PPT states"
)]
struct Cli {
    /// Write the report to this path instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Build one family state and report its diagnostics.
    Family {
        /// Even local dimension of the family member.
        #[arg(long, default_value_t = 4)]
        d: usize,
    },
    /// Check the trace self-duality of the partial transpose on random
    /// matrix pairs.
    VerifyDuality {
        /// Total matrix dimension; must be a perfect square.
        #[arg(long, default_value_t = 9)]
        d: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Compare behaviors of the family state and its transformed model
    /// under random POVMs.
    VerifyBehavior {
        #[arg(long, default_value_t = 4)]
        d: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Cap on settings per side (drawn per scenario).
        #[arg(long, default_value_t = 4)]
        settings: usize,
        /// Cap on outcomes per side (drawn per scenario).
        #[arg(long, default_value_t = 4)]
        outcomes: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Sequential instrument chains on Bob's side against the conjugated
    /// chains on the transposed state.
    VerifySequential {
        #[arg(long, default_value_t = 4)]
        d: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 3)]
        chain_len: usize,
        /// Settings per chain step (and for Alice).
        #[arg(long, default_value_t = 2)]
        settings: usize,
        /// Outcomes per chain step.
        #[arg(long, default_value_t = 2)]
        outcomes: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Tensor stability of the transpose and behavior equality on multiple
    /// regrouped copies with global POVMs.
    VerifyMulticopy {
        #[arg(long, default_value_t = 4)]
        d: usize,
        #[arg(long, default_value_t = 2)]
        copies: usize,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 2)]
        settings: usize,
        #[arg(long, default_value_t = 4)]
        outcomes: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run every verification campaign at its default size.
    FullSuite {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Capacity { .. } | Error::DimensionLimit { .. } => ExitCode::from(3),
                Error::Domain(_) | Error::BipartitionMismatch { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let (command, master_seed, scenarios) = match cli.command {
        Command::Family { d } => {
            let report = campaigns::family_report(d)?;
            let body = match cli.format {
                Format::Json => report.to_json(),
                Format::Csv => report.to_csv(),
            };
            emit(&cli.output, &body)?;
            return Ok(if report.passes() {
                ExitCode::SUCCESS
            } else {
                eprintln!("family-d{d} failed its validity checks");
                ExitCode::from(1)
            });
        }
        Command::VerifyDuality { d, trials, seed } => (
            "verify-duality",
            seed,
            campaigns::run_duality(d, trials, seed)?,
        ),
        Command::VerifyBehavior {
            d,
            trials,
            settings,
            outcomes,
            seed,
        } => (
            "verify-behavior",
            seed,
            campaigns::run_behavior(d, trials, settings, outcomes, seed)?,
        ),
        Command::VerifySequential {
            d,
            trials,
            chain_len,
            settings,
            outcomes,
            seed,
        } => (
            "verify-sequential",
            seed,
            campaigns::run_sequential(d, trials, chain_len, settings, outcomes, seed)?,
        ),
        Command::VerifyMulticopy {
            d,
            copies,
            trials,
            settings,
            outcomes,
            seed,
        } => (
            "verify-multicopy",
            seed,
            campaigns::run_multicopy(d, copies, trials, settings, outcomes, seed)?,
        ),
        Command::FullSuite { seed } => ("full-suite", seed, campaigns::run_full_suite(seed)?),
    };

    let report = RunReport::new(command, master_seed, scenarios);
    let body = match cli.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    emit(&cli.output, &body)?;

    if report.all_pass {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("failing scenarios: {}", report.failing_ids().join(", "));
        Ok(ExitCode::from(1))
    }
}

fn emit(output: &Option<PathBuf>, body: &str) -> Result<(), Error> {
    match output {
        Some(path) => std::fs::write(path, body.as_bytes())
            .map_err(|e| Error::Domain(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .and_then(|_| stdout.write_all(b"\n"))
                .map_err(|e| Error::Domain(format!("cannot write report: {e}")))
        }
    }
}
