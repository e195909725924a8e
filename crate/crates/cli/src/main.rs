//! `zonalmc` — config-driven front end for the zonal-flow
//! Misiolek-curvature engine.
//!
//! Exit codes: 0 success, 1 unexpected error, 2 config parse error,
//! 3 precondition failure, 4 invariant failure, 5 indeterminate verdict.

// `!(x > 0.0)` rejects NaN as well as non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use commands::{CommandError, ExitClass, Outcome, RunOptions};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "zonalmc",
    version,
    about = "Misiolek curvature of zonal flows on ellipsoids of revolution"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Scenario configuration file (line-oriented `key = value`).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory for report.json and CSV dumps.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Multiply all quadrature resolutions by this factor.
    #[arg(long, default_value_t = 1.0)]
    resolution_scale: f64,

    /// Override the scenario seed for sample-point draws.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the geometry/Killing/quadrature invariant suite.
    Verify(CommonArgs),
    /// Classify the configured flow (zonal / geodesic / S¹ / positive).
    Classify(CommonArgs),
    /// Evaluate the Misiolek curvature by every applicable formula.
    Mc(CommonArgs),
    /// Search for (or replay) a positivity certificate.
    Certify {
        #[command(flatten)]
        common: CommonArgs,
        /// Replay and re-validate a stored certificate instead of searching.
        #[arg(long)]
        from_certificate: Option<PathBuf>,
    },
}

fn load(common: &CommonArgs) -> Result<(config::Scenario, String), CommandError> {
    let path = common.config.as_ref().ok_or_else(|| CommandError {
        class: ExitClass::ParseError,
        message: "--config <path> is required for this command".into(),
    })?;
    let text = std::fs::read_to_string(path).map_err(|e| CommandError {
        class: ExitClass::ParseError,
        message: format!("cannot read config `{}`: {e}", path.display()),
    })?;
    let scenario = config::parse_scenario(&text)?;
    Ok((scenario, text))
}

fn run() -> Result<Outcome, CommandError> {
    let cli = Cli::parse();
    let (common, from_certificate) = match &cli.command {
        Command::Verify(c) | Command::Classify(c) | Command::Mc(c) => (c.clone(), None),
        Command::Certify {
            common,
            from_certificate,
        } => (common.clone(), from_certificate.clone()),
    };
    if !(common.resolution_scale > 0.0) {
        return Err(CommandError {
            class: ExitClass::ParseError,
            message: "--resolution-scale must be positive".into(),
        });
    }
    let opts = RunOptions {
        out_dir: common.out.clone(),
        resolution_scale: common.resolution_scale,
        seed_override: common.seed,
    };
    match &cli.command {
        Command::Verify(_) => {
            let (scenario, text) = load(&common)?;
            commands::cmd_verify(&scenario, &text, &opts)
        }
        Command::Classify(_) => {
            let (scenario, text) = load(&common)?;
            commands::cmd_classify(&scenario, &text, &opts)
        }
        Command::Mc(_) => {
            let (scenario, text) = load(&common)?;
            commands::cmd_mc(&scenario, &text, &opts)
        }
        Command::Certify { .. } => match from_certificate {
            Some(path) => commands::cmd_certify_replay(&path, &opts),
            None => {
                let (scenario, text) = load(&common)?;
                commands::cmd_certify(&scenario, &text, &opts)
            }
        },
    }
}

fn main() {
    match run() {
        Ok(outcome) => std::process::exit(outcome.class as i32),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.class as i32);
        }
    }
}
