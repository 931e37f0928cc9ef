//! `crn-relay`: configuration-driven experiments for the buffer-aided
//! cognitive relay throughput engine.

mod commands;
mod config;
mod csv;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Context;
use config::{ExperimentConfig, SchemeChoice};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] crn_relay::Error),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("strict check failed: {0}")]
    Strict(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use crn_relay::Error as E;
        match self {
            CliError::Strict(_) => 1,
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Core(E::InvalidParameter(_) | E::InvalidArgument(_)) => 2,
            CliError::Core(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "crn-relay", version, about = "Throughput analysis and simulation of a buffer-aided underlay relay network")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment configuration (JSON, or TOML with a .toml extension).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured scheme: 1, 2 or both.
    #[arg(long)]
    scheme: Option<SchemeChoice>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides sim.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides sim.slots (also the sample count of `validate`).
    #[arg(long)]
    slots: Option<u64>,
    /// Exit with status 1 when a tolerance check fails.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print link statistics and the weight lattice.
    Stats(Common),
    /// Mode probabilities and throughput at every lattice weight (CSV).
    Modes(Common),
    /// Operating point at each value of the configured sweep (CSV).
    ThroughputSweep(Common),
    /// Slot-level simulation of the operating point against the analysis (CSV).
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Run at the largest weight instead of the operating point.
        #[arg(long)]
        negative_control: bool,
        /// Overrides sim.replications.
        #[arg(long)]
        replications: Option<u64>,
    },
    /// Internal identities and sampling cross-checks for the configured system (CSV).
    Validate(Common),
}

fn context(common: &Common, replications: Option<u64>) -> Result<Context, CliError> {
    let mut config = ExperimentConfig::load(&common.config)?;
    if let Some(s) = common.scheme {
        config.scheme = s;
    }
    if let Some(s) = common.seed {
        config.sim.seed = s;
    }
    if let Some(n) = common.slots {
        config.sim.slots = n;
    }
    if let Some(r) = replications {
        config.sim.replications = r;
    }
    if config.sim.slots == 0 || config.sim.replications == 0 {
        return Err(CliError::Input("slots and replications must be positive".into()));
    }
    Ok(Context {
        hash: config.hash(),
        config,
        strict: common.strict,
    })
}

fn output(common: &Common) -> Result<Box<dyn Write>, CliError> {
    Ok(match &common.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Stats(c) => commands::stats(&context(c, None)?, output(c)?),
        Command::Modes(c) => commands::modes(&context(c, None)?, output(c)?),
        Command::ThroughputSweep(c) => commands::throughput_sweep(&context(c, None)?, output(c)?),
        Command::Simulate {
            common,
            negative_control,
            replications,
        } => commands::simulate(&context(common, *replications)?, output(common)?, *negative_control),
        Command::Validate(c) => commands::validate(&context(c, None)?, output(c)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("crn-relay: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
