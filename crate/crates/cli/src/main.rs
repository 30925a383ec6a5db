//! `prcc` command-line front end.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use prcc::bound::LengthWeight;
use prcc::Error;

use commands::*;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Numerical(String),
    Core(Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    /// 3 for numerical failures, 2 for everything the user can fix in the inputs.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Numerical(_) => 3,
            CliError::Core(
                Error::Divergent { .. }
                | Error::EnumerationLimit { .. }
                | Error::SingularSolve(_)
                | Error::EmptyTable,
            ) => 3,
            _ => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "prcc", version, about = "Punctured ring convolutional codes with CPM")]
struct Cli {
    /// Maximum worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Convention {
    PerStep,
    PaperTheorem,
}

impl From<Convention> for LengthWeight {
    fn from(c: Convention) -> Self {
        match c {
            Convention::PerStep => LengthWeight::PerStep,
            Convention::PaperTheorem => LengthWeight::PaperTheorem,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Encode and puncture a message (one symbol per line).
    Encode {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Baseband samples of an encoded, modulated message as CSV.
    Modulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Monte Carlo SER over the configured grid.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        /// JSON run manifest.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Eb/N0 grid in dB, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        grid: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Series and transfer-function bounds.
    Bound {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        /// JSON spectrum report.
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        grid: Option<Vec<f64>>,
    },
    /// Rank every puncture matrix with the configured period and kept count.
    Search {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Distance, multiplicity and N_B for the six reference schemes.
    Table1 {
        #[arg(long, default_value_t = 8)]
        n_sps: usize,
        #[arg(long, value_enum, default_value_t = Convention::PerStep)]
        convention: Convention,
    },
    /// Minimum accumulated distance against observation length.
    DistanceProfile {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        depth: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Encode { config, input, output } => {
            let cfg = read_config(&config)?;
            emit(output.as_deref(), &cmd_encode(&cfg, &read_symbols(&input)?)?)
        }
        Command::Modulate { config, input, output } => {
            let cfg = read_config(&config)?;
            emit(output.as_deref(), &cmd_modulate(&cfg, &read_symbols(&input)?)?)
        }
        Command::Simulate {
            config,
            output,
            manifest,
            grid,
            seed,
        } => {
            let mut cfg = read_config(&config)?;
            if let Some(sim) = cfg.sim.as_mut() {
                if let Some(g) = grid {
                    sim.grid = g;
                }
                if let Some(s) = seed {
                    sim.seed = s;
                }
            }
            let (csv, json) = cmd_simulate(&cfg)?;
            emit(output.as_deref(), &csv)?;
            if let Some(m) = manifest {
                emit(Some(&m), &json)?;
            }
            Ok(())
        }
        Command::Bound {
            config,
            output,
            json,
            grid,
        } => {
            let mut cfg = read_config(&config)?;
            if grid.is_some() {
                cfg.bound.grid = grid;
            }
            let report = cmd_bound(&cfg)?;
            emit(output.as_deref(), &report.csv)?;
            if let Some(j) = json {
                emit(Some(&j), &report.json)?;
            }
            match report.divergent.first() {
                Some(db) => Err(CliError::Numerical(format!(
                    "transfer bound diverges at {} of the grid points, first at {db} dB",
                    report.divergent.len()
                ))),
                None => Ok(()),
            }
        }
        Command::Search { config, output } => {
            let cfg = read_config(&config)?;
            emit(output.as_deref(), &cmd_search(&cfg)?)
        }
        Command::Table1 { n_sps, convention } => emit(None, &cmd_table1(n_sps, convention.into())?),
        Command::DistanceProfile { config, output, depth } => {
            let cfg = read_config(&config)?;
            let depth = depth.unwrap_or(cfg.bound.profile_depth);
            let (csv, summary) = cmd_distance_profile(&cfg, depth)?;
            emit(output.as_deref(), &csv)?;
            eprint!("{summary}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("prcc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
