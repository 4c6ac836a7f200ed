//! `motionlab`: batch analysis of skeleton motion recordings.

mod commands;
mod config;
mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Params, RunConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config values or missing arguments (exit 1).
    Usage(String),
    /// Unreadable or invalid input data (exit 2).
    Data(String),
    /// A numerical procedure failed (exit 3).
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numerical(m) => m,
        }
    }

    pub fn context(self, path: &Path) -> CliError {
        let p = path.display();
        match self {
            CliError::Usage(m) => CliError::Usage(format!("{p}: {m}")),
            CliError::Data(m) => CliError::Data(format!("{p}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{p}: {m}")),
        }
    }
}

impl From<motionlab::Error> for CliError {
    fn from(e: motionlab::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

#[derive(Parser)]
#[command(
    name = "motionlab",
    version,
    about = "Posture-manifold analysis of skeleton motion recordings"
)]
struct Cli {
    /// TOML file of run parameters; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for `dist` and `classify`.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(flatten)]
    params: Params,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct InputOut {
    /// Directory of sequence files.
    #[arg(long)]
    input: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct Aligned {
    #[command(flatten)]
    io: InputOut,
    /// Reference sequence file; defaults to the first input sequence.
    #[arg(long)]
    reference: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labelled dataset from a TOML dataset spec.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Normalize skeleton sequences to posture sequences.
    Convert(InputOut),
    /// Pairwise motion distances.
    Dist(InputOut),
    /// Align every sequence to a reference.
    Align(Aligned),
    /// Rate functions relative to a reference.
    Rates(Aligned),
    /// Fit a per-step posture distribution to aligned sequences.
    Fit(Aligned),
    /// Gaussian-process band over pooled rate functions.
    Gp {
        /// `rates.json` written by `rates`.
        #[arg(long)]
        rates: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Directions of posture variation linked to the rate in a window.
    Sir {
        #[command(flatten)]
        aligned: Aligned,
        /// `model.json` written by `fit`.
        #[arg(long)]
        model: PathBuf,
    },
    /// Time window where the cohort is slowest relative to the reference.
    Bottleneck {
        #[arg(long)]
        rates: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct low, medium and high-rate subsequences around a window.
    Bestpractice {
        #[command(flatten)]
        aligned: Aligned,
        #[arg(long)]
        model: PathBuf,
    },
    /// Postures along the main directions of one step's covariance.
    Variation {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-time the reference to the cohort's mean pace.
    Restandardize {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        rates: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Nearest-neighbour recognition on a stratified split.
    Classify(InputOut),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = RunConfig::load(cli.config.as_deref(), cli.params)?;
    let parallel = matches!(cli.command, Command::Dist(_) | Command::Classify(_));
    let threads = if parallel { cli.jobs.unwrap_or(0) } else { 1 };
    if cli.jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Synth { spec, out } => commands::synth(&cfg, &spec, &out),
        Command::Convert(a) => commands::convert(&cfg, &a.input, &a.out),
        Command::Dist(a) => commands::dist(&cfg, &a.input, &a.out),
        Command::Align(a) => commands::align(&cfg, &a.io.input, a.reference.as_deref(), &a.io.out),
        Command::Rates(a) => commands::rates(&cfg, &a.io.input, a.reference.as_deref(), &a.io.out),
        Command::Fit(a) => commands::fit(&cfg, &a.io.input, a.reference.as_deref(), &a.io.out),
        Command::Gp { rates, out } => commands::gp(&cfg, &rates, &out),
        Command::Sir { aligned: a, model } => {
            commands::sir(&cfg, &a.io.input, a.reference.as_deref(), &model, &a.io.out)
        }
        Command::Bottleneck { rates, out } => commands::bottleneck(&cfg, &rates, &out),
        Command::Bestpractice { aligned: a, model } => {
            commands::bestpractice(&cfg, &a.io.input, a.reference.as_deref(), &model, &a.io.out)
        }
        Command::Variation { model, out } => commands::variation(&cfg, &model, &out),
        Command::Restandardize { reference, rates, out } => commands::restandardize(&cfg, &reference, &rates, &out),
        Command::Classify(a) => commands::classify(&cfg, &a.input, &a.out),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("invalid usage");
            eprintln!("motionlab: {first} (see --help)");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("motionlab: error: {}", e.message().replace('\n', " "));
            ExitCode::from(e.code())
        }
    }
}
