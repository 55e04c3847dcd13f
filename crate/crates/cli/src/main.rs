use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod config;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] hypodist::Error),
    #[error("{0} validation checks failed")]
    Validation(usize),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
}

impl CliError {
    pub fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> Self {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(hypodist::Error::ShapeInfeasible) => 2,
            CliError::Core(hypodist::Error::IterationLimit { .. }) => 3,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "hypodist", version, about = "Hypo-distances and shape-constrained CDF estimation")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized steps; overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress progress and summary output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate a CDF near F0 inside the ambiguity ball around G0.
    Estimate,
    /// Hat-distances, partition bounds, ρ-distance oracle and hypo-distance of two functions.
    Distance,
    /// Estimate on a sequence of refined grids and validate each level.
    Study,
    /// Write ready-to-run configs (and sample files) for a scenario.
    Generate {
        #[arg(value_enum)]
        scenario: Scenario,
    },
    /// Randomized checks of the distance bounds plus the fixed fixtures.
    Validate,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Scenario {
    TwoUniforms,
    UuvSynthetic,
}

pub struct Context {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quiet: bool,
}

impl Context {
    /// Output directory: the flag, then the config value, then `hypodist-out`.
    pub fn out_dir(&self, from_config: Option<&Path>, base: &Path) -> PathBuf {
        match (&self.out, from_config) {
            (Some(p), _) => p.clone(),
            (None, Some(p)) if p.is_absolute() => p.to_path_buf(),
            (None, Some(p)) => base.join(p),
            (None, None) => PathBuf::from("hypodist-out"),
        }
    }

    pub fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("HYPODIST_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Config(format!("HYPODIST_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(CliError::Config("HYPODIST_THREADS must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let ctx = Context {
        out: cli.out,
        seed: cli.seed,
        quiet: cli.quiet,
    };
    let need_config = || cli.config.clone().ok_or_else(|| CliError::Config("--config is required".into()));
    match cli.command {
        Command::Estimate => commands::estimate(&need_config()?, &ctx),
        Command::Distance => commands::distance(&need_config()?, &ctx),
        Command::Study => commands::study(&need_config()?, &ctx),
        Command::Generate { scenario } => commands::generate(scenario, &ctx),
        Command::Validate => commands::validate(cli.config.as_deref(), &ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hypodist: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
