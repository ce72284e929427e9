mod commands;
mod config;
mod error;
mod manifest;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Config;
use error::CliError;

/// Exact and effective dynamics of the two-site random-matrix model.
#[derive(Debug, Parser)]
#[command(name = "twosite", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML config, or the manifest.json of an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ensemble-averaged relaxation trace with a rate fit.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Levels per site.
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Ensemble size.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Fitted rate and equilibrium over a grid of (N, lambda).
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Class counts of the pairings with split (n, m).
    Diagrams {
        #[command(flatten)]
        common: Common,
        n: Option<usize>,
        m: Option<usize>,
    },
    /// E[Tr V^2k] from the pairing sum against Monte Carlo.
    Moments {
        #[command(flatten)]
        common: Common,
        k: Option<usize>,
        #[arg(value_name = "N")]
        n_levels: Option<usize>,
        #[arg(value_name = "S")]
        samples: Option<usize>,
    },
    /// Closed form, Poisson series and rate equation on the configured grid.
    Effective {
        #[command(flatten)]
        common: Common,
    },
    /// Randomized sweeps of the integral inequalities.
    VerifyBounds {
        #[command(flatten)]
        common: Common,
        samples: Option<usize>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Sweep { .. } => "sweep",
            Command::Diagrams { .. } => "diagrams",
            Command::Moments { .. } => "moments",
            Command::Effective { .. } => "effective",
            Command::VerifyBounds { .. } => "verify-bounds",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Simulate { common, .. }
            | Command::Sweep { common, .. }
            | Command::Diagrams { common, .. }
            | Command::Moments { common, .. }
            | Command::Effective { common }
            | Command::VerifyBounds { common, .. } => common,
        }
    }

    /// Applies command-line values on top of the file config.
    fn override_config(&self, cfg: &mut Config) {
        fn set<T: Copy>(slot: &mut T, value: Option<T>) {
            if let Some(v) = value {
                *slot = v;
            }
        }
        set(&mut cfg.seed, self.common().seed);
        match *self {
            Command::Simulate {
                levels, lambda, samples, ..
            } => {
                set(&mut cfg.model.n_levels, levels);
                set(&mut cfg.model.coupling, lambda);
                set(&mut cfg.ensemble.samples, samples);
            }
            Command::Sweep { samples, .. } => set(&mut cfg.ensemble.samples, samples),
            Command::Diagrams { n, m, .. } => {
                set(&mut cfg.diagrams.n, n);
                set(&mut cfg.diagrams.m, m);
            }
            Command::Moments {
                k, n_levels, samples, ..
            } => {
                set(&mut cfg.moments.k, k);
                set(&mut cfg.moments.n_levels, n_levels);
                set(&mut cfg.moments.samples, samples);
            }
            Command::Effective { .. } => {}
            Command::VerifyBounds { samples, .. } => set(&mut cfg.bounds.samples, samples),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cmd = &cli.command;
    let common = cmd.common();
    if let Some(threads) = common.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Compute(format!("thread pool: {e}")))?;
    }
    let mut cfg = match &common.config {
        Some(path) => config::load(path, cmd.name())?,
        None => Config::default(),
    };
    cmd.override_config(&mut cfg);
    let default_out = PathBuf::from(format!("twosite-{}", cmd.name()));
    let out = common.out.as_deref();
    let run_dir = |out: Option<&Path>| out.map(Path::to_path_buf).unwrap_or_else(|| default_out.clone());
    match cmd {
        Command::Simulate { .. } => commands::simulate(&cfg, &run_dir(out)),
        Command::Sweep { .. } => commands::sweep(&cfg, &run_dir(out)),
        Command::Diagrams { .. } => commands::diagrams(&cfg, out),
        Command::Moments { .. } => commands::moments(&cfg, out),
        Command::Effective { .. } => commands::effective(&cfg, out),
        Command::VerifyBounds { .. } => commands::verify_bounds(&cfg, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
