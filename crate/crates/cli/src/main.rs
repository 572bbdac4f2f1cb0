//! `tdpt`: runs perturbation-theory experiments described by TOML configs.
//!
//! Exit codes: 0 success, 1 I/O or library error, 2 config error,
//! 3 numerical-policy violation.

mod config;
mod error;
mod output;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;
use error::CliError;
use run::Job;

#[derive(Debug, Parser)]
#[command(name = "tdpt", version, about = "Time-dependent perturbation theory experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; each module writes into a subdirectory named after it.
    #[arg(long)]
    out: PathBuf,
    /// Reserved; no component is stochastic. Echoed into the manifest.
    #[arg(long)]
    seed: Option<u64>,
    /// Progress messages on stderr.
    #[arg(long)]
    verbose: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Standard perturbation theory: first-order amplitudes, RK4 coefficients, Euler demo.
    Dirac(Common),
    /// Observable expectations from the gauge-invariant rate operators.
    Quasicanon(Common),
    /// s-matrix elements and the two-observable consistency table.
    Soperator(Common),
    /// Direct propagation on the full truncated basis.
    Oracle(Common),
    /// Join perturbative and oracle quantities already written under `--out`.
    Compare {
        #[arg(long)]
        out: PathBuf,
    },
    /// Every module with a section in the config, then `compare`.
    Run(Common),
    /// `run` for several configs concurrently, each into `<out>/<config stem>/`.
    Sweep {
        #[arg(long = "config", required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        verbose: bool,
    },
}

fn single(common: &Common, pipeline: fn(&Job<'_>) -> Result<(), CliError>) -> Result<(), CliError> {
    run_config(&common.config, &common.out, common.seed, common.verbose, pipeline)
}

fn run_config(
    config: &Path,
    out: &Path,
    seed: Option<u64>,
    verbose: bool,
    pipeline: fn(&Job<'_>) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let cfg = ExperimentConfig::from_path(config)?;
    let resolved = cfg.resolve()?;
    output::create_dir(out)?;
    pipeline(&Job { config: &cfg, resolved: &resolved, out, seed, verbose })
}

fn sweep(configs: &[PathBuf], out: &Path, seed: Option<u64>, verbose: bool) -> Result<(), CliError> {
    let results: Vec<(PathBuf, Result<(), CliError>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|path| {
                let stem = path.file_stem().map(|s| s.to_os_string()).unwrap_or_else(|| "run".into());
                let dir = out.join(stem);
                scope.spawn(move || (path.clone(), run_config(path, &dir, seed, verbose, run::run_all)))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let failed: Vec<_> = results.iter().filter(|(_, r)| r.is_err()).collect();
    for (path, r) in &failed {
        if let Err(e) = r {
            eprintln!("tdpt: {}: {e}", path.display());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Sweep { failed: failed.len(), total: results.len() })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Dirac(c) => single(c, run::dirac),
        Command::Quasicanon(c) => single(c, run::quasicanon),
        Command::Soperator(c) => single(c, run::soperator),
        Command::Oracle(c) => single(c, run::oracle),
        Command::Run(c) => single(c, run::run_all),
        Command::Compare { out } => run::compare(out).map(|_| ()),
        Command::Sweep { configs, out, seed, verbose } => sweep(configs, out, *seed, *verbose),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tdpt: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
