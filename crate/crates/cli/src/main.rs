//! `hamlat` — stochastic Hamiltonian lattice toolkit.
//!
//! Every subcommand reads one strict JSON configuration document, writes its
//! machine-readable artifacts into the output directory, and finishes with a
//! manifest (config echo, seed, versions, wall time). Exit codes: 0 success,
//! 2 configuration/validation error, 3 numerical failure.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use commands::CmdError;
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "hamlat", version, about = "stochastic Hamiltonian lattices: most probable paths, large deviations, spectral tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON configuration document
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (created if missing)
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads (defaults to the core count)
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Override the config's seed
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Verify analytic gradients and the symplectic trace identity
    Gradcheck,
    /// Seeded trajectory ensemble
    Simulate,
    /// Minimize the path action for the most probable transition path
    Mpp,
    /// Evaluate the path action and Euler-Lagrange residual
    Action,
    /// Tube-probability ladder and rate-function scaling fit
    Ldp,
    /// Small-ball constants and the weighted lower bound
    Smallball,
    /// Karhunen-Loève eigenpairs of the integrated noise
    Kl,
    /// Quartic coupling tables G and Ḡ
    NlsCoeffs,
    /// Torus-deviation ladder for the spectral model
    NlsTori,
    /// Diophantine admissibility scan and resonant-measure fractions
    KamScan,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Gradcheck => "gradcheck",
            Command::Simulate => "simulate",
            Command::Mpp => "mpp",
            Command::Action => "action",
            Command::Ldp => "ldp",
            Command::Smallball => "smallball",
            Command::Kl => "kl",
            Command::NlsCoeffs => "nls-coeffs",
            Command::NlsTori => "nls-tori",
            Command::KamScan => "kam-scan",
        }
    }
}

fn run(cli: &Cli) -> Result<(), CmdError> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CmdError::Validation("--config <path> is required".into()))?;
    let raw = std::fs::read_to_string(config_path).map_err(|e| {
        CmdError::Validation(format!("cannot read config {}: {e}", config_path.display()))
    })?;
    let cfg: RunConfig = serde_json::from_str(&raw)
        .map_err(|e| CmdError::Validation(format!("config does not parse: {e}")))?;
    if let Err(problems) = cfg.validate() {
        return Err(CmdError::Validation(format!(
            "config validation failed:\n  - {}",
            problems.join("\n  - ")
        )));
    }
    let seed = cli.seed.unwrap_or(cfg.seed);

    if let Some(workers) = cli.workers {
        // ignore the error when a pool already exists (tests re-enter)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| CmdError::Validation(format!("cannot create {}: {e}", cli.out.display())))?;

    let started = Instant::now();
    match cli.command {
        Command::Gradcheck => commands::gradcheck(&cfg, &cli.out, seed)?,
        Command::Simulate => commands::simulate_cmd(&cfg, &cli.out, seed)?,
        Command::Mpp => commands::mpp(&cfg, &cli.out, seed)?,
        Command::Action => commands::action(&cfg, &cli.out, seed)?,
        Command::Ldp => commands::ldp(&cfg, &cli.out, seed)?,
        Command::Smallball => commands::smallball(&cfg, &cli.out, seed)?,
        Command::Kl => commands::kl(&cfg, &cli.out, seed)?,
        Command::NlsCoeffs => commands::nls_coeffs(&cfg, &cli.out, seed)?,
        Command::NlsTori => commands::nls_tori(&cfg, &cli.out, seed)?,
        Command::KamScan => commands::kam_scan(&cfg, &cli.out, seed)?,
    }

    let manifest = serde_json::json!({
        "command": cli.command.name(),
        "seed": seed,
        "config": serde_json::from_str::<serde_json::Value>(&raw).unwrap(),
        "versions": {
            "hamlat-cli": env!("CARGO_PKG_VERSION"),
        },
        "wall_time_s": started.elapsed().as_secs_f64(),
    });
    std::fs::write(
        cli.out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).unwrap() + "\n",
    )
    .map_err(|e| CmdError::Validation(format!("cannot write manifest: {e}")))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CmdError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
