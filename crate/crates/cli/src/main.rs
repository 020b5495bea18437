use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hesseig_cli::config::{Mode, RawConfig};
use hesseig_cli::run::{self, RunError};

#[derive(Parser)]
#[command(name = "hesseig", version, about = "Weighted k-Hessian eigenvalue runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a config entry, e.g. --set solver.h=1/64. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Concurrent δ jobs for sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Output directory; beats HESSEIG_OUT and outputs.dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Grid eigenvalue λ_δ and eigenfunction at one δ.
    Eigen,
    /// Radial oracle on a disk (Bessel for k = 1, shooting otherwise).
    Oracle,
    /// δ-sweep with extrapolation to δ = 0.
    Sweep,
    /// Estimates, Hölder fit, boundary slope and linearized eigenvalue of a snapshot.
    Verify,
    /// Truncated gradient flow from a convex initial field.
    Flow,
}

impl Command {
    fn mode(self) -> Mode {
        match self {
            Command::Eigen => Mode::Eigen,
            Command::Oracle => Mode::Oracle,
            Command::Sweep => Mode::Sweep,
            Command::Verify => Mode::Verify,
            Command::Flow => Mode::Flow,
        }
    }
}

fn execute(cli: &Cli, mode: Mode) -> Result<(), RunError> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|source| RunError::Io { path: path.clone(), source })?,
        None => String::new(),
    };
    let mut raw = RawConfig::parse(&text)?;
    raw.set(&format!("run.mode={}", mode.name()))?;
    for s in &cli.set {
        raw.set(s)?;
    }
    if let Some(j) = cli.jobs {
        raw.set(&format!("solver.jobs={j}"))?;
    }
    let mut cfg = raw.resolve()?;
    if let Ok(dir) = std::env::var("HESSEIG_OUT") {
        cfg.outputs.dir = PathBuf::from(dir);
    }
    if let Some(dir) = &cli.out {
        cfg.outputs.dir = dir.clone();
    }
    let dir = cfg.outputs.dir.clone();
    run::run(&cfg, mode, &dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mode = cli.command.mode();
    match execute(&cli, mode) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json(Some(mode)));
            ExitCode::from(if matches!(e, RunError::Config(_)) { 2 } else { 1 })
        }
    }
}
