mod commands;
mod config;
mod formats;

use anyhow::Result;
use clap::{Parser, Subcommand};
use config::{ExperimentConfig, StateKind};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "qutrit-sim",
    about = "Spin-1 qutrit pulse simulator: levels, spectra, tomography and phase-interference patterns"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Energy levels vs field, as CSV
    Levels {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of field points
        #[arg(long, default_value_t = 201)]
        grid: usize,
    },
    /// Powder field-sweep spectrum and orientation selection
    Edfs {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of field points
        #[arg(long, default_value_t = 801)]
        grid: usize,
    },
    /// Prepare a superposition state and dump its density matrix
    Prepare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        state: StateKind,
    },
    /// Prepare a state and reconstruct it by simulated tomography
    Tomo {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        state: StateKind,
    },
    /// Two-phase interference pattern over a phase grid
    Interfere {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Grid size (power of two), overrides the config
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, value_enum)]
        state: Option<StateKind>,
        /// Noise seed (used when pattern.noise_sigma > 0)
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Integer-frequency peaks of a pattern file
    Fft {
        /// Pattern CSV produced by `interfere`
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Remap a pattern's phase axes to evolution time and trace the
    /// physical path through it
    Tppi {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Detuning ratio, overrides the config schedule
        #[arg(long)]
        ratio: Option<f64>,
    },
    /// Phase-space winding path and its closure classification
    Torus {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        t_max_us: f64,
        /// Number of path samples
        #[arg(long, default_value_t = 256)]
        grid: usize,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Levels { config, out, grid } => {
            let cfg = ExperimentConfig::load(&config)?;
            commands::cmd_levels(&cfg, &commands::out_dir(&cfg, out.as_deref()), grid)
        }
        Command::Edfs { config, out, grid } => {
            let cfg = ExperimentConfig::load(&config)?;
            commands::cmd_edfs(&cfg, &commands::out_dir(&cfg, out.as_deref()), grid)
        }
        Command::Prepare { config, out, state } => {
            let cfg = ExperimentConfig::load(&config)?;
            commands::cmd_prepare(&cfg, &commands::out_dir(&cfg, out.as_deref()), state)
        }
        Command::Tomo { config, out, state } => {
            let cfg = ExperimentConfig::load(&config)?;
            commands::cmd_tomo(&cfg, &commands::out_dir(&cfg, out.as_deref()), state)
        }
        Command::Interfere { config, out, grid, state, seed } => {
            let cfg = ExperimentConfig::load(&config)?;
            commands::cmd_interfere(
                &cfg,
                &commands::out_dir(&cfg, out.as_deref()),
                grid,
                state,
                seed,
            )
        }
        Command::Fft { pattern, out } => {
            commands::cmd_fft(&pattern, out.as_deref().unwrap_or_else(|| std::path::Path::new(".")))
        }
        Command::Tppi { config, pattern, out, ratio } => {
            let cfg = ExperimentConfig::load(&config)?;
            commands::cmd_tppi(&cfg, &pattern, &commands::out_dir(&cfg, out.as_deref()), ratio)
        }
        Command::Torus { config, out, ratio, t_max_us, grid } => {
            let cfg = ExperimentConfig::load(&config)?;
            commands::cmd_torus(
                &cfg,
                &commands::out_dir(&cfg, out.as_deref()),
                ratio,
                t_max_us,
                grid,
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            let payload = serde_json::json!({
                "error": e.to_string(),
                "chain": chain,
            });
            eprintln!("{payload}");
            ExitCode::FAILURE
        }
    }
}
