//! Argument parsing and dispatch.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use crate::commands;
use crate::config::RunConfig;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const ERROR: u8 = 1;
    pub const USAGE: u8 = 2;
    /// Training stopped at the episode cap without meeting the streak.
    pub const NOT_CONVERGED: u8 = 3;
}

#[derive(Debug, Parser)]
#[command(name = "navq", version, about = "Dual-map deep Q-learning navigation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a world file.
    GenerateWorld {
        #[command(flatten)]
        common: Common,
        /// Also dump the start-cell camera frame as PGM.
        #[arg(long)]
        frame: bool,
    },
    /// Train in teleport mode; exit 0 on convergence, 3 at the episode cap.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Fly the test sequence, a subset of it, or a single mission.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Fly one mission built from --domain, --weather, --intensity, --side and --distance.
        #[arg(long)]
        single: bool,
        /// desk or full.
        #[arg(long)]
        scale: Option<String>,
        #[arg(long)]
        side: Option<u32>,
        #[arg(long)]
        distance: Option<f64>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Q-value decay experiment for the double and extended double rules.
    Decay {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        updates: Option<usize>,
        #[arg(long)]
        population: Option<usize>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = "NAV_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// dqn, ddqn, eddqn, drqn100 or drqn1000.
    #[arg(long)]
    pub rule: Option<String>,
    /// clear, snow, dust or fog.
    #[arg(long)]
    pub weather: Option<String>,
    #[arg(long)]
    pub intensity: Option<f64>,
    /// forest, plain or savanna.
    #[arg(long)]
    pub domain: Option<String>,
    /// Path to a world file used instead of generating one.
    #[arg(long)]
    pub world: Option<PathBuf>,
    /// Any configuration key, as KEY=VALUE; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

fn put<T: ToString>(cfg: &mut RunConfig, key: &str, v: &Option<T>) -> Result<()> {
    match v {
        Some(v) => cfg.set(key, &v.to_string()),
        None => Ok(()),
    }
}

impl Common {
    /// Configuration file, then `--set` pairs, then dedicated flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        for pair in &self.set {
            let (k, v) = pair.split_once('=').ok_or_else(|| anyhow::anyhow!("--set takes KEY=VALUE"))?;
            cfg.set(k.trim(), v.trim())?;
        }
        put(&mut cfg, "seed", &self.seed)?;
        put(&mut cfg, "rule", &self.rule)?;
        put(&mut cfg, "weather", &self.weather)?;
        put(&mut cfg, "intensity", &self.intensity)?;
        put(&mut cfg, "domain", &self.domain)?;
        put(&mut cfg, "out", &self.out.as_ref().map(|p| p.display().to_string()))?;
        put(&mut cfg, "world", &self.world.as_ref().map(|p| p.display().to_string()))?;
        Ok(cfg)
    }
}

/// Errors in the configuration itself, reported as usage errors.
#[derive(Debug, thiserror::Error)]
#[error("{0:#}")]
pub struct UsageError(anyhow::Error);

fn usage<T>(r: Result<T>) -> Result<T> {
    r.map_err(|e| UsageError(e).into())
}

/// Runs a parsed command and returns the exit code.
pub fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::GenerateWorld { common, frame } => {
            let cfg = usage(common.resolve())?;
            let g = commands::generate_world(&cfg, frame)?;
            println!(
                "wrote {} with {} obstacles (seed {})",
                g.path.display(),
                g.world.obstacles().len(),
                g.world.spec().seed
            );
            Ok(exit::OK)
        }
        Command::Train { common } => {
            let cfg = usage(common.resolve())?;
            let r = commands::train(&cfg)?;
            let status = if r.converged { "converged" } else { "reached the episode cap" };
            println!("{status} after {} episodes; wrote {} and {}", r.episodes, r.checkpoint.display(), r.log.display());
            Ok(if r.converged { exit::OK } else { exit::NOT_CONVERGED })
        }
        Command::Evaluate { common, checkpoint, single, scale, side, distance, runs, workers } => {
            let cfg = usage((|| {
                let mut cfg = common.resolve()?;
                put(&mut cfg, "checkpoint", &checkpoint.map(|p| p.display().to_string()))?;
                if single {
                    cfg.set("missions", "single")?;
                }
                put(&mut cfg, "scale", &scale)?;
                put(&mut cfg, "side", &side)?;
                put(&mut cfg, "distance", &distance)?;
                put(&mut cfg, "runs", &runs)?;
                put(&mut cfg, "workers", &workers)?;
                Ok(cfg)
            })())?;
            let runs = commands::evaluate(&cfg)?;
            for (k, results) in runs.iter().enumerate() {
                let done = results.iter().filter(|r| r.report.completed).count();
                println!("run {}: {done}/{} missions completed -> {}", k + 1, results.len(), commands::run_dir(&cfg, k).display());
            }
            Ok(exit::OK)
        }
        Command::Decay { common, updates, population } => {
            let cfg = usage((|| {
                let mut cfg = common.resolve()?;
                put(&mut cfg, "updates", &updates)?;
                put(&mut cfg, "population", &population)?;
                Ok(cfg)
            })())?;
            let (results, path) = commands::decay(&cfg)?;
            for r in &results {
                println!("{}: final median {:.6}", r.rule.name(), r.final_median());
            }
            println!("wrote {}", path.display());
            Ok(exit::OK)
        }
    }
}

/// Exit code for an error returned by [`run`].
pub fn error_code(e: &anyhow::Error) -> u8 {
    if e.is::<UsageError>() {
        exit::USAGE
    } else {
        exit::ERROR
    }
}
