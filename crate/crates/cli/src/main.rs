//! `ptlab`: reproducible runs of the PT-region pipeline from a TOML config.

mod commands;
mod config;
mod failure;
mod output;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context as _, Result};
use clap::{Parser, Subcommand};
use ptlab_core::models::ModelRegistry;

use crate::commands::Context;
use crate::config::RunConfig;
use crate::failure::{exit_code, CheckFailed, ConfigError};
use crate::output::OutputDir;

#[derive(Parser, Debug)]
#[command(name = "ptlab", version, about = "Perturbative regions of eigenfunctions and their classical counterparts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML). Optional for `validate`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true, env = "PTLAB_OUT")]
    out: Option<PathBuf>,
    /// Worker threads; overrides `threads` in the config.
    #[arg(long, global = true, env = "PTLAB_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq)]
enum Command {
    /// Energies, eigenfunction components and averaged shapes.
    Spectrum,
    /// PT regions with their W spectra, shifts and series errors.
    Pt,
    /// Series evaluations with term-norm histories.
    Series,
    /// Classically forbidden masks on the quantum lattice.
    Classical,
    /// PT border against classical border.
    Compare,
    /// Border distance across model sizes.
    Study,
    /// Identity and oracle checks with measured values.
    Validate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Pt => "pt",
            Command::Series => "series",
            Command::Classical => "classical",
            Command::Compare => "compare",
            Command::Study => "study",
            Command::Validate => "validate",
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None if cli.command == Command::Validate => RunConfig::default(),
        None => return Err(ConfigError("--config is required for this subcommand".into()).into()),
    };
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load(cli)?;
    // Sequential dense kernels keep results independent of the thread count.
    faer::set_global_parallelism(faer::Par::Seq);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build().context("thread pool")?;
    let out = OutputDir::create(&cfg.out)?;
    let mut ctx = Context { cfg: &cfg, registry: ModelRegistry::builtin(), out };
    ctx.registry.get(&cfg.model.name).map_err(|e| ConfigError(format!("model.name: {e}")))?;
    let command = cli.command;
    let failed = pool.install(|| -> Result<Vec<String>> {
        let t = std::time::Instant::now();
        let result = match command {
            Command::Spectrum => commands::spectrum(&mut ctx).map(|_| Vec::new()),
            Command::Pt => commands::pt(&mut ctx).map(|_| Vec::new()),
            Command::Series => commands::series(&mut ctx).map(|_| Vec::new()),
            Command::Classical => commands::classical(&mut ctx).map(|_| Vec::new()),
            Command::Compare => commands::compare_cmd(&mut ctx).map(|_| Vec::new()),
            Command::Study => commands::study(&mut ctx).map(|_| Vec::new()),
            Command::Validate => validate::validate(&mut ctx),
        };
        log::info!("{} finished in {:.1?}", command.name(), t.elapsed());
        ctx.out.add_timing("total", t.elapsed().as_secs_f64());
        result
    })?;
    let seed = (command == Command::Validate).then_some(cfg.validate.seed);
    let echo = serde_json::to_value(&cfg)?;
    ctx.out.finish(command.name(), cfg.threads, seed, echo)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CheckFailed(failed).into())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
