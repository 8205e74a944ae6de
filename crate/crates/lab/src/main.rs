use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use geneo_lab::{run_experiment, thread_cap, ExperimentConfig, RunOptions};

#[derive(Parser)]
#[command(name = "geneo-lab", version, about = "Run GenEO experiment sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory; defaults to `output.dir` relative to the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for random right-hand sides.
        #[arg(long)]
        seed: Option<u64>,
        /// Run sweep points concurrently.
        #[arg(long)]
        parallel: bool,
    },
    /// Parse and validate a config without running it.
    Check { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    if let Some(n) = thread_cap() {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::Check { config } => {
            ExperimentConfig::load(&config)?;
            println!("{}: ok", config.display());
            Ok(true)
        }
        Command::Run {
            config,
            out,
            seed,
            parallel,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let opts = RunOptions {
                out_dir: out,
                seed,
                parallel,
            };
            let summary = run_experiment(&cfg, &opts)
                .with_context(|| format!("running {}", config.display()))?;
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            for f in &summary.failures {
                eprintln!("failed: {f}");
            }
            for v in &summary.violations {
                eprintln!("bound violated: {v}");
            }
            Ok(summary.success())
        }
    }
}
