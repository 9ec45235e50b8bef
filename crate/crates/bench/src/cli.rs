//! Command-line interface.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{ExperimentConfig, SCHEMA};
use crate::error::{BenchError, Result};
use crate::experiment::run_experiment_with_jobs;
use crate::report::emit_roc;
use crate::timing::run_timing;

#[derive(Debug, Parser)]
#[command(name = "unidr", about = "Dimensionality reduction benchmarks for facial action unit detection")]
pub struct Cli {
    /// Print the annotated configuration schema and exit.
    #[arg(long)]
    pub print_schema: bool,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; defaults to the config's `output` or `out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every (label, method) cell and write reports.
    Run(Common),
    /// Time each method's fit and the scaling series.
    Timing(Common),
    /// Run the experiment and print the path of one cell's ROC curve.
    Roc {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        label: String,
        #[arg(long)]
        method: String,
    },
    /// Parse and check a configuration without running it.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let mut config = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if common.jobs == 0 {
        return Err(BenchError::config("--jobs", "must be at least 1"));
    }
    let out = common.out.clone().unwrap_or_else(|| config.output_dir());
    Ok((config, out))
}

pub fn execute(cli: &Cli, stdout: &mut impl Write) -> Result<()> {
    let io = |e: std::io::Error| BenchError::Report(e.to_string());
    if cli.print_schema {
        return stdout.write_all(SCHEMA.as_bytes()).map_err(io);
    }
    let Some(command) = &cli.command else {
        return Err(BenchError::config("<command>", "no subcommand given; see --help"));
    };
    match command {
        Command::Run(common) => {
            let (config, out) = load(common)?;
            let report = run_experiment_with_jobs(&config, common.jobs)?;
            report.write_all(&out)?;
            stdout.write_all(report.to_table().as_bytes()).map_err(io)?;
        }
        Command::Timing(common) => {
            let (config, out) = load(common)?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(common.jobs)
                .build()
                .map_err(|e| BenchError::config("--jobs", e.to_string()))?;
            let report = pool.install(|| run_timing(&config))?;
            report.write_all(&out)?;
            stdout.write_all(report.to_text().as_bytes()).map_err(io)?;
        }
        Command::Roc { common, label, method } => {
            let (config, out) = load(common)?;
            let report = run_experiment_with_jobs(&config, common.jobs)?;
            report.write_all(&out)?;
            let path = out.join("roc").join(format!("{label}_{method}.csv"));
            emit_roc(&report, label, method, &path)?;
            writeln!(stdout, "{}", path.display()).map_err(io)?;
        }
        Command::ValidateConfig { config } => {
            let c = ExperimentConfig::load(config)?;
            writeln!(stdout, "ok: {} methods, seed {}", c.methods.len(), c.seed).map_err(io)?;
        }
    }
    Ok(())
}
