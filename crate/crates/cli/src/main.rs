use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

mod commands;

#[derive(Parser)]
#[command(name = "zosadom", version, about = "Decentralized zeroth-order optimization experiments")]
struct Cli {
    /// Override a config entry, e.g. `--override oracle.batch=16`. Repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write the metrics CSV.
    Run {
        config: PathBuf,
        /// CSV destination; overrides `output` in the config. `-` for stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Reuse a reference solution written by `reference`.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Per-round spectral statistics of the graph sequence.
    GraphInfo {
        config: PathBuf,
        #[arg(long, default_value_t = 100)]
        rounds: u64,
    },
    /// Compute the reference minimizer and write it as JSON.
    Reference {
        config: PathBuf,
        /// Destination; defaults to `<config stem>.reference.json` next to the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check the gossip-matrix contract on the first rounds of the sequence.
    VerifyGossip {
        config: PathBuf,
        #[arg(long, default_value_t = 100)]
        rounds: u64,
        /// Random zero-sum vectors per round for the contraction check.
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
    /// Monte-Carlo check of the estimator second-moment and bias bounds.
    VerifyOracle {
        config: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// CSV destination, stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Iteration, communication and oracle budgets for `stop.epsilon`.
    Budget { config: PathBuf },
    /// Run the config's graph and a ring/star sequence to the same gaps.
    Compare {
        config: PathBuf,
        /// Gap thresholds relative to the initial gap.
        #[arg(long, value_delimiter = ',', default_values_t = [1e-1, 1e-2, 1e-3])]
        relative_gaps: Vec<f64>,
        /// Use `beta = scale / (2L)` for both topologies.
        #[arg(long)]
        beta_scale: Option<f64>,
        #[arg(long)]
        reference: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        return report(e);
    }
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => report(e),
    }
}

fn report(e: anyhow::Error) -> ExitCode {
    let chain: Vec<String> = e.chain().map(|c| c.to_string().replace('\n', " ")).collect();
    eprintln!("error: {}", chain.join(": "));
    ExitCode::from(1)
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("ZO_SADOM_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("ZO_SADOM_THREADS must be a non-negative integer, got {raw:?}"))?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    let ov = &cli.overrides;
    match cli.command {
        Command::Run {
            config,
            output,
            reference,
        } => commands::run(&config, ov, output, reference.as_deref()),
        Command::GraphInfo { config, rounds } => commands::graph_info(&config, ov, rounds),
        Command::Reference { config, output } => {
            let out = output.unwrap_or_else(|| default_reference_path(&config));
            commands::reference(&config, ov, &out)
        }
        Command::VerifyGossip { config, rounds, samples } => commands::verify_gossip(&config, ov, rounds, samples),
        Command::VerifyOracle { config, samples, output } => commands::verify_oracle(&config, ov, samples, output),
        Command::Budget { config } => commands::budget(&config, ov),
        Command::Compare {
            config,
            relative_gaps,
            beta_scale,
            reference,
        } => commands::compare(&config, ov, &relative_gaps, beta_scale, reference.as_deref()),
    }
}

fn default_reference_path(config: &Path) -> PathBuf {
    let stem = config.file_stem().and_then(|s| s.to_str()).unwrap_or("config");
    config.with_file_name(format!("{stem}.reference.json"))
}

/// Writes `text` to `path`, or to stdout when `path` is absent or `-`.
pub(crate) fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) if p != Path::new("-") => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        _ => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if !cond {
        bail!(msg());
    }
    Ok(())
}
