//! `ccrm`: generate graphs, fit them, and summarize the fits.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "ccrm", version, about = "Sparse graphs with overlapping communities")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `io.out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a graph and write it with its latent truth.
    Generate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
    },
    /// Run the MCMC sampler on an edge list and save the traces.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
        /// Edge list (overrides `io.graph`).
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// Posterior predictive degree distribution and graph statistics.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        /// Trace directory (overrides `io.trace_dir`).
        #[arg(long)]
        traces: Option<PathBuf>,
        /// Observed graph to compare against.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, default_value_t = 300)]
        samples: usize,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
    /// Point estimate, credible intervals, community ordering and degree
    /// summaries.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        traces: Option<PathBuf>,
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Posterior samples used by the point estimate.
        #[arg(long, default_value_t = ccrm::analysis::estimate::DEFAULT_SUBSAMPLE)]
        subsample: usize,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
    /// Sparsity scan over `generate.alpha_grid`.
    Scan {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(commands::exit_code(&e))
        }
    }
}

/// The error and its causes, skipping causes already quoted in the message.
fn describe(e: &anyhow::Error) -> String {
    let mut msg = e.to_string();
    for cause in e.chain().skip(1) {
        let c = cause.to_string();
        if !msg.contains(&c) {
            msg = format!("{msg}: {c}");
        }
    }
    msg
}
