//! `forcelab`: graph generation, embeddings, force features and mean-field
//! checks from the command line.

mod common;
mod config;
mod embed;
mod forces;
mod graph_cmd;
mod meanfield;
mod ring;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

use common::UsageError;

#[derive(Parser, Debug)]
#[command(name = "forcelab", version, about = "Exact t-SNE laboratory for random-graph embeddings")]
struct Cli {
    /// Flat key = value file supplying defaults for the subcommand's flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate a random k-regular or Erdős–Rényi graph
    GenGraph(graph_cmd::GenGraphArgs),
    /// Embed a graph or point cloud with exact t-SNE
    Embed(embed::EmbedArgs),
    /// Decompose forces on an embedding and export per-point features
    Forces(forces::ForcesArgs),
    /// Run the energy-statistics sweep over (n, p, trial)
    Sweep(sweep::SweepArgs),
    /// Check the radial minimizer and the mean-field expansions
    Meanfield(meanfield::MeanFieldArgs),
    /// Ring statistics (and optionally energy statistics) of an embedding
    RingStats(ring::RingStatsArgs),
}

fn threads() -> Result<()> {
    let Ok(v) = std::env::var("FORCELAB_THREADS") else {
        return Ok(());
    };
    let n: usize = match v.parse() {
        Ok(n) if n > 0 => n,
        _ => return common::usage(format!("FORCELAB_THREADS must be a positive integer, got '{v}'")),
    };
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn dispatch() -> Result<()> {
    let cmd = Cli::command();
    let args = config::merge(&cmd, std::env::args_os().collect())?;
    let matches = cmd.try_get_matches_from(args).unwrap_or_else(|e| e.exit());
    let cli = Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    threads()?;
    match &cli.command {
        Cmd::GenGraph(a) => graph_cmd::run(a),
        Cmd::Embed(a) => embed::run(a),
        Cmd::Forces(a) => forces::run(a),
        Cmd::Sweep(a) => sweep::run(a),
        Cmd::Meanfield(a) => meanfield::run(a),
        Cmd::RingStats(a) => ring::run(a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if let Some(forcelab::Error::InvalidParameter { .. }) = cause.downcast_ref::<forcelab::Error>() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
