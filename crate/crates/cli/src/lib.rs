//! The `geoshift` command line: dataset summaries, band statistics, landscape
//! clustering, shift analysis and cross-group evaluation.

pub mod args;
mod commands;
pub mod output;

use anyhow::{Context, Result};

pub use args::{Cli, Command};

/// Runs one command inside a thread pool of the requested size.
pub fn run(cli: Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .context("cannot start worker threads")?;
    pool.install(|| dispatch(&cli.command))
}

fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Summarize {
            manifest,
            output_dir,
            format,
        } => commands::summarize(manifest, output_dir.as_deref(), *format),
        Command::Fixture(fixture) => commands::fixture(fixture),
        Command::Stats {
            manifest,
            output_dir,
            stride,
            grid,
            group_by,
            format,
        } => commands::stats(manifest, output_dir, *stride, *grid, *group_by, *format),
        Command::Cluster {
            manifest,
            output_dir,
            k,
            seed,
            restarts,
            reps,
            max_iter,
            tol,
        } => commands::cluster(manifest, output_dir, *k, *seed, *restarts, *reps, *max_iter, *tol),
        Command::Shift(args) => commands::shift(args),
        Command::Evaluate(args) => commands::evaluate(args),
    }
}
