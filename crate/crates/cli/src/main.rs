//! `hybrid-nogo` command-line front end.
//!
//! Exit codes: 0 on success, 1 on input or parameter errors, 2 when a run
//! produces a theorem-falsifying result or a campaign residual breach.

mod analyze;
mod args;
mod campaign;
mod decompose;
mod fixtures;
mod report;
mod search;
mod sn;

use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use args::GlobalArgs;

pub const THREADS_ENV: &str = "HYBRID_NOGO_THREADS";

#[derive(Debug, Parser)]
#[command(name = "hybrid-nogo", version, about = "Classical-quantum interaction analysis and Schrodinger-Newton runs")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify a channel file against the four theorem conditions.
    Analyze(analyze::AnalyzeArgs),
    /// Randomized campaign over reversible classical-quantum interactions.
    VerifyTheorem(campaign::CampaignArgs),
    /// Penalized search for reversible interactions that signal.
    Search(search::SearchArgs),
    /// Superselection sectors of a generator or state set.
    Decompose(decompose::DecomposeArgs),
    /// Schrodinger-Newton runs.
    #[command(subcommand)]
    Sn(sn::SnCommand),
    /// Write the fixture channels and their manifest.
    Fixtures(fixtures::FixturesArgs),
}

/// Whether a run completed cleanly or tripped a falsification check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Consistent,
    Falsified,
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().with_context(|| format!("{THREADS_ENV}={raw:?} is not a count"))?;
    if threads == 0 {
        bail!("{THREADS_ENV} must be at least 1");
    }
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<Status> {
    configure_threads()?;
    let g = &cli.global;
    match cli.command {
        Command::Analyze(a) => analyze::run(g, a),
        Command::VerifyTheorem(a) => campaign::run(g, a),
        Command::Search(a) => search::run(g, a),
        Command::Decompose(a) => decompose::run(g, a),
        Command::Sn(c) => sn::run(g, c),
        Command::Fixtures(a) => fixtures::run(g, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Status::Consistent) => ExitCode::SUCCESS,
        Ok(Status::Falsified) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
