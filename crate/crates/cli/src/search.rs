use std::time::Instant;

use anyhow::Result;
use clap::Args;
use hybrid_nogo::nogo::{adversarial_search, SearchConfig, FEASIBILITY_TOL};
use serde_json::json;

use crate::args::{parse_dims, GlobalArgs, DEFAULT_SEED};
use crate::report::Report;
use crate::Status;

/// Signalling above this at a reversible point counts as a counterexample.
pub const SIGNALLING_ACCEPT: f64 = 1e-6;

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Classical x quantum dimension.
    #[arg(long, value_parser = parse_dims, default_value = "2x2")]
    pub dims: (usize, usize),
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    /// Weight of the irreversibility penalty.
    #[arg(long, default_value_t = 1e4)]
    pub penalty: f64,
    /// Iterations per refinement stage.
    #[arg(long, default_value_t = 200)]
    pub iterations: usize,
    /// Include the per-stage trace in the report.
    #[arg(long)]
    pub trace: bool,
}

pub fn run(g: &GlobalArgs, a: SearchArgs) -> Result<Status> {
    let started = Instant::now();
    let (n, d) = a.dims;
    let mut cfg = SearchConfig::new(n, d, a.restarts, a.penalty, g.seed.unwrap_or(DEFAULT_SEED));
    cfg.iterations = a.iterations;
    let accept = g.tol.unwrap_or(SIGNALLING_ACCEPT);
    let outcome = adversarial_search(&cfg)?;

    let falsified = outcome.feasible_signalling.is_some_and(|s| s > accept);
    let mut report = Report::new("search", json!({ "search": &cfg, "tol": accept }), cfg.seed)?;
    report.samples = outcome.evaluations;
    report.residuals.insert("best_signalling".into(), outcome.best_signalling);
    report.residuals.insert("best_irreversibility".into(), outcome.best_irreversibility);
    if let Some(s) = outcome.feasible_signalling {
        report.residuals.insert("reversible_signalling".into(), s);
    }
    report.verdict = json!({
        "reversible_signalling_found": falsified,
        "best_objective": outcome.best_objective,
        "feasibility_tol": FEASIBILITY_TOL,
    });
    if a.trace {
        report.details = json!({ "trace": outcome.trace });
    }
    report.finish(g, started)?;
    Ok(if falsified { Status::Falsified } else { Status::Consistent })
}
