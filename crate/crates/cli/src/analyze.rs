use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Args;
use hybrid_nogo::channels::parse_channel_document;
use hybrid_nogo::nogo::{theorem_report, DEFAULT_TOL};
use hybrid_nogo::Error;
use serde::Serialize;
use serde_json::json;

use crate::args::{GlobalArgs, DEFAULT_SEED};
use crate::report::Report;
use crate::Status;

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Channel JSON file.
    pub file: PathBuf,
    /// Accept Kraus sets that are not trace preserving.
    #[arg(long)]
    pub allow_unphysical: bool,
}

#[derive(Serialize)]
struct Config<'a> {
    file: &'a PathBuf,
    tol: f64,
    allow_unphysical: bool,
}

pub fn run(g: &GlobalArgs, a: AnalyzeArgs) -> Result<Status> {
    let started = Instant::now();
    let tol = g.tol.unwrap_or(DEFAULT_TOL);
    let text = std::fs::read_to_string(&a.file).with_context(|| format!("reading {}", a.file.display()))?;
    let doc = parse_channel_document(&text).with_context(|| format!("parsing {}", a.file.display()))?;
    let channel = doc.to_channel(a.allow_unphysical).with_context(|| format!("loading {}", a.file.display()))?;
    let generators = doc.generator_matrices()?.unwrap_or_default();

    let config = Config { file: &a.file, tol, allow_unphysical: a.allow_unphysical };
    let mut report = Report::new("analyze", config, g.seed.unwrap_or(DEFAULT_SEED))?;
    report.samples = 1;
    let status = match theorem_report(&channel, &generators, tol) {
        Ok(verdict) => {
            report.residuals = verdict.residuals.clone();
            report.verdict = serde_json::to_value(&verdict)?;
            Status::Consistent
        }
        Err(Error::TheoremViolation(witness)) => {
            report.verdict = json!({ "theorem_violation": true, "witness": witness });
            Status::Falsified
        }
        Err(e) => return Err(e).context("evaluating the theorem conditions"),
    };
    report.details = json!({ "name": doc.name, "in_dims": doc.in_dims, "out_dims": doc.out_dims });
    report.finish(g, started)?;
    Ok(status)
}
