use std::time::Instant;

use anyhow::{bail, Result};
use clap::Args;
use hybrid_nogo::nogo::{evaluate_sample, run_campaign, CampaignConfig};
use serde_json::json;

use crate::args::{parse_dims, GlobalArgs, DEFAULT_SEED};
use crate::report::Report;
use crate::Status;

#[derive(Debug, Args)]
pub struct CampaignArgs {
    /// Comma-separated NxD pairs (classical x quantum dimension).
    #[arg(long, value_delimiter = ',', value_parser = parse_dims,
          default_value = "2x2,2x3,2x4,3x2,3x3,3x4")]
    pub dims: Vec<(usize, usize)>,
    /// Samples per dims pair.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Random probe states per sample on top of the basis states.
    #[arg(long, default_value_t = 2)]
    pub probes: usize,
    /// Re-evaluate one sample from its recorded seed (needs a single dims pair).
    #[arg(long, value_parser = crate::args::parse_seed)]
    pub replay: Option<u64>,
}

pub fn run(g: &GlobalArgs, a: CampaignArgs) -> Result<Status> {
    let started = Instant::now();
    let defaults = CampaignConfig::default();
    let cfg = CampaignConfig {
        dims: a.dims,
        samples: a.samples,
        seed: g.seed.unwrap_or(DEFAULT_SEED),
        tol: g.tol.unwrap_or(defaults.tol),
        random_probes: a.probes,
    };
    if let Some(seed) = a.replay {
        return replay(g, &cfg, seed, started);
    }
    let outcome = run_campaign(&cfg)?;
    let mut report = Report::new("verify-theorem", &cfg, cfg.seed)?;
    report.samples = outcome.samples;
    let m = outcome.max;
    report.residuals = [
        ("signalling", m.signalling),
        ("nondisturbance", m.nondisturbance),
        ("pointer_independence", m.pointer_independence),
        ("factorization", m.factorization),
        ("irreversibility", m.irreversibility),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    report.verdict = json!({
        "passed": outcome.passed(),
        "theorem_violations": outcome.theorem_violations,
        "failures": outcome.failures.len(),
    });
    report.details = json!({ "pairs": outcome.pairs, "failures": outcome.failures });
    let status = if outcome.passed() { Status::Consistent } else { Status::Falsified };
    report.finish(g, started)?;
    Ok(status)
}

fn replay(g: &GlobalArgs, cfg: &CampaignConfig, seed: u64, started: Instant) -> Result<Status> {
    let [(n, d)] = cfg.dims[..] else {
        bail!("--replay needs exactly one dims pair, got {}", cfg.dims.len());
    };
    let record = evaluate_sample(n, d, 0, seed, cfg)?;
    let mut report = Report::new("verify-theorem", cfg, seed)?;
    report.samples = 1;
    report.verdict = json!({
        "passed": !record.failed(),
        "theorem_violations": usize::from(record.theorem_violation),
        "breaches": record.residuals.breaches(),
    });
    report.details = serde_json::to_value(&record)?;
    let status = if record.failed() { Status::Falsified } else { Status::Consistent };
    report.finish(g, started)?;
    Ok(status)
}
