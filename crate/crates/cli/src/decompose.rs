use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Args;
use hybrid_nogo::channels::MatrixJson;
use hybrid_nogo::hilbert::DensityMatrix;
use hybrid_nogo::linalg::{self, CMatrix};
use hybrid_nogo::sectors::{decompose_with_seed, DEFAULT_SEED};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::args::GlobalArgs;
use crate::report::Report;
use crate::Status;

/// Eigenvalues above this (relative to the largest) span a state's support.
const SUPPORT_TOL: f64 = 1e-9;

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// JSON file with `generators` and/or `states` matrices.
    pub file: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Input {
    #[serde(default)]
    generators: Vec<MatrixJson>,
    /// Allowed states; each contributes its support projector.
    #[serde(default)]
    states: Vec<MatrixJson>,
}

#[derive(Serialize)]
struct Config<'a> {
    file: &'a PathBuf,
    tol: f64,
}

fn support_projector(rho: &DensityMatrix, tol: f64) -> Result<CMatrix> {
    let (vals, vecs) = linalg::eigh(rho.entries())?;
    let top = vals.last().copied().unwrap_or(0.0);
    let d = rho.dim();
    let mut p = linalg::zeros(d, d);
    for (k, &v) in vals.iter().enumerate() {
        if v > tol * top {
            let col = vecs.column(k);
            p += col * col.adjoint();
        }
    }
    Ok(p)
}

pub fn run(g: &GlobalArgs, a: DecomposeArgs) -> Result<Status> {
    let started = Instant::now();
    let tol = g.tol.unwrap_or(SUPPORT_TOL);
    let seed = g.seed.unwrap_or(DEFAULT_SEED);
    let text = std::fs::read_to_string(&a.file).with_context(|| format!("reading {}", a.file.display()))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let input: Input = serde_path_to_error::deserialize(de)
        .map_err(|e| anyhow::anyhow!("parse error at `{}`: {}", e.path(), e.inner()))
        .with_context(|| format!("parsing {}", a.file.display()))?;

    let mut generators = Vec::new();
    for (k, m) in input.generators.iter().enumerate() {
        generators.push(m.to_matrix().with_context(|| format!("generators[{k}]"))?);
    }
    for (k, m) in input.states.iter().enumerate() {
        let rho = DensityMatrix::new(m.to_matrix().with_context(|| format!("states[{k}]"))?)
            .with_context(|| format!("states[{k}]"))?;
        generators.push(support_projector(&rho, tol)?);
    }
    if generators.is_empty() {
        bail!("{} lists no generators or states", a.file.display());
    }
    let dec = decompose_with_seed(&generators, seed)?;
    let off_block = generators.iter().map(|m| dec.off_block_residual(m)).fold(0.0, f64::max);

    let mut report = Report::new("decompose", Config { file: &a.file, tol }, seed)?;
    report.samples = generators.len();
    report.residuals.insert("off_block".into(), off_block);
    report.verdict = json!({
        "dim": dec.dim(),
        "block_dims": dec.block_dims(),
        "fully_nonclassical": dec.num_blocks() == 1,
    });
    report.details = json!({ "basis_change": MatrixJson::from_matrix(dec.basis_change()) });
    report.finish(g, started)?;
    Ok(Status::Consistent)
}
