use std::path::PathBuf;

use clap::Args;

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Numerical tolerance; each command documents its default.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Base seed, decimal or 0x-prefixed hex.
    #[arg(long, global = true, value_parser = parse_seed)]
    pub seed: Option<u64>,
    /// Output path; standard output if absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Omit wall-clock time so repeated runs produce identical reports.
    #[arg(long, global = true)]
    pub no_timing: bool,
}

pub const DEFAULT_SEED: u64 = 42;

pub fn parse_seed(s: &str) -> Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

/// Parses `NxD` into a (classical, quantum) dimension pair.
pub fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (n, d) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NxD, got {s:?}"))?;
    let n: usize = n.trim().parse().map_err(|e| format!("bad classical dim in {s:?}: {e}"))?;
    let d: usize = d.trim().parse().map_err(|e| format!("bad quantum dim in {s:?}: {e}"))?;
    if n == 0 || d == 0 {
        return Err(format!("dimensions must be positive in {s:?}"));
    }
    Ok((n, d))
}
