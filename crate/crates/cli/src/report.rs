use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use crate::args::GlobalArgs;

pub const TOOL: &str = "hybrid-nogo";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Common envelope of every JSON report.
#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    /// Effective configuration with all defaults resolved.
    pub config: Value,
    pub verdict: Value,
    pub residuals: BTreeMap<String, f64>,
    pub samples: usize,
    pub seed: u64,
    pub wall_time_ms: Option<u64>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

impl Report {
    pub fn new(command: &'static str, config: impl Serialize, seed: u64) -> Result<Self> {
        Ok(Self {
            tool: TOOL,
            version: VERSION,
            command,
            config: serde_json::to_value(config)?,
            verdict: Value::Null,
            residuals: BTreeMap::new(),
            samples: 0,
            seed,
            wall_time_ms: None,
            details: Value::Null,
        })
    }

    /// Stamps the elapsed time unless timing is disabled, then writes.
    pub fn finish(mut self, g: &GlobalArgs, started: Instant) -> Result<()> {
        if !g.no_timing {
            self.wall_time_ms = Some(started.elapsed().as_millis() as u64);
        }
        let mut text = serde_json::to_string_pretty(&self)?;
        text.push('\n');
        emit(g.out.as_deref(), text.as_bytes())
    }
}

/// Writes `bytes` to `path` through a sibling temporary file and a rename,
/// or to standard output in a single write.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(path) => write_atomic(path, bytes),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", Path::new(&tmp).display()))?;
    fs::rename(&tmp, path).with_context(|| format!("moving output into {}", path.display()))?;
    Ok(())
}
