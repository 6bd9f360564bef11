use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use hybrid_nogo::channels::{fixtures, ChannelDocument};
use hybrid_nogo::nogo::Condition;
use hybrid_nogo::sectors::decompose;
use serde::Serialize;

use crate::args::GlobalArgs;
use crate::report::write_atomic;
use crate::Status;

#[derive(Debug, Args)]
pub struct FixturesArgs {
    /// Target directory.
    #[arg(long, default_value = "fixtures")]
    pub dir: PathBuf,
}

#[derive(Serialize)]
struct ManifestEntry {
    name: &'static str,
    file: String,
    description: &'static str,
    expected_violated: Vec<Condition>,
    sector_blocks: Vec<usize>,
}

pub fn run(_g: &GlobalArgs, a: FixturesArgs) -> Result<Status> {
    std::fs::create_dir_all(&a.dir).with_context(|| format!("creating {}", a.dir.display()))?;
    let mut manifest = Vec::new();
    for fx in fixtures() {
        let name = fx.id.name();
        let file = format!("{name}.json");
        let doc = ChannelDocument::from_channel(Some(name.into()), &fx.channel, Some(&fx.generators));
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        write_atomic(&a.dir.join(&file), text.as_bytes())?;
        manifest.push(ManifestEntry {
            name,
            file,
            description: fx.description,
            expected_violated: fx.expected_violated.clone(),
            sector_blocks: decompose(&fx.generators)?.block_dims().to_vec(),
        });
    }
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write_atomic(&a.dir.join("manifest.json"), text.as_bytes())?;
    Ok(Status::Consistent)
}
