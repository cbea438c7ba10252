use std::path::Path;

use anyhow::Result;
use geoshift::{load_manifest, summarize_manifest};

use crate::args::Format;
use crate::output::{Outputs, RunConfig};

pub fn run(manifest_path: &Path, output_dir: Option<&Path>, format: Format) -> Result<()> {
    let manifest = load_manifest(manifest_path)?;
    let summary = summarize_manifest(&manifest);
    print!("{}", summary.to_table());
    if let Some(dir) = output_dir {
        let run = RunConfig::new("summarize")
            .manifest(manifest_path)
            .output_dir(dir)
            .param("format", format!("{format:?}").to_lowercase());
        let mut out = Outputs::new(dir, run)?;
        match format {
            Format::Json => out.json("summary.json", &summary)?,
            Format::Csv | Format::Svg => out.bytes("summary.csv", &summary.to_csv()?)?,
        }
        out.finish()?;
    }
    Ok(())
}
