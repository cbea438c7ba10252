use anyhow::{Context, Result};
use geoshift::fixtures::{sen12ms_metadata_manifest, SyntheticShift};
use geoshift::manifest::write_manifest;
use geoshift::Dtype;

use crate::args::{DtypeArg, FixtureCommand};

pub fn run(command: &FixtureCommand) -> Result<()> {
    match command {
        FixtureCommand::Sen12ms { output } => {
            let manifest = sen12ms_metadata_manifest()?;
            write_manifest(output, &manifest).with_context(|| format!("cannot write {}", output.display()))?;
            eprintln!("wrote {} patches to {}", manifest.len(), output.display());
        }
        FixtureCommand::Shift {
            output_dir,
            regions,
            scenes,
            patches,
            seed,
            dtype,
        } => {
            let fixture = SyntheticShift::new(regions.clone(), *scenes, *patches, *seed)?;
            let dtype = match dtype {
                DtypeArg::U16 => Dtype::U16,
                DtypeArg::F32 => Dtype::F32,
            };
            let manifest = fixture.write_to_dir(output_dir, dtype)?;
            eprintln!(
                "wrote {} patches to {}",
                manifest.len(),
                output_dir.join("manifest.csv").display()
            );
        }
    }
    Ok(())
}
