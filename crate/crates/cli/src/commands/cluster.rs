use std::path::Path;

use anyhow::{bail, Result};
use geoshift::kmeans::{assignments_to_csv, features_to_csv, representatives, representatives_to_csv};
use geoshift::seed::derive_seed;
use geoshift::{featurize, kmeans_fit_best_of, load_manifest, KMeansConfig};

use super::map_patches;
use crate::output::{Outputs, RunConfig};

#[allow(clippy::too_many_arguments)]
pub fn run(
    manifest_path: &Path,
    output_dir: &Path,
    k: usize,
    seed: u64,
    restarts: usize,
    reps: usize,
    max_iter: usize,
    tol: f64,
) -> Result<()> {
    if restarts == 0 {
        bail!("--restarts must be at least 1");
    }
    let manifest = load_manifest(manifest_path)?;
    let run = RunConfig {
        seed: Some(seed),
        k: Some(k),
        ..RunConfig::new("cluster")
    }
    .manifest(manifest_path)
    .output_dir(output_dir)
    .param("restarts", restarts)
    .param("reps", reps)
    .param("max_iter", max_iter)
    .param("tol", tol);

    let features = map_patches(&manifest, |_, patch| Ok(featurize(patch)))?;
    let config = KMeansConfig {
        k,
        seed: derive_seed(seed, "kmeans"),
        max_iterations: max_iter,
        tol,
    };
    let (model, assignments) = kmeans_fit_best_of(&features, &config, restarts)?;

    let mut out = Outputs::new(output_dir, run)?;
    out.bytes("features.csv", &features_to_csv(&features)?)?;
    out.json("model.json", &model)?;
    out.bytes("assignments.csv", &assignments_to_csv(&assignments)?)?;
    let listing = representatives(&model, &assignments, reps);
    out.bytes("representatives.csv", &representatives_to_csv(&listing, &assignments)?)?;
    out.finish()?;
    println!(
        "K = {}: inertia {} after {} iterations{}",
        model.k,
        model.inertia,
        model.iterations,
        if model.converged { "" } else { " (not converged)" }
    );
    Ok(())
}
