//! Python bindings. Inputs and outputs are plain Python lists, dicts and
//! strings; library errors surface as `ValueError`.

use std::collections::BTreeMap;

use geoshift::eval::{cross_group_experiment, pixel_accuracy as core_pixel_accuracy, TrainConfig};
use geoshift::fixtures::{sen12ms_metadata_manifest, SyntheticShift};
use geoshift::kmeans::kmeans_fit_best_of;
use geoshift::labels::consolidate_label as core_consolidate;
use geoshift::{
    group_given_cluster as core_group_given_cluster, kde as core_kde, pca_embed as core_pca_embed,
    silverman_bandwidth as core_silverman, ClassGrid, ClusterHistogram, Correction, FeatureVector, Grouping,
    KMeansConfig, Region, Season,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: geoshift::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_grouping(name: &str) -> PyResult<Grouping> {
    name.parse().map_err(err)
}

/// A loaded patch manifest.
#[pyclass(module = "geoshift_py", frozen)]
pub struct Manifest {
    inner: geoshift::Manifest,
}

#[pymethods]
impl Manifest {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Manifest {
            inner: geoshift::load_manifest(path.as_ref()).map_err(err)?,
        })
    }

    /// Metadata-only manifest with the packaged scene and patch inventory.
    #[staticmethod]
    fn sen12ms() -> PyResult<Self> {
        Ok(Manifest {
            inner: sen12ms_metadata_manifest().map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn scene_count(&self) -> usize {
        self.inner.scene_count()
    }

    fn groups(&self, grouping: &str) -> PyResult<Vec<&'static str>> {
        Ok(self.inner.groups(parse_grouping(grouping)?))
    }

    /// `{(region, season): (scenes, patches)}` for every region and season.
    fn summary(&self) -> BTreeMap<(String, String), (usize, usize)> {
        let s = geoshift::summarize_manifest(&self.inner);
        let mut out = BTreeMap::new();
        for region in Region::ALL {
            for season in Season::ALL {
                let c = s.cell(region, season);
                out.insert((region.to_string(), season.to_string()), (c.scenes, c.patches));
            }
        }
        out
    }

    fn summary_table(&self) -> String {
        geoshift::summarize_manifest(&self.inner).to_table()
    }
}

/// Result of a K-Means fit.
#[pyclass(module = "geoshift_py", frozen, get_all)]
pub struct KMeansResult {
    inertia: f64,
    inertia_history: Vec<f64>,
    centroids: Vec<Vec<f64>>,
    labels: Vec<usize>,
    iterations: usize,
    converged: bool,
}

#[pyfunction]
#[pyo3(signature = (points, k, seed = 0, restarts = 1))]
fn kmeans(points: Vec<Vec<f64>>, k: usize, seed: u64, restarts: usize) -> PyResult<KMeansResult> {
    let features = points
        .into_iter()
        .enumerate()
        .map(|(i, p)| FeatureVector::new(format!("{i}"), p))
        .collect::<geoshift::Result<Vec<_>>>()
        .map_err(err)?;
    let config = KMeansConfig {
        k,
        seed,
        ..KMeansConfig::default()
    };
    let (model, assignments) = kmeans_fit_best_of(&features, &config, restarts).map_err(err)?;
    Ok(KMeansResult {
        inertia: model.inertia,
        inertia_history: model.inertia_history,
        centroids: model.centroids,
        labels: assignments.iter().map(|a| a.cluster).collect(),
        iterations: model.iterations,
        converged: model.converged,
    })
}

#[pyfunction]
fn silverman_bandwidth(samples: Vec<f64>) -> PyResult<f64> {
    core_silverman(&samples).map_err(err)
}

/// Gaussian density of `samples` at each grid point; the bandwidth defaults to Silverman's rule.
#[pyfunction]
#[pyo3(signature = (samples, grid, bandwidth = None))]
fn kde(samples: Vec<f64>, grid: Vec<f64>, bandwidth: Option<f64>) -> PyResult<Vec<f64>> {
    let h = match bandwidth {
        Some(h) => h,
        None => core_silverman(&samples).map_err(err)?,
    };
    Ok(core_kde(&samples, h, &grid).map_err(err)?.density)
}

fn histograms(counts: BTreeMap<String, Vec<u64>>) -> Vec<ClusterHistogram> {
    counts.into_iter().map(|(g, c)| ClusterHistogram::new(g, c)).collect()
}

/// `P(group | cluster)` from per-group cluster counts, keyed like the input.
/// Entries of clusters no group uses are NaN.
#[pyfunction]
#[pyo3(signature = (counts, bayes = false))]
fn group_given_cluster(counts: BTreeMap<String, Vec<u64>>, bayes: bool) -> PyResult<BTreeMap<String, Vec<f64>>> {
    let correction = if bayes {
        Correction::Bayes
    } else {
        Correction::ImbalanceCorrected
    };
    let table = core_group_given_cluster(&histograms(counts), correction).map_err(err)?;
    Ok(table.groups.into_iter().zip(table.values).collect())
}

type GroupRows = BTreeMap<String, Vec<f64>>;

/// Principal-component coordinates of each group's normalized histogram and the full spectrum.
#[pyfunction]
#[pyo3(signature = (counts, n_components = 2))]
fn pca_embed(counts: BTreeMap<String, Vec<u64>>, n_components: usize) -> PyResult<(GroupRows, Vec<f64>)> {
    let e = core_pca_embed(&histograms(counts), n_components).map_err(err)?;
    Ok((e.groups.into_iter().zip(e.coordinates).collect(), e.explained_variance))
}

#[pyfunction]
fn pixel_accuracy(pred: Vec<u8>, label: Vec<u8>, height: usize, width: usize) -> PyResult<(u64, u64, f64)> {
    let pred = ClassGrid::new(height, width, pred).map_err(err)?;
    let label = ClassGrid::new(height, width, label).map_err(err)?;
    let a = core_pixel_accuracy(&pred, &label).map_err(err)?;
    Ok((a.correct, a.total, a.fraction))
}

#[pyfunction]
fn consolidate_label(raw: &str) -> PyResult<&'static str> {
    Ok(core_consolidate(raw).map_err(err)?.name())
}

/// Trains one baseline per region on the synthetic shifted dataset and returns
/// `(groups, means)` with `means[train][eval]`.
#[pyfunction]
#[pyo3(signature = (regions, scenes = 6, patches = 20, seed = 0, max_epochs = None))]
fn synthetic_experiment(
    py: Python<'_>,
    regions: Vec<String>,
    scenes: usize,
    patches: usize,
    seed: u64,
    max_epochs: Option<usize>,
) -> PyResult<(Vec<String>, Vec<Vec<f64>>)> {
    let regions = regions
        .iter()
        .map(|r| r.parse::<Region>())
        .collect::<geoshift::Result<Vec<_>>>()
        .map_err(err)?;
    let mut config = TrainConfig::default();
    if let Some(n) = max_epochs {
        config.max_epochs = n;
    }
    let matrix = py
        .detach(|| {
            let fixture = SyntheticShift::new(regions, scenes, patches, seed)?;
            let manifest = fixture.manifest();
            cross_group_experiment(&manifest, &fixture, Grouping::Continent, &config, seed)
        })
        .map_err(err)?
        .matrix;
    let n = matrix.size();
    let means = (0..n)
        .map(|i| (0..n).map(|j| matrix.cell(i, j).mean).collect())
        .collect();
    Ok((matrix.groups, means))
}

#[pymodule]
fn geoshift_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Manifest>()?;
    m.add_class::<KMeansResult>()?;
    m.add_function(wrap_pyfunction!(kmeans, m)?)?;
    m.add_function(wrap_pyfunction!(silverman_bandwidth, m)?)?;
    m.add_function(wrap_pyfunction!(kde, m)?)?;
    m.add_function(wrap_pyfunction!(group_given_cluster, m)?)?;
    m.add_function(wrap_pyfunction!(pca_embed, m)?)?;
    m.add_function(wrap_pyfunction!(pixel_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(consolidate_label, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_experiment, m)?)?;
    Ok(())
}
