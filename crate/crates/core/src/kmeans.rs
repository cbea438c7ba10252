//! Landscape clustering: per-patch band-mean features and K-Means
//! (k-means++ seeding, Lloyd iterations).

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bands::{BAND_COUNT, MAX_REFLECTANCE};
use crate::error::{Error, Result};
use crate::export::{csv_writer, finish_csv, fmt_f64};
use crate::patch::Patch;
use crate::seed::{derive_seed, rng};

pub const DEFAULT_K: usize = 16;
pub const DEFAULT_MAX_ITERATIONS: usize = 300;
pub const DEFAULT_TOL: f64 = 1e-6;

/// Points per partial sum in the centroid update; fixed so results do not depend on thread count.
const REDUCE_CHUNK: usize = 1024;

/// Per-band mean reflectance of one patch, in band registry order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub patch_id: String,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(patch_id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != BAND_COUNT {
            return Err(Error::ShapeMismatch {
                expected: format!("{BAND_COUNT} feature values"),
                actual: format!("{} values", values.len()),
            });
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=f64::from(MAX_REFLECTANCE)).contains(*v)) {
            return Err(Error::InvalidParameter(format!(
                "feature value {v} outside [0, {MAX_REFLECTANCE}]"
            )));
        }
        Ok(FeatureVector {
            patch_id: patch_id.into(),
            values,
        })
    }
}

pub fn featurize(patch: &Patch) -> FeatureVector {
    let values = (0..BAND_COUNT)
        .map(|b| {
            let band = patch.band_at(b);
            band.iter().map(|&v| f64::from(v)).sum::<f64>() / band.len() as f64
        })
        .collect();
    FeatureVector {
        patch_id: patch.patch_id.clone(),
        values,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            k: DEFAULT_K,
            seed: 0,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iterations: usize,
    pub iterations: usize,
    pub converged: bool,
    pub inertia: f64,
    /// Objective after each assignment step, ending with the final model.
    pub inertia_history: Vec<f64>,
    /// `k` rows of feature-space coordinates.
    pub centroids: Vec<Vec<f64>>,
}

impl ClusterModel {
    pub fn dimension(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        crate::export::to_json_bytes(self)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let model: ClusterModel = serde_json::from_slice(bytes)?;
        if model.centroids.len() != model.k || model.k == 0 {
            return Err(Error::InvalidParameter(format!(
                "model declares K = {} but has {} centroids",
                model.k,
                model.centroids.len()
            )));
        }
        let dim = model.dimension();
        if model.centroids.iter().any(|c| c.len() != dim) {
            return Err(Error::InvalidParameter("ragged centroid matrix".into()));
        }
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(format!("read {}", path.display()), e))?;
        Self::from_json(&bytes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub patch_id: String,
    pub cluster: usize,
    pub distance: f64,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid and squared distance; ties go to the lowest index.
fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn kmeans_plus_plus(points: &[&[f64]], k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng(seed);
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![points[first].to_vec()];
    let mut d2: Vec<f64> = points.iter().map(|p| squared_distance(p, points[first])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut cumulative = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                cumulative += w;
                pick = Some(i);
                if cumulative > target {
                    break;
                }
            }
            pick.expect("positive total implies a positive weight")
        } else {
            // every remaining point coincides with a chosen centroid
            chosen.iter().position(|c| !c).expect("n >= k")
        };
        chosen[pick] = true;
        centroids.push(points[pick].to_vec());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(squared_distance(p, points[pick]));
        }
    }
    centroids
}

fn assign_all(points: &[&[f64]], centroids: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    points
        .par_iter()
        .map(|p| nearest(p, centroids))
        .collect::<Vec<_>>()
        .into_iter()
        .unzip()
}

/// Cluster means; chunk partials are combined in chunk order.
fn cluster_means(points: &[&[f64]], labels: &[usize], k: usize, previous: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = previous[0].len();
    let partials: Vec<(Vec<f64>, Vec<usize>)> = points
        .par_chunks(REDUCE_CHUNK)
        .zip(labels.par_chunks(REDUCE_CHUNK))
        .map(|(pts, lbs)| {
            let mut sums = vec![0.0; k * dim];
            let mut counts = vec![0usize; k];
            for (p, &l) in pts.iter().zip(lbs) {
                counts[l] += 1;
                for (s, v) in sums[l * dim..(l + 1) * dim].iter_mut().zip(p.iter()) {
                    *s += v;
                }
            }
            (sums, counts)
        })
        .collect();
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for (s, c) in partials {
        sums.iter_mut().zip(&s).for_each(|(a, b)| *a += b);
        counts.iter_mut().zip(&c).for_each(|(a, b)| *a += b);
    }
    (0..k)
        .map(|j| {
            if counts[j] == 0 {
                previous[j].clone()
            } else {
                sums[j * dim..(j + 1) * dim]
                    .iter()
                    .map(|s| s / counts[j] as f64)
                    .collect()
            }
        })
        .collect()
}

/// Gives every empty cluster the point farthest from its current centroid,
/// taken from a cluster that keeps at least one member.
fn repair_empty_clusters(points: &[&[f64]], labels: &mut [usize], d2: &mut [f64], centroids: &mut [Vec<f64>]) {
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    labels.iter().for_each(|&l| counts[l] += 1);
    for j in 0..k {
        if counts[j] > 0 {
            continue;
        }
        let mut best: Option<usize> = None;
        for i in 0..points.len() {
            if counts[labels[i]] > 1 && best.is_none_or(|b| d2[i] > d2[b]) {
                best = Some(i);
            }
        }
        let Some(i) = best else { break };
        counts[labels[i]] -= 1;
        counts[j] += 1;
        labels[i] = j;
        d2[i] = 0.0;
        centroids[j] = points[i].to_vec();
    }
}

fn validate_points(features: &[FeatureVector], k: usize) -> Result<Vec<&[f64]>> {
    if k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    if features.len() < k {
        return Err(Error::TooFewFeatures { n: features.len(), k });
    }
    let dim = features[0].values.len();
    if let Some(f) = features.iter().find(|f| f.values.len() != dim) {
        return Err(Error::ShapeMismatch {
            expected: format!("{dim}-dimensional features"),
            actual: format!("{} values for {}", f.values.len(), f.patch_id),
        });
    }
    Ok(features.iter().map(|f| f.values.as_slice()).collect())
}

/// Single K-Means run seeded by `config.seed`.
pub fn kmeans_fit(features: &[FeatureVector], config: &KMeansConfig) -> Result<(ClusterModel, Vec<Assignment>)> {
    let points = validate_points(features, config.k)?;
    if config.tol < 0.0 || config.tol.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be non-negative, got {}",
            config.tol
        )));
    }
    let k = config.k;
    let mut centroids = kmeans_plus_plus(&points, k, config.seed);
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        iterations += 1;
        let (mut labels, mut d2) = assign_all(&points, &centroids);
        repair_empty_clusters(&points, &mut labels, &mut d2, &mut centroids);
        history.push(d2.iter().sum::<f64>());
        let updated = cluster_means(&points, &labels, k, &centroids);
        let shift = updated
            .iter()
            .zip(&centroids)
            .map(|(a, b)| squared_distance(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        if shift < config.tol {
            converged = true;
            break;
        }
    }
    let (labels, d2) = assign_all(&points, &centroids);
    let inertia: f64 = d2.iter().sum();
    history.push(inertia);
    let assignments = features
        .iter()
        .zip(labels.iter().zip(&d2))
        .map(|(f, (&cluster, &d))| Assignment {
            patch_id: f.patch_id.clone(),
            cluster,
            distance: d.sqrt(),
        })
        .collect();
    let model = ClusterModel {
        k,
        seed: config.seed,
        tol: config.tol,
        max_iterations: config.max_iterations,
        iterations,
        converged,
        inertia,
        inertia_history: history,
        centroids,
    };
    Ok((model, assignments))
}

/// Seed used by restart `r`; restart 0 reuses the base seed so a single run is the first candidate.
pub fn restart_seed(seed: u64, restart: usize) -> u64 {
    if restart == 0 {
        seed
    } else {
        derive_seed(seed, &format!("kmeans-restart/{restart}"))
    }
}

/// Best of `restarts` runs by final inertia; the earliest run wins ties.
pub fn kmeans_fit_best_of(
    features: &[FeatureVector],
    config: &KMeansConfig,
    restarts: usize,
) -> Result<(ClusterModel, Vec<Assignment>)> {
    let mut best: Option<(ClusterModel, Vec<Assignment>)> = None;
    for r in 0..restarts.max(1) {
        let run = KMeansConfig {
            seed: restart_seed(config.seed, r),
            ..*config
        };
        let candidate = kmeans_fit(features, &run)?;
        if best.as_ref().is_none_or(|b| candidate.0.inertia < b.0.inertia) {
            best = Some(candidate);
        }
    }
    Ok(best.expect("at least one run"))
}

pub fn kmeans_assign(model: &ClusterModel, feature: &FeatureVector) -> Result<Assignment> {
    if feature.values.len() != model.dimension() {
        return Err(Error::ShapeMismatch {
            expected: format!("{}-dimensional feature", model.dimension()),
            actual: format!("{} values", feature.values.len()),
        });
    }
    let (cluster, d2) = nearest(&feature.values, &model.centroids);
    Ok(Assignment {
        patch_id: feature.patch_id.clone(),
        cluster,
        distance: d2.sqrt(),
    })
}

/// Up to `m` patch ids per cluster, nearest first; ties broken by patch id.
pub fn representatives(model: &ClusterModel, assignments: &[Assignment], m: usize) -> Vec<Vec<String>> {
    let mut members: Vec<Vec<&Assignment>> = vec![Vec::new(); model.k];
    for a in assignments {
        if let Some(bucket) = members.get_mut(a.cluster) {
            bucket.push(a);
        }
    }
    members
        .into_iter()
        .map(|mut bucket| {
            bucket.sort_by(|a, b| {
                a.distance
                    .total_cmp(&b.distance)
                    .then_with(|| a.patch_id.cmp(&b.patch_id))
            });
            bucket.into_iter().take(m).map(|a| a.patch_id.clone()).collect()
        })
        .collect()
}

pub fn assignments_to_csv(assignments: &[Assignment]) -> Result<Vec<u8>> {
    let mut w = csv_writer();
    w.write_record(["patch_id", "cluster", "distance"])?;
    for a in assignments {
        w.write_record([a.patch_id.clone(), a.cluster.to_string(), fmt_f64(a.distance)])?;
    }
    finish_csv(w)
}

pub fn read_assignments_csv(path: &Path) -> Result<Vec<Assignment>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in reader.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

pub fn features_to_csv(features: &[FeatureVector]) -> Result<Vec<u8>> {
    let mut w = csv_writer();
    let mut header = vec!["patch_id".to_string()];
    header.extend(crate::bands::band_names().iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for f in features {
        let mut row = vec![f.patch_id.clone()];
        row.extend(f.values.iter().map(|&v| fmt_f64(v)));
        w.write_record(&row)?;
    }
    finish_csv(w)
}

/// `cluster,rank,patch_id,distance` for the representative listing.
pub fn representatives_to_csv(reps: &[Vec<String>], assignments: &[Assignment]) -> Result<Vec<u8>> {
    let distance: BTreeMap<&str, f64> = assignments.iter().map(|a| (a.patch_id.as_str(), a.distance)).collect();
    let mut w = csv_writer();
    w.write_record(["cluster", "rank", "patch_id", "distance"])?;
    for (cluster, ids) in reps.iter().enumerate() {
        for (rank, id) in ids.iter().enumerate() {
            let d = distance.get(id.as_str()).copied().unwrap_or(f64::NAN);
            w.write_record([cluster.to_string(), rank.to_string(), id.clone(), fmt_f64(d)])?;
        }
    }
    finish_csv(w)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::groups::{Region, Season};
    use crate::patch::{ClassGrid, PATCH_PIXELS, PATCH_SIZE};

    fn fv(id: &str, first: f64) -> FeatureVector {
        let mut values = vec![0.0; BAND_COUNT];
        values[0] = first;
        FeatureVector::new(id, values).unwrap()
    }

    fn config(k: usize, seed: u64) -> KMeansConfig {
        KMeansConfig {
            k,
            seed,
            ..KMeansConfig::default()
        }
    }

    #[test]
    fn featurize_constant_and_split_bands() {
        let mut image = Vec::with_capacity(BAND_COUNT * PATCH_PIXELS);
        for b in 0..BAND_COUNT {
            image.extend(std::iter::repeat_n(b as f32 * 10.0, PATCH_PIXELS));
        }
        // band 0: half 0, half 100
        for v in &mut image[PATCH_PIXELS / 2..PATCH_PIXELS] {
            *v = 100.0;
        }
        let patch = Patch::new(
            "p",
            "s",
            Region::Asia,
            Season::Fall,
            image,
            ClassGrid::filled(PATCH_SIZE, PATCH_SIZE, 0).unwrap(),
        )
        .unwrap();
        let f = featurize(&patch);
        assert_eq!(f.values[0], 50.0);
        for b in 1..BAND_COUNT {
            assert_eq!(f.values[b], b as f64 * 10.0);
        }
    }

    #[test]
    fn feature_vector_validation() {
        assert!(FeatureVector::new("x", vec![0.0; 9]).is_err());
        let mut v = vec![0.0; BAND_COUNT];
        v[2] = 10_000.5;
        assert!(FeatureVector::new("x", v).is_err());
    }

    #[test]
    fn two_exact_groups() {
        let features = [fv("a", 0.0), fv("b", 0.0), fv("c", 10.0), fv("d", 10.0)];
        let (model, assignments) = kmeans_fit(&features, &config(2, 3)).unwrap();
        assert_eq!(model.inertia, 0.0);
        let mut firsts: Vec<f64> = model.centroids.iter().map(|c| c[0]).collect();
        firsts.sort_by(f64::total_cmp);
        assert_eq!(firsts, vec![0.0, 10.0]);
        assert_eq!(assignments[0].cluster, assignments[1].cluster);
        assert_ne!(assignments[0].cluster, assignments[2].cluster);
        assert!(model.converged);
    }

    #[test]
    fn saturated_clustering_has_zero_inertia() {
        let features: Vec<_> = (0..6).map(|i| fv(&format!("p{i}"), i as f64 * 3.0)).collect();
        let (model, assignments) = kmeans_fit(&features, &config(6, 11)).unwrap();
        assert_eq!(model.inertia, 0.0);
        let mut clusters: Vec<_> = assignments.iter().map(|a| a.cluster).collect();
        clusters.sort();
        clusters.dedup();
        assert_eq!(clusters.len(), 6);
    }

    #[test]
    fn duplicate_points_still_fill_every_cluster() {
        let features: Vec<_> = (0..5).map(|i| fv(&format!("p{i}"), 1.0)).collect();
        let (model, _) = kmeans_fit(&features, &config(3, 0)).unwrap();
        assert_eq!(model.centroids.len(), 3);
        assert_eq!(model.inertia, 0.0);
    }

    #[test]
    fn argument_errors() {
        let features = [fv("a", 0.0)];
        assert!(matches!(
            kmeans_fit(&features, &config(2, 0)),
            Err(Error::TooFewFeatures { n: 1, k: 2 })
        ));
        assert!(kmeans_fit(&features, &config(0, 0)).is_err());
    }

    #[test]
    fn assign_hits_and_ties() {
        let mut centroids = vec![vec![100.0; BAND_COUNT]; 6];
        centroids[3] = vec![7.0; BAND_COUNT];
        centroids[1][0] = 0.0;
        centroids[4][0] = 20.0;
        for c in [1, 4] {
            for v in &mut centroids[c][1..] {
                *v = 0.0;
            }
        }
        let model = ClusterModel {
            k: 6,
            seed: 0,
            tol: 0.0,
            max_iterations: 0,
            iterations: 0,
            converged: true,
            inertia: 0.0,
            inertia_history: vec![],
            centroids,
        };
        let hit = kmeans_assign(&model, &FeatureVector::new("x", vec![7.0; BAND_COUNT]).unwrap()).unwrap();
        assert_eq!((hit.cluster, hit.distance), (3, 0.0));
        let tie = kmeans_assign(&model, &fv("y", 10.0)).unwrap();
        assert_eq!(tie.cluster, 1);
        assert_eq!(tie.distance, 10.0);
        let bad = FeatureVector {
            patch_id: "z".into(),
            values: vec![0.0; 3],
        };
        assert!(kmeans_assign(&model, &bad).is_err());
    }

    #[test]
    fn representatives_order_and_limits() {
        let model = ClusterModel {
            k: 3,
            seed: 0,
            tol: 0.0,
            max_iterations: 0,
            iterations: 0,
            converged: true,
            inertia: 0.0,
            inertia_history: vec![],
            centroids: vec![vec![0.0; BAND_COUNT]; 3],
        };
        let a = |id: &str, cluster, distance| Assignment {
            patch_id: id.into(),
            cluster,
            distance,
        };
        let assignments = vec![
            a("z", 0, 1.0),
            a("b", 0, 0.0),
            a("a", 0, 1.0),
            a("q", 1, 3.0),
            a("r", 1, 2.0),
        ];
        let reps = representatives(&model, &assignments, 1);
        assert_eq!(reps[0], vec!["b"]);
        let reps = representatives(&model, &assignments, 5);
        assert_eq!(reps[0], vec!["b", "a", "z"]);
        assert_eq!(reps[1], vec!["r", "q"]);
        assert!(reps[2].is_empty());
    }

    #[test]
    fn model_json_round_trip() {
        let features: Vec<_> = (0..10).map(|i| fv(&format!("p{i}"), (i * i) as f64 / 7.0)).collect();
        let (model, _) = kmeans_fit(&features, &config(3, 5)).unwrap();
        let back = ClusterModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
    }

    fn arb_features(max_n: usize) -> impl Strategy<Value = Vec<FeatureVector>> {
        prop::collection::vec(prop::collection::vec(0.0f64..10_000.0, BAND_COUNT), 3..max_n).prop_map(|rows| {
            rows.into_iter()
                .enumerate()
                .map(|(i, v)| FeatureVector::new(format!("p{i:03}"), v).unwrap())
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn inertia_never_increases(features in arb_features(60), k in 1usize..6, seed in any::<u64>()) {
            prop_assume!(features.len() >= k);
            let (model, assignments) = kmeans_fit(&features, &config(k, seed)).unwrap();
            for w in model.inertia_history.windows(2) {
                prop_assert!(w[1] <= w[0], "history {:?}", model.inertia_history);
            }
            prop_assert!(model.iterations <= model.max_iterations);
            for (a, f) in assignments.iter().zip(&features) {
                let c = &model.centroids[a.cluster];
                prop_assert!((a.distance - squared_distance(&f.values, c).sqrt()).abs() <= 1e-9);
            }
        }

        #[test]
        fn refit_is_identical(features in arb_features(40), seed in any::<u64>()) {
            let a = kmeans_fit(&features, &config(3, seed)).unwrap();
            let b = kmeans_fit(&features, &config(3, seed)).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn assign_matches_linear_scan(features in arb_features(30), probe in prop::collection::vec(0.0f64..10_000.0, BAND_COUNT)) {
            let (model, _) = kmeans_fit(&features, &config(3, 1)).unwrap();
            let got = kmeans_assign(&model, &FeatureVector::new("probe", probe.clone()).unwrap()).unwrap();
            let mut best = 0;
            for j in 1..model.k {
                if squared_distance(&probe, &model.centroids[j]) < squared_distance(&probe, &model.centroids[best]) {
                    best = j;
                }
            }
            prop_assert_eq!(got.cluster, best);
        }
    }
}
