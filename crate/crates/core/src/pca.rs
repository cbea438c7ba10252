//! PCA over normalized per-group cluster histograms.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::export::{csv_writer, finish_csv, fmt_f64};
use crate::shift::{normalize_histogram, ClusterHistogram};

/// Below this total variance the groups are treated as identical.
const ZERO_VARIANCE: f64 = 1e-20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcaEmbedding {
    pub groups: Vec<String>,
    /// Per group, one coordinate per retained component.
    pub coordinates: Vec<Vec<f64>>,
    /// Retained components (rows), each of length K, unit norm.
    pub components: Vec<Vec<f64>>,
    /// Variance along every principal axis (all K), descending.
    pub explained_variance: Vec<f64>,
    pub total_variance: f64,
}

impl PcaEmbedding {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// `group,pc1,pc2,...`
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv_writer();
        let mut header = vec!["group".to_string()];
        header.extend((1..=self.n_components()).map(|i| format!("pc{i}")));
        w.write_record(&header)?;
        for (g, coords) in self.groups.iter().zip(&self.coordinates) {
            let mut row = vec![g.clone()];
            row.extend(coords.iter().map(|&c| fmt_f64(c)));
            w.write_record(&row)?;
        }
        finish_csv(w)
    }
}

/// Centers the normalized histograms across groups and projects them onto the
/// top `n_components` eigenvectors of the population covariance. Each
/// component is signed so its largest-magnitude loading is positive.
pub fn pca_embed(histograms: &[ClusterHistogram], n_components: usize) -> Result<PcaEmbedding> {
    if histograms.len() < 2 {
        return Err(Error::EmptyInput("PCA needs at least 2 groups"));
    }
    let k = histograms[0].k();
    if let Some(h) = histograms.iter().find(|h| h.k() != k) {
        return Err(Error::ClusterCountMismatch(k, h.k()));
    }
    let rows = histograms.iter().map(normalize_histogram).collect::<Result<Vec<_>>>()?;
    let groups = histograms.iter().map(|h| h.group.clone()).collect();
    pca_embed_rows(groups, &rows, n_components)
}

/// PCA of arbitrary per-group rows (already normalized); rows are centered here.
pub fn pca_embed_rows(groups: Vec<String>, rows: &[Vec<f64>], n_components: usize) -> Result<PcaEmbedding> {
    if rows.len() < 2 || groups.len() != rows.len() {
        return Err(Error::EmptyInput("PCA needs at least 2 labeled rows"));
    }
    let k = rows[0].len();
    if let Some(r) = rows.iter().find(|r| r.len() != k) {
        return Err(Error::ClusterCountMismatch(k, r.len()));
    }
    if n_components == 0 || n_components > k {
        return Err(Error::InvalidParameter(format!(
            "n_components must be in [1, {k}], got {n_components}"
        )));
    }
    let g = rows.len();
    let mut centered = DMatrix::from_fn(g, k, |i, j| rows[i][j]);
    for j in 0..k {
        let mean = centered.column(j).sum() / g as f64;
        centered.column_mut(j).add_scalar_mut(-mean);
    }
    let covariance = centered.transpose() * &centered / g as f64;
    let total_variance = covariance.trace();
    if total_variance < ZERO_VARIANCE {
        return Err(Error::ZeroVariance);
    }

    let eigen = SymmetricEigen::new(covariance);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]).then(a.cmp(&b)));
    let explained_variance: Vec<f64> = order.iter().map(|&i| eigen.eigenvalues[i].max(0.0)).collect();

    let components: Vec<Vec<f64>> = order[..n_components]
        .iter()
        .map(|&i| {
            let mut v: Vec<f64> = eigen.eigenvectors.column(i).iter().copied().collect();
            let mut pivot = 0;
            for (j, x) in v.iter().enumerate() {
                if x.abs() > v[pivot].abs() {
                    pivot = j;
                }
            }
            if v[pivot] < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();

    let coordinates = (0..g)
        .map(|i| {
            components
                .iter()
                .map(|c| centered.row(i).iter().zip(c).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();

    Ok(PcaEmbedding {
        groups,
        coordinates,
        components,
        explained_variance,
        total_variance,
    })
}
