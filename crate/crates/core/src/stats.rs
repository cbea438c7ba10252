//! Per-band summary statistics and Gaussian kernel density estimates.

use std::borrow::Borrow;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::bands::{Band, BAND_COUNT};
use crate::error::{Error, Result};
use crate::export::{csv_writer, finish_csv, fmt_f64};
use crate::patch::Patch;

pub const DEFAULT_STRIDE: usize = 8;
pub const DEFAULT_GRID_POINTS: usize = 256;

/// Single-pass mean/variance accumulator (Welford), mergeable across partitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunningStats {
    pub count: u64,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    m2: f64,
}

impl Default for RunningStats {
    fn default() -> Self {
        RunningStats {
            count: 0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            mean: 0.0,
            m2: 0.0,
        }
    }
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&mut self, other: &RunningStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n_a = self.count as f64;
        let n_b = other.count as f64;
        let n = n_a + n_b;
        let delta = other.mean - self.mean;
        self.mean += delta * n_b / n;
        self.m2 += other.m2 + delta * delta * n_a * n_b / n;
        self.count += other.count;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.m2 / self.count as f64).max(0.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandStat {
    pub band: Band,
    pub count: u64,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandSummary {
    pub bands: Vec<BandStat>,
}

impl BandSummary {
    pub fn get(&self, band: Band) -> &BandStat {
        &self.bands[band.index()]
    }

    /// `band,count,min,max,mean,variance`
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv_writer();
        w.write_record(["band", "count", "min", "max", "mean", "variance"])?;
        for s in &self.bands {
            w.write_record([
                s.band.name().to_string(),
                s.count.to_string(),
                fmt_f64(s.min),
                fmt_f64(s.max),
                fmt_f64(s.mean),
                fmt_f64(s.variance),
            ])?;
        }
        finish_csv(w)
    }
}

/// Indices `0, stride, 2*stride, ...` within one band of a patch.
fn sampled(band: &[f32], stride: usize) -> impl Iterator<Item = f64> + '_ {
    band.iter().step_by(stride).map(|&v| f64::from(v))
}

/// Per-band statistics of one patch at the given stride.
pub fn patch_band_stats(patch: &Patch, stride: usize) -> [RunningStats; BAND_COUNT] {
    let mut out = [RunningStats::default(); BAND_COUNT];
    for (b, acc) in out.iter_mut().enumerate() {
        for v in sampled(patch.band_at(b), stride) {
            acc.push(v);
        }
    }
    out
}

/// Merges per-patch partials in the order given.
#[derive(Debug, Clone, Default)]
pub struct BandAccumulator {
    stats: [RunningStats; BAND_COUNT],
}

impl BandAccumulator {
    pub fn add_partial(&mut self, partial: &[RunningStats; BAND_COUNT]) {
        for (acc, p) in self.stats.iter_mut().zip(partial) {
            acc.merge(p);
        }
    }

    pub fn add_patch(&mut self, patch: &Patch, stride: usize) {
        self.add_partial(&patch_band_stats(patch, stride));
    }

    pub fn finish(&self) -> Result<BandSummary> {
        if self.stats[0].count == 0 {
            return Err(Error::EmptyInput("no patches for band summary"));
        }
        Ok(BandSummary {
            bands: Band::ALL
                .iter()
                .zip(&self.stats)
                .map(|(&band, s)| BandStat {
                    band,
                    count: s.count,
                    min: s.min,
                    max: s.max,
                    mean: s.mean,
                    variance: s.variance(),
                })
                .collect(),
        })
    }
}

fn check_stride(stride: usize) -> Result<()> {
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be at least 1".into()));
    }
    Ok(())
}

/// Exact statistics over every `stride`-th pixel (row-major) of every patch.
pub fn band_summary<P: Borrow<Patch>>(patches: impl IntoIterator<Item = P>, stride: usize) -> Result<BandSummary> {
    check_stride(stride)?;
    let mut acc = BandAccumulator::default();
    for p in patches {
        acc.add_patch(p.borrow(), stride);
    }
    acc.finish()
}

/// Strided pixel samples of one band of a patch, as `f64`.
pub fn band_samples(patch: &Patch, band: Band, stride: usize) -> Result<Vec<f64>> {
    check_stride(stride)?;
    Ok(sampled(patch.band(band), stride).collect())
}

/// Linear-interpolation quantile of sorted data (the "type 7" definition).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Silverman's rule of thumb: `0.9 * min(sigma, IQR / 1.34) * n^(-1/5)`.
///
/// `sigma` is the population standard deviation. When the IQR is zero but the
/// samples are not all equal, `sigma` alone is used.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::EmptyInput("bandwidth needs at least 2 samples"));
    }
    let mut stats = RunningStats::default();
    samples.iter().for_each(|&x| stats.push(x));
    let sigma = stats.variance().sqrt();
    if stats.min == stats.max || sigma == 0.0 {
        return Err(Error::DegenerateSamples { n, value: samples[0] });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sigma.min(iqr / 1.34) } else { sigma };
    Ok(0.9 * spread * (n as f64).powf(-0.2))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityCurve {
    pub band: Option<Band>,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
    pub sample_count: usize,
}

impl DensityCurve {
    pub fn trapezoid_mass(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }

    /// Grid point with the highest density (first on ties).
    pub fn mode(&self) -> f64 {
        let mut best = 0;
        for (i, &d) in self.density.iter().enumerate() {
            if d > self.density[best] {
                best = i;
            }
        }
        self.grid[best]
    }

    /// `grid,density`
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv_writer();
        w.write_record(["grid", "density"])?;
        for (g, d) in self.grid.iter().zip(&self.density) {
            w.write_record([fmt_f64(*g), fmt_f64(*d)])?;
        }
        finish_csv(w)
    }
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// `points` equally spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (points - 1) as f64;
            (0..points)
                .map(|i| if i == points - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

/// Evaluation grid spanning `[min - pad*h, max + pad*h]`.
pub fn padded_grid(samples: &[f64], bandwidth: f64, pad: f64, points: usize) -> Vec<f64> {
    let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    });
    linspace(lo - pad * bandwidth, hi + pad * bandwidth, points)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Gaussian KDE: `f(g) = 1/(n h) * sum_i phi((g - x_i) / h)`.
pub fn kde(samples: &[f64], bandwidth: f64, grid: &[f64]) -> Result<DensityCurve> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("kde needs at least one sample"));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }
    if let Some(i) = grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::NonAscendingGrid(i + 1));
    }
    let norm = 1.0 / (samples.len() as f64 * bandwidth);
    // each grid point sums its samples sequentially, so the result is thread-count invariant
    let density = grid
        .par_iter()
        .map(|&g| {
            norm * samples
                .iter()
                .map(|&x| std_normal_pdf((g - x) / bandwidth))
                .sum::<f64>()
        })
        .collect();
    Ok(DensityCurve {
        band: None,
        grid: grid.to_vec(),
        density,
        bandwidth,
        sample_count: samples.len(),
    })
}

/// Silverman bandwidth plus the default `[min - 3h, max + 3h]` grid.
pub fn kde_auto(samples: &[f64], points: usize) -> Result<DensityCurve> {
    let h = silverman_bandwidth(samples)?;
    let grid = padded_grid(samples, h, 3.0, points);
    kde(samples, h, &grid)
}
