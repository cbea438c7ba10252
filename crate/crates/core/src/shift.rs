//! Comparing groups through their landscape-cluster histograms, including
//! coverage scoring of new imagery against a training group.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::export::{csv_writer, finish_csv, fmt_f64};
use crate::kmeans::{featurize, kmeans_assign, Assignment, ClusterModel};
use crate::patch::Patch;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClusterHistogram {
    pub group: String,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl ClusterHistogram {
    pub fn new(group: impl Into<String>, counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        ClusterHistogram {
            group: group.into(),
            counts,
            total,
        }
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }
}

/// Counts per (group, cluster). Groups appear in `order` first, then any
/// remaining labels in lexicographic order.
pub fn cluster_histogram(
    assignments: &[Assignment],
    k: usize,
    groups: &BTreeMap<String, String>,
    order: &[&str],
) -> Result<Vec<ClusterHistogram>> {
    let mut counts: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    for a in assignments {
        let group = groups
            .get(&a.patch_id)
            .ok_or_else(|| Error::MissingGroup(a.patch_id.clone()))?;
        if a.cluster >= k {
            return Err(Error::InvalidParameter(format!(
                "patch {} assigned to cluster {} but K = {k}",
                a.patch_id, a.cluster
            )));
        }
        counts.entry(group.as_str()).or_insert_with(|| vec![0; k])[a.cluster] += 1;
    }
    let mut out = Vec::with_capacity(counts.len());
    for label in order {
        if let Some(c) = counts.remove(label) {
            out.push(ClusterHistogram::new(*label, c));
        }
    }
    out.extend(counts.into_iter().map(|(label, c)| ClusterHistogram::new(label, c)));
    Ok(out)
}

pub fn normalize_histogram(h: &ClusterHistogram) -> Result<Vec<f64>> {
    if h.total == 0 {
        return Err(Error::EmptyInput("histogram has no counts"));
    }
    let total = h.total as f64;
    Ok(h.counts.iter().map(|&c| c as f64 / total).collect())
}

fn shared_k(histograms: &[ClusterHistogram]) -> Result<usize> {
    let k = histograms.first().ok_or(Error::EmptyInput("no histograms"))?.k();
    if let Some(h) = histograms.iter().find(|h| h.k() != k) {
        return Err(Error::ClusterCountMismatch(k, h.k()));
    }
    Ok(k)
}

/// How per-group scores are formed before each cluster column is normalized.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Correction {
    /// `P(c|g) / P(g)`: up-weights groups with fewer patches.
    #[default]
    ImbalanceCorrected,
    /// `P(c|g) * P(g)`: the Bayes posterior.
    Bayes,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilityTable {
    pub groups: Vec<String>,
    /// `values[g][c]`; entries of undefined columns are NaN.
    pub values: Vec<Vec<f64>>,
    pub defined: Vec<bool>,
    pub correction: Correction,
}

impl ProbabilityTable {
    pub fn k(&self) -> usize {
        self.defined.len()
    }

    pub fn get(&self, group: usize, cluster: usize) -> Option<f64> {
        self.defined[cluster].then(|| self.values[group][cluster])
    }

    pub fn column(&self, cluster: usize) -> Option<Vec<f64>> {
        self.defined[cluster].then(|| self.values.iter().map(|row| row[cluster]).collect())
    }

    /// `cluster,<group1>,...,<groupN>,defined`; undefined cells are left empty.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv_writer();
        let mut header = vec!["cluster".to_string()];
        header.extend(self.groups.iter().cloned());
        header.push("defined".into());
        w.write_record(&header)?;
        for c in 0..self.k() {
            let mut row = vec![c.to_string()];
            for g in 0..self.groups.len() {
                row.push(self.get(g, c).map(fmt_f64).unwrap_or_default());
            }
            row.push(self.defined[c].to_string());
            w.write_record(&row)?;
        }
        finish_csv(w)
    }
}

/// Which group each landscape cluster is indicative of, after correcting for
/// unequal group sizes. Clusters with no members anywhere are flagged undefined.
pub fn group_given_cluster(histograms: &[ClusterHistogram], correction: Correction) -> Result<ProbabilityTable> {
    let k = shared_k(histograms)?;
    let grand: u64 = histograms.iter().map(|h| h.total).sum();
    if grand == 0 {
        return Err(Error::EmptyInput("all histograms are empty"));
    }
    let grand = grand as f64;
    // groups without patches contribute a zero score
    let scores: Vec<Vec<f64>> = histograms
        .iter()
        .map(|h| {
            if h.total == 0 {
                return vec![0.0; k];
            }
            let total = h.total as f64;
            let prior = total / grand;
            h.counts
                .iter()
                .map(|&c| {
                    let likelihood = c as f64 / total;
                    match correction {
                        Correction::ImbalanceCorrected => likelihood / prior,
                        Correction::Bayes => likelihood * prior,
                    }
                })
                .collect()
        })
        .collect();
    let mut values = vec![vec![f64::NAN; k]; histograms.len()];
    let mut defined = vec![false; k];
    for c in 0..k {
        let column_total: f64 = scores.iter().map(|row| row[c]).sum();
        if column_total > 0.0 {
            defined[c] = true;
            for (g, row) in scores.iter().enumerate() {
                values[g][c] = row[c] / column_total;
            }
        }
    }
    Ok(ProbabilityTable {
        groups: histograms.iter().map(|h| h.group.clone()).collect(),
        values,
        defined,
        correction,
    })
}

/// `group,cluster,count,frequency`
pub fn histograms_to_csv(histograms: &[ClusterHistogram]) -> Result<Vec<u8>> {
    let mut w = csv_writer();
    w.write_record(["group", "cluster", "count", "frequency"])?;
    for h in histograms {
        let freq = normalize_histogram(h).unwrap_or_else(|_| vec![0.0; h.k()]);
        for (c, (&count, f)) in h.counts.iter().zip(freq).enumerate() {
            w.write_record([h.group.clone(), c.to_string(), count.to_string(), fmt_f64(f)])?;
        }
    }
    finish_csv(w)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub patch_id: String,
    pub training_group: String,
    pub cluster: usize,
    pub distance: f64,
    /// Whether the training group has any patch in this cluster.
    pub present: bool,
    /// Fraction of the group's same-cluster distances that are `<=` this distance;
    /// `None` when `present` is false.
    pub percentile: Option<f64>,
    pub reference_count: usize,
}

/// Scores an already-computed assignment against a training group.
pub fn coverage_of_assignment(
    assignment: &Assignment,
    training: &[Assignment],
    groups: &BTreeMap<String, String>,
    training_group: &str,
) -> CoverageReport {
    let reference: Vec<f64> = training
        .iter()
        .filter(|a| a.cluster == assignment.cluster)
        .filter(|a| groups.get(&a.patch_id).map(String::as_str) == Some(training_group))
        .map(|a| a.distance)
        .collect();
    let present = !reference.is_empty();
    let percentile = present.then(|| {
        let at_or_below = reference.iter().filter(|&&d| d <= assignment.distance).count();
        at_or_below as f64 / reference.len() as f64
    });
    CoverageReport {
        patch_id: assignment.patch_id.clone(),
        training_group: training_group.to_string(),
        cluster: assignment.cluster,
        distance: assignment.distance,
        present,
        percentile,
        reference_count: reference.len(),
    }
}

pub fn coverage_score(
    model: &ClusterModel,
    training: &[Assignment],
    groups: &BTreeMap<String, String>,
    training_group: &str,
    new_patch: &Patch,
) -> Result<CoverageReport> {
    let assignment = kmeans_assign(model, &featurize(new_patch))?;
    Ok(coverage_of_assignment(&assignment, training, groups, training_group))
}

/// `patch_id,training_group,cluster,distance,present,percentile,reference_count`
pub fn coverage_to_csv(reports: &[CoverageReport]) -> Result<Vec<u8>> {
    let mut w = csv_writer();
    w.write_record([
        "patch_id",
        "training_group",
        "cluster",
        "distance",
        "present",
        "percentile",
        "reference_count",
    ])?;
    for r in reports {
        w.write_record([
            r.patch_id.clone(),
            r.training_group.clone(),
            r.cluster.to_string(),
            fmt_f64(r.distance),
            r.present.to_string(),
            r.percentile.map(fmt_f64).unwrap_or_default(),
            r.reference_count.to_string(),
        ])?;
    }
    finish_csv(w)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn assignment(id: &str, cluster: usize, distance: f64) -> Assignment {
        Assignment {
            patch_id: id.into(),
            cluster,
            distance,
        }
    }

    fn groups(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(p, g)| (p.to_string(), g.to_string())).collect()
    }

    #[test]
    fn single_cell_mass() {
        let a: Vec<_> = (0..4).map(|i| assignment(&format!("p{i}"), 0, 0.0)).collect();
        let g = groups(&[("p0", "A"), ("p1", "A"), ("p2", "A"), ("p3", "A")]);
        let h = cluster_histogram(&a, 16, &g, &[]).unwrap();
        assert_eq!(h.len(), 1);
        let mut expected = vec![0; 16];
        expected[0] = 4;
        assert_eq!(h[0].counts, expected);
        let f = normalize_histogram(&h[0]).unwrap();
        assert_eq!(f[0], 1.0);
        assert!(f[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn disjoint_groups_are_block_diagonal() {
        let a = vec![
            assignment("a1", 0, 0.0),
            assignment("a2", 1, 0.0),
            assignment("b1", 2, 0.0),
            assignment("b2", 3, 0.0),
        ];
        let g = groups(&[("a1", "A"), ("a2", "A"), ("b1", "B"), ("b2", "B")]);
        let h = cluster_histogram(&a, 4, &g, &["B", "A"]).unwrap();
        assert_eq!(h[0].group, "B");
        assert_eq!(h[0].counts, vec![0, 0, 1, 1]);
        assert_eq!(h[1].counts, vec![1, 1, 0, 0]);
        let t = group_given_cluster(&h, Correction::default()).unwrap();
        assert_eq!(t.column(0).unwrap(), vec![0.0, 1.0]);
        assert_eq!(t.column(3).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn missing_group_is_an_error() {
        let a = vec![assignment("x", 0, 0.0)];
        assert!(matches!(
            cluster_histogram(&a, 2, &BTreeMap::new(), &[]),
            Err(Error::MissingGroup(_))
        ));
    }

    #[test]
    fn normalize_uniform_support_and_empty() {
        let h = ClusterHistogram::new("g", vec![1, 1, 1, 1, 0, 0]);
        assert_eq!(normalize_histogram(&h).unwrap(), vec![0.25, 0.25, 0.25, 0.25, 0.0, 0.0]);
        assert!(normalize_histogram(&ClusterHistogram::new("g", vec![0, 0])).is_err());
    }

    #[test]
    fn hand_computed_two_by_two() {
        let h = vec![
            ClusterHistogram::new("A", vec![3, 1]),
            ClusterHistogram::new("B", vec![1, 3]),
        ];
        let t = group_given_cluster(&h, Correction::ImbalanceCorrected).unwrap();
        assert_eq!(t.get(0, 0), Some(0.75));
        assert_eq!(t.get(1, 0), Some(0.25));
        assert_eq!(t.get(0, 1), Some(0.25));
        assert_eq!(t.get(1, 1), Some(0.75));
    }

    #[test]
    fn correction_differs_from_bayes_under_imbalance() {
        // A: 8 patches, B: 2 patches, both half in cluster 0
        let h = vec![
            ClusterHistogram::new("A", vec![4, 4]),
            ClusterHistogram::new("B", vec![1, 1]),
        ];
        let corrected = group_given_cluster(&h, Correction::ImbalanceCorrected).unwrap();
        // scores 0.5/0.8 and 0.5/0.2 → 0.625 and 2.5
        assert!((corrected.get(0, 0).unwrap() - 0.2).abs() < 1e-15);
        assert!((corrected.get(1, 0).unwrap() - 0.8).abs() < 1e-15);
        let bayes = group_given_cluster(&h, Correction::Bayes).unwrap();
        assert!((bayes.get(0, 0).unwrap() - 0.8).abs() < 1e-15);
        assert!((bayes.get(1, 0).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn identical_histograms_give_uniform_columns() {
        let h = vec![
            ClusterHistogram::new("A", vec![2, 5, 1]),
            ClusterHistogram::new("B", vec![2, 5, 1]),
            ClusterHistogram::new("C", vec![2, 5, 1]),
        ];
        let t = group_given_cluster(&h, Correction::default()).unwrap();
        for c in 0..3 {
            for v in t.column(c).unwrap() {
                assert!((v - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn empty_columns_are_undefined() {
        let h = vec![
            ClusterHistogram::new("A", vec![2, 0, 1]),
            ClusterHistogram::new("B", vec![1, 0, 0]),
        ];
        let t = group_given_cluster(&h, Correction::default()).unwrap();
        assert_eq!(t.defined, vec![true, false, true]);
        assert_eq!(t.get(0, 1), None);
        let csv = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert!(csv.lines().nth(2).unwrap().starts_with("1,,,false"));
        assert!(group_given_cluster(&[ClusterHistogram::new("A", vec![0, 0])], Correction::default()).is_err());
        assert!(group_given_cluster(&[], Correction::default()).is_err());
    }

    #[test]
    fn mismatched_k_is_rejected() {
        let h = vec![
            ClusterHistogram::new("A", vec![1, 2]),
            ClusterHistogram::new("B", vec![1, 2, 3]),
        ];
        assert!(matches!(
            group_given_cluster(&h, Correction::default()),
            Err(Error::ClusterCountMismatch(2, 3))
        ));
    }

    #[test]
    fn coverage_presence_and_percentile() {
        let training = vec![
            assignment("t1", 2, 1.0),
            assignment("t2", 2, 3.0),
            assignment("t3", 2, 5.0),
            assignment("t4", 2, 7.0),
            assignment("o1", 4, 1.0),
        ];
        let g = groups(&[("t1", "A"), ("t2", "A"), ("t3", "A"), ("t4", "A"), ("o1", "B")]);
        let r = coverage_of_assignment(&assignment("new", 2, 3.0), &training, &g, "A");
        assert!(r.present);
        assert_eq!(r.percentile, Some(0.5));
        let r = coverage_of_assignment(&assignment("new", 4, 0.5), &training, &g, "A");
        assert!(!r.present);
        assert_eq!(r.percentile, None);
    }

    proptest! {
        #[test]
        fn histogram_matches_nested_loop(
            raw in prop::collection::vec((0usize..5, 0usize..3), 1..80)
        ) {
            let labels = ["A", "B", "C"];
            let assignments: Vec<_> = raw.iter().enumerate()
                .map(|(i, &(c, _))| assignment(&format!("p{i}"), c, 0.0)).collect();
            let g: BTreeMap<String, String> = raw.iter().enumerate()
                .map(|(i, &(_, grp))| (format!("p{i}"), labels[grp].to_string())).collect();
            let hs = cluster_histogram(&assignments, 5, &g, &labels).unwrap();
            for h in &hs {
                for c in 0..5 {
                    let mut n = 0;
                    for &(cl, grp) in &raw {
                        if cl == c && labels[grp] == h.group { n += 1; }
                    }
                    prop_assert_eq!(h.counts[c], n);
                }
            }
        }

        #[test]
        fn columns_sum_to_one_and_scale_invariant(
            counts in prop::collection::vec(prop::collection::vec(0u64..50, 6), 2..6),
            factor in 2u64..5,
        ) {
            let hs: Vec<_> = counts.iter().enumerate()
                .map(|(i, c)| ClusterHistogram::new(format!("g{i}"), c.clone())).collect();
            prop_assume!(hs.iter().any(|h| h.total > 0));
            let t = group_given_cluster(&hs, Correction::default()).unwrap();
            for c in 0..t.k() {
                if let Some(col) = t.column(c) {
                    prop_assert!((col.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                    prop_assert!(col.iter().all(|v| (0.0..=1.0).contains(v)));
                }
            }
            let scaled: Vec<_> = counts.iter().enumerate()
                .map(|(i, c)| ClusterHistogram::new(format!("g{i}"), c.iter().map(|x| x * factor).collect())).collect();
            let t2 = group_given_cluster(&scaled, Correction::default()).unwrap();
            prop_assert_eq!(&t.defined, &t2.defined);
            for c in 0..t.k() {
                if t.defined[c] {
                    for g in 0..t.groups.len() {
                        prop_assert!((t.values[g][c] - t2.values[g][c]).abs() <= 1e-12);
                    }
                }
            }
        }

        #[test]
        fn percentile_monotone_in_distance(
            dists in prop::collection::vec(0.0f64..100.0, 1..30),
            a in 0.0f64..120.0, b in 0.0f64..120.0,
        ) {
            let training: Vec<_> = dists.iter().enumerate()
                .map(|(i, &d)| assignment(&format!("t{i}"), 0, d)).collect();
            let g: BTreeMap<String, String> = (0..dists.len()).map(|i| (format!("t{i}"), "A".to_string())).collect();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let p_lo = coverage_of_assignment(&assignment("n", 0, lo), &training, &g, "A").percentile.unwrap();
            let p_hi = coverage_of_assignment(&assignment("n", 0, hi), &training, &g, "A").percentile.unwrap();
            prop_assert!(p_lo <= p_hi);
            prop_assert!((0.0..=1.0).contains(&p_hi));
            let mut sorted = dists.clone();
            sorted.sort_by(f64::total_cmp);
            let oracle = sorted.partition_point(|&d| d <= hi) as f64 / sorted.len() as f64;
            prop_assert_eq!(p_hi, oracle);
        }
    }
}
