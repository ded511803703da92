use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    chi2_matrix, cross_validate, hierarchical_cluster, rbf_gram, ClusterConfig, ClusterError,
    CvReport, DistanceMatrix, OcSvmModel, Result, SvmModel,
};
use crate::descriptors::chi2_unchecked;
use crate::par;

/// Everything needed to label and score unseen Shape Context descriptors.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub config: ClusterConfig,
    pub dim: usize,
    /// Surviving hierarchical cluster ids; position = dense label.
    pub kept_cluster_ids: Vec<usize>,
    /// Normalised medoid of each kept cluster, `n_clusters × dim`.
    pub medoids: Vec<f64>,
    pub svm: SvmModel,
    pub ocsvm: OcSvmModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelingReport {
    pub descriptors: usize,
    pub sample_size: usize,
    pub hc_cluster_sizes: Vec<usize>,
    pub cv: CvReport,
    pub svm_max_violation: f64,
    pub ocsvm_max_violation: f64,
    /// Total-variation distance between the sample's cluster shares and the
    /// shares over every labelled descriptor.
    pub label_tv_distance: f64,
    pub discarded_cluster_ids: Vec<usize>,
    pub n_clusters: usize,
    /// Fraction of sample points with a non-negative one-class decision value.
    pub ocsvm_inlier_fraction: f64,
}

fn normalize_rows(counts: &[f64], dim: usize) -> Vec<f64> {
    counts
        .chunks(dim)
        .flat_map(|r| {
            let s: f64 = r.iter().sum();
            let s = if s > 0.0 { s } else { 1.0 };
            r.iter().map(move |v| v / s)
        })
        .collect()
}

fn nearest(x: &[f64], candidates: &[f64], dim: usize) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (i, c) in candidates.chunks(dim).enumerate() {
        let d = chi2_unchecked(x, c);
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

/// Sample member with the smallest summed distance to its cluster mates.
fn medoids(d: &DistanceMatrix, labels: &[usize]) -> BTreeMap<usize, usize> {
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        members.entry(l).or_default().push(i);
    }
    members
        .into_iter()
        .map(|(l, m)| {
            let best = m
                .iter()
                .copied()
                .min_by(|&a, &b| {
                    let sa: f64 = m.iter().map(|&j| d.get(a, j)).sum();
                    let sb: f64 = m.iter().map(|&j| d.get(b, j)).sum();
                    sa.total_cmp(&sb)
                })
                .expect("non-empty cluster");
            (l, best)
        })
        .collect()
}

/// Drops clusters holding less than `threshold` of all labels, moves their
/// members to the nearest surviving medoid (χ² on the normalised rows in
/// `normalized`) and renumbers the survivors densely in ascending id order.
/// Returns the new labels and the surviving ids.
pub fn discard_small_clusters(
    labels: &[usize],
    normalized: &[f64],
    dim: usize,
    medoid_rows: &BTreeMap<usize, Vec<f64>>,
    threshold: f64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let n = labels.len().max(1) as f64;
    let kept: Vec<usize> = counts
        .iter()
        .filter(|(_, &c)| c as f64 / n >= threshold)
        .map(|(&l, _)| l)
        .collect();
    if kept.is_empty() {
        return Err(ClusterError::AllClustersDiscarded);
    }
    let dense: BTreeMap<usize, usize> = kept.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let kept_medoids: Vec<f64> = kept
        .iter()
        .flat_map(|l| medoid_rows[l].iter().copied())
        .collect();
    let out = labels
        .iter()
        .enumerate()
        .map(|(i, l)| match dense.get(l) {
            Some(&d) => d,
            None => nearest(&normalized[i * dim..(i + 1) * dim], &kept_medoids, dim),
        })
        .collect();
    Ok((out, kept))
}

/// Two-step self-labelling of Shape Context count rows (`counts`, rows of
/// `dim`): hierarchical clustering of a random sample, then an SVM trained on
/// the sample labels the rest. Returns dense labels for every row.
pub fn subsample_and_label(
    counts: &[f64],
    dim: usize,
    cfg: &ClusterConfig,
    seed: u64,
) -> Result<(Vec<usize>, ClusterModel, LabelingReport)> {
    let n = counts.len() / dim;
    let m = cfg.sample.min(n);
    if cfg.k < 2 || m < cfg.k {
        return Err(ClusterError::TooFewSamples { n: m, k: cfg.k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, n, m).into_vec();
    picked.sort_unstable();
    let row = |i: usize| &counts[i * dim..(i + 1) * dim];
    let xs: Vec<f64> = picked.iter().flat_map(|&i| row(i).iter().copied()).collect();
    let normalized = normalize_rows(counts, dim);
    let ns = normalize_rows(&xs, dim);

    let d = chi2_matrix(&ns, dim);
    let mut hc = hierarchical_cluster(&d, cfg.k)?;
    let mut hc_sizes = vec![0usize; cfg.k];
    for &l in &hc {
        hc_sizes[l] += 1;
    }
    if let Some(empty) = hc_sizes.iter().position(|&s| s == 0) {
        return Err(ClusterError::DegenerateClustering(empty));
    }
    // A one-member cluster cannot anchor a binary machine; fold it into the
    // nearest medoid of a cluster that can.
    let meds = medoids(&d, &hc);
    let viable: Vec<usize> = (0..cfg.k).filter(|&c| hc_sizes[c] >= 2).collect();
    if viable.len() < 2 {
        let class = (0..cfg.k).find(|&c| hc_sizes[c] < 2).unwrap_or(0);
        return Err(ClusterError::ClassUnderflow {
            class,
            count: hc_sizes[class],
        });
    }
    for i in 0..m {
        if hc_sizes[hc[i]] < 2 {
            let best = viable
                .iter()
                .copied()
                .min_by(|&a, &b| d.get(i, meds[&a]).total_cmp(&d.get(i, meds[&b])))
                .expect("viable clusters");
            hc[i] = best;
        }
    }

    let gram = rbf_gram(&xs, dim, cfg.gamma);
    let cv = cross_validate(
        &gram,
        &hc,
        cfg.cv_folds,
        cfg.cv_validation_fraction,
        cfg.svm_c,
        cfg.tolerance,
        seed,
    )?;
    let svm = SvmModel::train_with_gram(&xs, dim, &gram, &hc, cfg.svm_c, cfg.gamma, cfg.tolerance)?;
    let ocsvm = OcSvmModel::train_with_gram(&xs, dim, &gram, cfg.nu, cfg.gamma, cfg.tolerance)?;
    drop(gram);

    // Sample rows keep their clustering label; the rest are predicted.
    let mut labels = vec![usize::MAX; n];
    for (s, &i) in picked.iter().enumerate() {
        labels[i] = hc[s];
    }
    let rest: Vec<usize> = (0..n).filter(|&i| labels[i] == usize::MAX).collect();
    const CHUNK: usize = 256;
    let chunks: Vec<&[usize]> = rest.chunks(CHUNK).collect();
    let predicted = par::try_map(&chunks, |idx| {
        let x: Vec<f64> = idx.iter().flat_map(|&i| row(i).iter().copied()).collect();
        svm.predict_batch(&x)
    })?;
    for (&i, l) in rest.iter().zip(predicted.into_iter().flatten()) {
        labels[i] = l;
    }

    let share = |ls: &[usize]| {
        let mut s = vec![0.0; cfg.k];
        for &l in ls {
            s[l] += 1.0 / ls.len() as f64;
        }
        s
    };
    let (ps, pa) = (share(&hc), share(&labels));
    let label_tv_distance = 0.5 * ps.iter().zip(&pa).map(|(a, b)| (a - b).abs()).sum::<f64>();

    let medoid_rows: BTreeMap<usize, Vec<f64>> = medoids(&d, &hc)
        .into_iter()
        .map(|(l, s)| (l, ns[s * dim..(s + 1) * dim].to_vec()))
        .collect();
    let (dense, kept) = discard_small_clusters(&labels, &normalized, dim, &medoid_rows, cfg.discard_threshold)?;
    let discarded: Vec<usize> = medoid_rows.keys().copied().filter(|l| !kept.contains(l)).collect();

    let inliers = ocsvm.decision_values(&xs)?.iter().filter(|&&f| f >= 0.0).count();
    let model = ClusterModel {
        config: cfg.clone(),
        dim,
        medoids: kept.iter().flat_map(|l| medoid_rows[l].iter().copied()).collect(),
        kept_cluster_ids: kept,
        svm,
        ocsvm,
    };
    let report = LabelingReport {
        descriptors: n,
        sample_size: m,
        hc_cluster_sizes: hc_sizes,
        cv,
        svm_max_violation: model.svm.max_violation,
        ocsvm_max_violation: model.ocsvm.max_violation,
        label_tv_distance,
        discarded_cluster_ids: discarded,
        n_clusters: model.n_clusters(),
        ocsvm_inlier_fraction: inliers as f64 / m as f64,
    };
    Ok((dense, model, report))
}

impl ClusterModel {
    pub fn n_clusters(&self) -> usize {
        self.kept_cluster_ids.len()
    }

    /// Dense cluster label of each count row: the SVM's label when that
    /// cluster survived, otherwise the nearest kept medoid.
    pub fn assign(&self, counts: &[f64]) -> Result<Vec<usize>> {
        let raw = self.svm.predict_batch(counts)?;
        let normalized = normalize_rows(counts, self.dim);
        Ok(raw
            .into_iter()
            .enumerate()
            .map(|(i, l)| match self.kept_cluster_ids.iter().position(|&k| k == l) {
                Some(d) => d,
                None => nearest(&normalized[i * self.dim..(i + 1) * self.dim], &self.medoids, self.dim),
            })
            .collect())
    }

    /// Novelty proximity in (0, 1) of each count row.
    pub fn proximity(&self, counts: &[f64]) -> Result<Vec<f64>> {
        self.ocsvm.proximity(counts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discard_keeps_everything_at_zero_threshold() {
        let labels = vec![0, 1, 1, 2, 2, 2];
        let meds: BTreeMap<usize, Vec<f64>> = (0..3).map(|l| (l, vec![1.0, 0.0])).collect();
        let x = vec![1.0, 0.0].repeat(6);
        let (out, kept) = discard_small_clusters(&labels, &x, 2, &meds, 0.0).unwrap();
        assert_eq!(out, labels);
        assert_eq!(kept, vec![0, 1, 2]);
    }

    #[test]
    fn tiny_cluster_is_reassigned_to_nearest_medoid() {
        // 1000 samples: cluster 7 holds one, close to cluster 3's medoid
        let mut labels = vec![3; 600];
        labels.extend(vec![5; 399]);
        labels.push(7);
        let mut x = Vec::new();
        for &l in &labels {
            x.extend(match l {
                3 => [0.9, 0.1, 0.0],
                5 => [0.0, 0.1, 0.9],
                _ => [0.8, 0.2, 0.0],
            });
        }
        let meds: BTreeMap<usize, Vec<f64>> = [
            (3, vec![0.9, 0.1, 0.0]),
            (5, vec![0.0, 0.1, 0.9]),
            (7, vec![0.8, 0.2, 0.0]),
        ]
        .into();
        let (out, kept) = discard_small_clusters(&labels, &x, 3, &meds, 0.01).unwrap();
        assert_eq!(kept, vec![3, 5]);
        assert_eq!(out.len(), 1000);
        assert_eq!(out[999], 0);
        assert_eq!(out.iter().filter(|&&l| l == 0).count(), 601);
        assert!(matches!(
            discard_small_clusters(&labels, &x, 3, &meds, 0.9),
            Err(ClusterError::AllClustersDiscarded)
        ));
    }
}
