use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::svm::{argmax, fit_ovr};
use super::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
}

/// One stratified random split: each class sends `round(frac·n_c)` members to
/// validation, capped so at least two stay in training. Indices come back
/// sorted.
pub fn stratified_split(labels: &[usize], frac: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (_, mut idx) in by_class {
        idx.shuffle(rng);
        let nv = ((frac * idx.len() as f64).round() as usize).min(idx.len().saturating_sub(2));
        val.extend_from_slice(&idx[..nv]);
        train.extend_from_slice(&idx[nv..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

/// Repeated stratified random validation of the one-vs-rest SVM on a
/// precomputed Gram matrix (`n × n`).
pub fn cross_validate(
    gram: &[f64],
    labels: &[usize],
    folds: usize,
    frac: f64,
    c: f64,
    tolerance: f64,
    seed: u64,
) -> Result<CvReport> {
    let n = labels.len();
    let mut fold_accuracy = Vec::with_capacity(folds);
    for fold in 0..folds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(fold as u64 + 1);
        let (tr, va) = stratified_split(labels, frac, &mut rng);
        if va.is_empty() {
            continue;
        }
        let sub: Vec<f64> = tr.iter().flat_map(|&i| tr.iter().map(move |&j| gram[i * n + j])).collect();
        let tl: Vec<usize> = tr.iter().map(|&i| labels[i]).collect();
        let fit = fit_ovr(&sub, &tl, c, tolerance)?;
        let correct = va
            .iter()
            .filter(|&&v| {
                let scores: Vec<f64> = fit
                    .signed_alpha
                    .iter()
                    .zip(&fit.rho)
                    .map(|(a, r)| tr.iter().zip(a).map(|(&t, ai)| ai * gram[v * n + t]).sum::<f64>() - r)
                    .collect();
                fit.class_ids[argmax(&scores)] == labels[v]
            })
            .count();
        fold_accuracy.push(correct as f64 / va.len() as f64);
    }
    let mean_accuracy = if fold_accuracy.is_empty() {
        f64::NAN
    } else {
        fold_accuracy.iter().sum::<f64>() / fold_accuracy.len() as f64
    };
    Ok(CvReport {
        fold_accuracy,
        mean_accuracy,
    })
}
