use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{MetricsError, Result};

/// ROC curve from a descending threshold sweep; point 0 is the empty
/// selection at (0, 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub thresholds: Vec<f64>,
    pub tpr: Vec<f64>,
    pub fpr: Vec<f64>,
    pub auc: f64,
}

/// Sweeps each distinct score once, so tied scores enter the selection
/// together and form a single diagonal step.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(MetricsError::LengthMismatch(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricsError::SingleClassLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));

    let mut curve = RocCurve {
        thresholds: vec![f64::INFINITY],
        tpr: vec![0.0],
        fpr: vec![0.0],
        auc: 0.0,
    };
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let (x, y) = (fp as f64 / neg as f64, tp as f64 / pos as f64);
        let (px, py) = (*curve.fpr.last().unwrap(), *curve.tpr.last().unwrap());
        curve.auc += (x - px) * (y + py) / 2.0;
        curve.thresholds.push(t);
        curve.tpr.push(y);
        curve.fpr.push(x);
    }
    Ok(curve)
}

pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    roc_curve(scores, labels).map(|c| c.auc)
}
