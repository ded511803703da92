use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// Detection rate against false positives per frame, swept over descending
/// score thresholds and starting at (0, 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionCurve {
    pub thresholds: Vec<f64>,
    pub rate: Vec<f64>,
    pub fp_per_frame: Vec<f64>,
    /// Area for false positives per frame in [0, 1], divided by that cap.
    pub area: f64,
}

/// Outcome of matching the scored detections against ground truth.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionMatch {
    /// Scores of detections overlapping no ground-truth region.
    pub false_positive_scores: Vec<f64>,
    /// Per target (region or track): the threshold at or below which it
    /// counts as detected, `None` if never.
    pub target_scores: Vec<Option<f64>>,
    pub total_frames: usize,
}

impl DetectionMatch {
    pub fn merge(&mut self, other: DetectionMatch) {
        self.false_positive_scores.extend(other.false_positive_scores);
        self.target_scores.extend(other.target_scores);
        self.total_frames += other.total_frames;
    }
}

fn descending(v: &mut [f64]) {
    v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
}

/// Builds the curve for a match. The curve is cut at one false positive per
/// frame (interpolating the crossing) and extended flat to it otherwise.
pub fn detection_curve(m: &DetectionMatch) -> DetectionCurve {
    let mut fps = m.false_positive_scores.clone();
    let mut hits: Vec<f64> = m.target_scores.iter().flatten().copied().collect();
    descending(&mut fps);
    descending(&mut hits);
    let mut thresholds: Vec<f64> = fps.iter().chain(&hits).copied().collect();
    descending(&mut thresholds);
    thresholds.dedup();

    let n_targets = m.target_scores.len().max(1) as f64;
    let frames = m.total_frames.max(1) as f64;
    let mut curve = DetectionCurve {
        thresholds: vec![f64::INFINITY],
        rate: vec![0.0],
        fp_per_frame: vec![0.0],
        area: 0.0,
    };
    let (mut i_fp, mut i_hit) = (0, 0);
    let mut capped = false;
    for &t in &thresholds {
        while i_fp < fps.len() && fps[i_fp] >= t {
            i_fp += 1;
        }
        while i_hit < hits.len() && hits[i_hit] >= t {
            i_hit += 1;
        }
        let (x, y) = (i_fp as f64 / frames, i_hit as f64 / n_targets);
        let (px, py) = (*curve.fp_per_frame.last().unwrap(), *curve.rate.last().unwrap());
        curve.thresholds.push(t);
        curve.rate.push(y);
        curve.fp_per_frame.push(x);
        if !capped {
            if x <= 1.0 {
                curve.area += (x - px) * (y + py) / 2.0;
            } else {
                let y1 = py + (y - py) * (1.0 - px) / (x - px);
                curve.area += (1.0 - px) * (py + y1) / 2.0;
                capped = true;
            }
        }
    }
    if !capped {
        let (px, py) = (*curve.fp_per_frame.last().unwrap(), *curve.rate.last().unwrap());
        curve.area += (1.0 - px) * py;
    }
    curve
}

/// Number of detected regions a track of `len` regions needs: the smallest
/// count whose fraction of `len` reaches `alpha`, and at least one.
pub fn regions_needed(len: usize, alpha: f64) -> usize {
    // guard against 0.1 * 30 = 3.0000000000000004
    ((alpha * len as f64 - 1e-9).ceil() as usize).clamp(1, len.max(1))
}

/// Threshold at which a track becomes detected: the `regions_needed`-th
/// largest of its region scores.
pub fn track_score(region_scores: &[Option<f64>], alpha: f64) -> Option<f64> {
    let mut s: Vec<f64> = region_scores.iter().flatten().copied().collect();
    descending(&mut s);
    s.get(regions_needed(region_scores.len(), alpha) - 1).copied()
}
