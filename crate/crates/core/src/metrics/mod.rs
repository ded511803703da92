//! Frame-level ROC AUC and the region/track detection criteria, evaluated
//! from a scores file against ground truth.

mod auc;
mod detection;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{BBox, GroundTruth, Region};
use crate::par;
use crate::scoring::{ScoreTimeline, ScoresFile};

pub use auc::{auc, roc_curve, RocCurve};
pub use detection::{detection_curve, regions_needed, track_score, DetectionCurve, DetectionMatch};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("labels contain a single class; AUC is undefined")]
    SingleClassLabels,
    #[error("ground truth has no anomalous regions")]
    NoGtRegions,
    #[error("ground truth has no anomalous tracks")]
    NoGtTracks,
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("video {0} has ground truth but no scores")]
    MissingVideo(String),
    #[error("{path}: {message}")]
    File { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, MetricsError>;

/// Per-video frame selection; `true` keeps the frame in every metric.
pub type FrameMask = BTreeMap<String, Vec<bool>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    pub iou_min: f64,
    /// Fraction of a track's regions that must be detected.
    pub alpha: f64,
    /// Pool all videos into one ROC sweep; otherwise average per-video AUCs.
    pub concat: bool,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            iou_min: 0.1,
            alpha: 0.1,
            concat: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub auc: f64,
    pub rbdc: f64,
    pub tbdc: f64,
    /// `None` where a video's kept frames are all one class.
    pub per_video_auc: BTreeMap<String, Option<f64>>,
}

fn kept(mask: Option<&FrameMask>, video: &str, frame: usize) -> bool {
    mask.and_then(|m| m.get(video))
        .is_none_or(|m| m.get(frame).copied().unwrap_or(false))
}

fn check_lengths(
    video: &str,
    t: &ScoreTimeline,
    labels: &[u8],
    mask: Option<&FrameMask>,
) -> Result<()> {
    if t.smoothed.len() != labels.len() {
        return Err(MetricsError::LengthMismatch(format!(
            "{video}: {} scores vs {} labels",
            t.smoothed.len(),
            labels.len()
        )));
    }
    if let Some(m) = mask.and_then(|m| m.get(video)) {
        if m.len() != labels.len() {
            return Err(MetricsError::LengthMismatch(format!(
                "{video}: mask of {} frames vs {} labels",
                m.len(),
                labels.len()
            )));
        }
    }
    Ok(())
}

fn video_frames<'a>(
    scores: &'a ScoresFile,
    gt: &'a GroundTruth,
    mask: Option<&FrameMask>,
) -> Result<Vec<(&'a str, &'a ScoreTimeline, &'a [u8])>> {
    gt.frame_labels
        .iter()
        .map(|(v, labels)| {
            let t = scores
                .get(v)
                .ok_or_else(|| MetricsError::MissingVideo(v.clone()))?;
            check_lengths(v, t, labels, mask)?;
            Ok((v.as_str(), t, labels.as_slice()))
        })
        .collect()
}

fn kept_pairs(video: &str, t: &ScoreTimeline, labels: &[u8], mask: Option<&FrameMask>) -> (Vec<f64>, Vec<bool>) {
    (0..labels.len())
        .filter(|&f| kept(mask, video, f))
        .map(|f| (t.smoothed[f], labels[f] == 1))
        .unzip()
}

/// Frame-level AUC of the smoothed scores.
pub fn frame_auc(
    scores: &ScoresFile,
    gt: &GroundTruth,
    concat: bool,
    mask: Option<&FrameMask>,
) -> Result<f64> {
    let videos = video_frames(scores, gt, mask)?;
    if concat {
        let (mut s, mut l) = (Vec::new(), Vec::new());
        for (v, t, labels) in videos {
            let (a, b) = kept_pairs(v, t, labels, mask);
            s.extend(a);
            l.extend(b);
        }
        auc(&s, &l)
    } else {
        let per: Vec<f64> = per_video_auc(scores, gt, mask)?.into_values().flatten().collect();
        if per.is_empty() {
            return Err(MetricsError::SingleClassLabels);
        }
        Ok(per.iter().sum::<f64>() / per.len() as f64)
    }
}

pub fn per_video_auc(
    scores: &ScoresFile,
    gt: &GroundTruth,
    mask: Option<&FrameMask>,
) -> Result<BTreeMap<String, Option<f64>>> {
    video_frames(scores, gt, mask)?
        .into_iter()
        .map(|(v, t, labels)| {
            let (s, l) = kept_pairs(v, t, labels, mask);
            match auc(&s, &l) {
                Ok(a) => Ok((v.to_string(), Some(a))),
                Err(MetricsError::SingleClassLabels) => Ok((v.to_string(), None)),
                Err(e) => Err(e),
            }
        })
        .collect()
}

struct VideoMatch {
    regions: DetectionMatch,
    tracks: DetectionMatch,
}

/// Matches one video's object detections against its regions and tracks.
fn match_video(
    video: &str,
    t: &ScoreTimeline,
    n_frames: usize,
    gt: &GroundTruth,
    cfg: &MetricsConfig,
    mask: Option<&FrameMask>,
) -> VideoMatch {
    let mut dets: BTreeMap<u32, Vec<(BBox, f64)>> = BTreeMap::new();
    for o in &t.objects {
        for ((&f, b), &s) in o.frames.iter().zip(&o.bboxes).zip(&o.scores) {
            if (f as usize) < n_frames && kept(mask, video, f as usize) {
                dets.entry(f).or_default().push((*b, s));
            }
        }
    }
    let tracks: Vec<_> = gt.tracks.iter().filter(|g| g.video_id == video).collect();
    let mut gt_by_frame: BTreeMap<u32, Vec<&Region>> = BTreeMap::new();
    let region_map = gt.regions.get(video);
    for (&f, rs) in region_map.into_iter().flatten() {
        gt_by_frame.entry(f).or_default().extend(rs);
    }
    for g in &tracks {
        for (&f, r) in g.frames.iter().zip(&g.regions) {
            gt_by_frame.entry(f).or_default().push(r);
        }
    }
    let region_score = |f: u32, r: &Region| -> Option<f64> {
        dets.get(&f)?
            .iter()
            .filter(|(b, _)| r.iou(b) >= cfg.iou_min)
            .map(|&(_, s)| s)
            .reduce(f64::max)
    };

    let mut false_positive_scores = Vec::new();
    for (&f, ds) in &dets {
        let regions = gt_by_frame.get(&f).map(Vec::as_slice).unwrap_or(&[]);
        for (b, s) in ds {
            if regions.iter().all(|r| r.iou(b) < cfg.iou_min) {
                false_positive_scores.push(*s);
            }
        }
    }
    let region_targets: Vec<Option<f64>> = region_map
        .into_iter()
        .flatten()
        .filter(|(&f, _)| (f as usize) < n_frames && kept(mask, video, f as usize))
        .flat_map(|(&f, rs)| rs.iter().map(move |r| (f, r)))
        .map(|(f, r)| region_score(f, r))
        .collect();
    let track_targets: Vec<Option<f64>> = tracks
        .iter()
        .filter_map(|g| {
            let s: Vec<Option<f64>> = g
                .frames
                .iter()
                .zip(&g.regions)
                .filter(|(&f, _)| (f as usize) < n_frames && kept(mask, video, f as usize))
                .map(|(&f, r)| region_score(f, r))
                .collect();
            // a track fully outside the kept frames is not evaluated
            (!s.is_empty()).then(|| track_score(&s, cfg.alpha))
        })
        .collect();
    let total_frames = (0..n_frames).filter(|&f| kept(mask, video, f)).count();
    VideoMatch {
        regions: DetectionMatch {
            false_positive_scores: false_positive_scores.clone(),
            target_scores: region_targets,
            total_frames,
        },
        tracks: DetectionMatch {
            false_positive_scores,
            target_scores: track_targets,
            total_frames,
        },
    }
}

fn match_all(
    scores: &ScoresFile,
    gt: &GroundTruth,
    cfg: &MetricsConfig,
    mask: Option<&FrameMask>,
) -> Result<(DetectionMatch, DetectionMatch)> {
    let videos = video_frames(scores, gt, mask)?;
    let per = par::map(&videos, |(v, t, labels)| match_video(v, t, labels.len(), gt, cfg, mask));
    let (mut regions, mut tracks) = (DetectionMatch::default(), DetectionMatch::default());
    for m in per {
        regions.merge(m.regions);
        tracks.merge(m.tracks);
    }
    Ok((regions, tracks))
}

/// Region-based detection criterion.
pub fn rbdc(
    scores: &ScoresFile,
    gt: &GroundTruth,
    cfg: &MetricsConfig,
    mask: Option<&FrameMask>,
) -> Result<f64> {
    let (regions, _) = match_all(scores, gt, cfg, mask)?;
    if regions.target_scores.is_empty() {
        return Err(MetricsError::NoGtRegions);
    }
    Ok(detection_curve(&regions).area)
}

/// Track-based detection criterion.
pub fn tbdc(
    scores: &ScoresFile,
    gt: &GroundTruth,
    cfg: &MetricsConfig,
    mask: Option<&FrameMask>,
) -> Result<f64> {
    let (_, tracks) = match_all(scores, gt, cfg, mask)?;
    if tracks.target_scores.is_empty() {
        return Err(MetricsError::NoGtTracks);
    }
    Ok(detection_curve(&tracks).area)
}

pub fn evaluate(
    scores: &ScoresFile,
    gt: &GroundTruth,
    cfg: &MetricsConfig,
    mask: Option<&FrameMask>,
) -> Result<MetricsReport> {
    let auc = frame_auc(scores, gt, cfg.concat, mask)?;
    let per_video_auc = per_video_auc(scores, gt, mask)?;
    let (regions, tracks) = match_all(scores, gt, cfg, mask)?;
    if regions.target_scores.is_empty() {
        return Err(MetricsError::NoGtRegions);
    }
    if tracks.target_scores.is_empty() {
        return Err(MetricsError::NoGtTracks);
    }
    Ok(MetricsReport {
        auc,
        rbdc: detection_curve(&regions).area,
        tbdc: detection_curve(&tracks).area,
        per_video_auc,
    })
}

fn file_err(path: &Path, e: impl ToString) -> MetricsError {
    MetricsError::File {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub fn load_frame_mask(path: &Path) -> Result<FrameMask> {
    let text = std::fs::read_to_string(path).map_err(|e| file_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| file_err(path, e))
}

pub fn save_report(path: &Path, report: &MetricsReport) -> Result<()> {
    let text = serde_json::to_string_pretty(report).map_err(|e| file_err(path, e))?;
    std::fs::write(path, text).map_err(|e| file_err(path, e))
}

pub fn load_report(path: &Path) -> Result<MetricsReport> {
    let text = std::fs::read_to_string(path).map_err(|e| file_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| file_err(path, e))
}

#[cfg(test)]
mod tests;
