//! Object evidence → per-frame score timelines: the C-RNN transition score,
//! max-over-objects aggregation, Gaussian smoothing and normalisation.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::BBox;
use crate::models::{Crnn, ModelError};

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("track too short: need {needed} contours, got {got}")]
    TrackTooShort { needed: usize, got: usize },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("sigma must be positive, got {0}")]
    InvalidSigma(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("scores file {path}: {message}")]
    File { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, ScoringError>;

/// Per-frame anomaly scores of one tracked object (higher = more anomalous).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectScoreSeries {
    pub track_id: u32,
    pub frames: Vec<u32>,
    pub scores: Vec<f64>,
    pub bboxes: Vec<BBox>,
}

impl ObjectScoreSeries {
    pub fn new(track_id: u32, frames: Vec<u32>, scores: Vec<f64>, bboxes: Vec<BBox>) -> Result<Self> {
        if frames.len() != scores.len() || frames.len() != bboxes.len() {
            return Err(ScoringError::LengthMismatch(format!(
                "track {track_id}: {} frames, {} scores, {} boxes",
                frames.len(),
                scores.len(),
                bboxes.len()
            )));
        }
        Ok(ObjectScoreSeries {
            track_id,
            frames,
            scores,
            bboxes,
        })
    }
}

/// A video's frame scores before and after smoothing, plus the object
/// detections they were built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTimeline {
    pub raw: Vec<f64>,
    pub smoothed: Vec<f64>,
    pub sigma: f64,
    pub objects: Vec<ObjectScoreSeries>,
}

/// Scores file contents, keyed by video id.
pub type ScoresFile = BTreeMap<String, ScoreTimeline>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    #[default]
    PerVideoMinmax,
    GlobalMinmax,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoringConfig {
    /// Gaussian standard deviation in frames.
    pub sigma: f64,
    pub normalization: Normalization,
    /// Also smooth each object's series along its track before evaluation.
    pub smooth_objects: bool,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            sigma: 5.0,
            normalization: Normalization::PerVideoMinmax,
            smooth_objects: true,
        }
    }
}

/// Score of every contour of a track from its cluster labels, the C-RNN and
/// per-contour novelty proximities: `1 − P(label_i | labels_<i) · proximity_i`.
/// Prefixes too short for the C-RNN (including the first contour) use a
/// transition factor of 1.
pub fn crnn_track_score(labels: &[usize], crnn: &Crnn, proximity: &[f64]) -> Result<Vec<f64>> {
    if labels.len() < 2 {
        return Err(ScoringError::TrackTooShort {
            needed: 2,
            got: labels.len(),
        });
    }
    if proximity.len() != labels.len() {
        return Err(ScoringError::LengthMismatch(format!(
            "{} labels vs {} proximities",
            labels.len(),
            proximity.len()
        )));
    }
    let dists = crnn.transition_distributions(labels)?;
    Ok(transition_scores(labels, &dists, proximity))
}

/// `1 − p·proximity` with `p = dist[label]`, or `p = 1` where no distribution exists.
pub fn transition_scores(labels: &[usize], dists: &[Option<Vec<f64>>], proximity: &[f64]) -> Vec<f64> {
    labels
        .iter()
        .zip(dists)
        .zip(proximity)
        .map(|((&l, d), &q)| {
            let p = d.as_ref().map_or(1.0, |d| d[l]);
            1.0 - p * q
        })
        .collect()
}

/// Frame score = max over objects present in the frame; empty frames get 0.
pub fn frame_aggregate(objects: &[ObjectScoreSeries], frame_count: usize) -> Vec<f64> {
    let mut out = vec![f64::NEG_INFINITY; frame_count];
    for o in objects {
        for (&f, &s) in o.frames.iter().zip(&o.scores) {
            if let Some(v) = out.get_mut(f as usize) {
                *v = v.max(s);
            }
        }
    }
    out.iter_mut().filter(|v| v.is_infinite()).for_each(|v| *v = 0.0);
    out
}

/// Normalised Gaussian taps for offsets `−⌈4σ⌉..=⌈4σ⌉`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (4.0 * sigma).ceil() as i64;
    let w: Vec<f64> = (-r..=r)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Index into `0..n` after mirror padding (edge sample repeated: `c b a | a b c`).
fn reflect(i: i64, n: i64) -> usize {
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// 1-D convolution with the truncated, normalised Gaussian and mirror padding.
pub fn gaussian_smooth(raw: &[f64], sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) {
        return Err(ScoringError::InvalidSigma(sigma));
    }
    if raw.is_empty() {
        return Ok(Vec::new());
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as i64;
    let n = raw.len() as i64;
    Ok((0..n)
        .map(|i| {
            k.iter()
                .enumerate()
                .map(|(j, w)| w * raw[reflect(i + j as i64 - r, n)])
                .sum()
        })
        .collect())
}

fn minmax(v: &mut [f64], lo: f64, hi: f64) {
    let span = hi - lo;
    for x in v.iter_mut() {
        // a flat signal carries no ranking information
        *x = if span > 0.0 { (*x - lo) / span } else { 0.0 };
    }
}

fn range<'a>(vals: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Min-max normalisation of the raw, smoothed and object scores. Each of the
/// three is scaled on its own, per video or over all videos. A constant
/// range maps to all zeros.
pub fn normalize_scores(timelines: &mut ScoresFile, mode: Normalization) {
    match mode {
        Normalization::None => {}
        Normalization::PerVideoMinmax => {
            for t in timelines.values_mut() {
                let (lo, hi) = range(t.raw.iter());
                minmax(&mut t.raw, lo, hi);
                let (lo, hi) = range(t.smoothed.iter());
                minmax(&mut t.smoothed, lo, hi);
                let (lo, hi) = range(t.objects.iter().flat_map(|o| o.scores.iter()));
                for o in &mut t.objects {
                    minmax(&mut o.scores, lo, hi);
                }
            }
        }
        Normalization::GlobalMinmax => {
            let (rl, rh) = range(timelines.values().flat_map(|t| t.raw.iter()));
            let (sl, sh) = range(timelines.values().flat_map(|t| t.smoothed.iter()));
            let (ol, oh) = range(
                timelines
                    .values()
                    .flat_map(|t| t.objects.iter().flat_map(|o| o.scores.iter())),
            );
            for t in timelines.values_mut() {
                minmax(&mut t.raw, rl, rh);
                minmax(&mut t.smoothed, sl, sh);
                for o in &mut t.objects {
                    minmax(&mut o.scores, ol, oh);
                }
            }
        }
    }
}

/// Builds a video's timeline from raw object series: optional per-track
/// smoothing of the object scores, max aggregation, then frame smoothing.
pub fn build_timeline(
    mut objects: Vec<ObjectScoreSeries>,
    frame_count: usize,
    cfg: &ScoringConfig,
) -> Result<ScoreTimeline> {
    let raw = frame_aggregate(&objects, frame_count);
    let smoothed = gaussian_smooth(&raw, cfg.sigma)?;
    if cfg.smooth_objects {
        for o in &mut objects {
            o.scores = gaussian_smooth(&o.scores, cfg.sigma)?;
        }
    }
    objects.sort_by_key(|o| o.track_id);
    Ok(ScoreTimeline {
        raw,
        smoothed,
        sigma: cfg.sigma,
        objects,
    })
}

pub fn save_scores(path: &Path, scores: &ScoresFile) -> Result<()> {
    let err = |m: String| ScoringError::File {
        path: path.display().to_string(),
        message: m,
    };
    let text = serde_json::to_string_pretty(scores).map_err(|e| err(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| err(e.to_string()))
}

pub fn load_scores(path: &Path) -> Result<ScoresFile> {
    let err = |m: String| ScoringError::File {
        path: path.display().to_string(),
        message: m,
    };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| err(e.to_string()))
}
