//! Pipeline input contract: per-frame object masks, ground truth, and a
//! synthetic desk-scale dataset generator.

mod groundtruth;
mod manifest;
mod rle;
mod synth;

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use groundtruth::{load_ground_truth, save_ground_truth, GroundTruth, GtTrack, Region};
pub use manifest::{
    load_manifest, save_manifest, FrameEntry, MaskManifest, ObjectMask, VideoEntry,
};
pub use rle::{decode_rle, encode_rle, Mask, RleError};
pub use synth::{generate_synthetic, AnomalyKind, ShapeFamily, SynthConfig, SynthDataset};

/// Where in a manifest a validation failure happened.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub video: String,
    pub frame: Option<u32>,
    pub track: Option<u32>,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "video {:?}", self.video)?;
        if let Some(frame) = self.frame {
            write!(f, ", frame {frame}")?;
        }
        if let Some(track) = self.track {
            write!(f, ", track {track}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error at {at}: {reason}")]
    Validation { at: Location, reason: String },
    #[error("invalid synthetic config: {0}")]
    Config(String),
}

impl IngestError {
    pub(crate) fn invalid(at: Location, reason: impl Into<String>) -> Self {
        IngestError::Validation {
            at,
            reason: reason.into(),
        }
    }
}

/// Axis-aligned pixel box `(x, y, w, h)`; serialized as `[x, y, w, h]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[u32; 4]", into = "[u32; 4]")]
pub struct BBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BBox {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        BBox { x, y, w, h }
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn intersection_area(&self, other: &BBox) -> u64 {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = (self.x + self.w).min(other.x + other.w);
        let y1 = (self.y + self.h).min(other.y + other.h);
        if x1 <= x0 || y1 <= y0 {
            0
        } else {
            (x1 - x0) as u64 * (y1 - y0) as u64
        }
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && y >= self.y && x < self.x + self.w && y < self.y + self.h
    }
}

impl From<[u32; 4]> for BBox {
    fn from(v: [u32; 4]) -> Self {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [u32; 4] {
    fn from(b: BBox) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bbox_iou() {
        let a = BBox::new(0, 0, 10, 10);
        assert_eq!(a.iou(&a), 1.0);
        let b = BBox::new(5, 0, 10, 10);
        assert!((a.iou(&b) - 50.0 / 150.0).abs() < 1e-12);
        assert_eq!(a.iou(&BBox::new(20, 20, 3, 3)), 0.0);
    }

    #[test]
    fn bbox_json_is_array() {
        let s = serde_json::to_string(&BBox::new(1, 2, 3, 4)).unwrap();
        assert_eq!(s, "[1,2,3,4]");
    }
}
