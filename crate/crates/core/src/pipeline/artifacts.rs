//! On-disk stage outputs.

use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::PipelineError;
use crate::descriptors::{read_matrix, write_matrix, DescriptorMatrix, TrackImage};
use crate::geometry::{ExtractStats, TrackRecord};
use crate::ingest::BBox;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoInfo {
    pub video_id: String,
    pub frame_count: u32,
}

/// Contour tracks of one manifest at one contour size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractOutput {
    pub points: usize,
    pub videos: Vec<VideoInfo>,
    pub tracks: Vec<TrackRecord>,
    pub stats: ExtractStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DescriptorKind {
    Radii,
    Sc,
}

impl std::str::FromStr for DescriptorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "radii" => Ok(DescriptorKind::Radii),
            "sc" => Ok(DescriptorKind::Sc),
            _ => Err(format!("unknown descriptor kind '{s}' (expected radii or sc)")),
        }
    }
}

/// Where one track's rows live in a descriptor matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackEntry {
    pub video_id: String,
    pub track_id: u32,
    pub frames: Vec<u32>,
    pub bboxes: Vec<BBox>,
    pub start: usize,
}

impl TrackEntry {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorIndex {
    pub kind: DescriptorKind,
    pub videos: Vec<VideoInfo>,
    pub tracks: Vec<TrackEntry>,
}

/// One row per contour plus the track index that groups them.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSet {
    pub index: DescriptorIndex,
    pub matrix: DescriptorMatrix,
}

/// Sidecar index path for a descriptor matrix path: `x.bin` → `x.index.json`.
pub fn index_path(matrix: &Path) -> PathBuf {
    matrix.with_extension("index.json")
}

impl DescriptorSet {
    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        write_matrix(path, &self.matrix).map_err(|e| PipelineError::io(path, e))?;
        write_json(&index_path(path), &self.index)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let matrix = read_matrix(path).map_err(|e| PipelineError::io(path, e))?;
        let index: DescriptorIndex = read_json(&index_path(path))?;
        let rows: usize = index.tracks.iter().map(TrackEntry::len).sum();
        if rows != matrix.rows {
            return Err(PipelineError::Invalid(format!(
                "{}: index covers {rows} rows, matrix has {}",
                path.display(),
                matrix.rows
            )));
        }
        Ok(DescriptorSet { index, matrix })
    }

    /// Rows of track `t`, widened to f64.
    pub fn track_rows(&self, t: &TrackEntry) -> Vec<f64> {
        let c = self.matrix.cols;
        self.matrix.data[t.start * c..(t.start + t.len()) * c]
            .iter()
            .map(|&v| v as f64)
            .collect()
    }

    pub fn track_image(&self, t: &TrackEntry) -> TrackImage {
        TrackImage {
            rows: t.len(),
            cols: self.matrix.cols,
            data: self.track_rows(t),
        }
    }

    pub fn all_rows(&self) -> Vec<f64> {
        self.matrix.data.iter().map(|&v| v as f64).collect()
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let text = serde_json::to_string(value).map_err(|e| PipelineError::io(path, e))?;
    std::fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Invalid(format!("{}: {e}", path.display())))
}
