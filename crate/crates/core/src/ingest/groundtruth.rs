use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{decode_rle, BBox, IngestError, Location};

/// An annotated anomalous region: a box, or an RLE mask with its raster size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Region {
    Bbox { bbox: BBox },
    Rle { rle: String, size: [u32; 2] },
}

impl Region {
    /// Pixel IoU between this region and a detection box.
    pub fn iou(&self, det: &BBox) -> f64 {
        match self {
            Region::Bbox { bbox } => bbox.iou(det),
            Region::Rle { rle, size } => {
                let Ok(mask) = decode_rle(rle, size[0] as usize, size[1] as usize) else {
                    return 0.0;
                };
                let area = mask.count() as u64;
                let mut inter = 0u64;
                if let Some(mb) = mask.bbox() {
                    let x0 = mb.x.max(det.x);
                    let y0 = mb.y.max(det.y);
                    let x1 = (mb.x + mb.w).min(det.x + det.w);
                    let y1 = (mb.y + mb.h).min(det.y + det.h);
                    for y in y0..y1 {
                        for x in x0..x1 {
                            if mask.get(x as usize, y as usize) {
                                inter += 1;
                            }
                        }
                    }
                }
                let union = area + det.area() - inter;
                if union == 0 {
                    0.0
                } else {
                    inter as f64 / union as f64
                }
            }
        }
    }
}

/// One anomalous track: its per-frame regions, in frame order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtTrack {
    pub video_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub track_id: Option<u32>,
    pub frames: Vec<u32>,
    pub regions: Vec<Region>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub frame_labels: BTreeMap<String, Vec<u8>>,
    #[serde(default)]
    pub regions: BTreeMap<String, BTreeMap<u32, Vec<Region>>>,
    #[serde(default)]
    pub tracks: Vec<GtTrack>,
}

impl GroundTruth {
    pub fn validate(&self) -> Result<(), IngestError> {
        for (video, labels) in &self.frame_labels {
            if let Some(bad) = labels.iter().position(|&l| l > 1) {
                return Err(IngestError::invalid(
                    Location {
                        video: video.clone(),
                        frame: Some(bad as u32),
                        track: None,
                    },
                    "frame label must be 0 or 1",
                ));
            }
        }
        for (video, frames) in &self.regions {
            let labels = self.frame_labels.get(video);
            for (&frame, regions) in frames {
                let labelled = labels.and_then(|l| l.get(frame as usize)) == Some(&1);
                if !regions.is_empty() && !labelled {
                    return Err(IngestError::invalid(
                        Location {
                            video: video.clone(),
                            frame: Some(frame),
                            track: None,
                        },
                        "frame with ground-truth regions is not labelled anomalous",
                    ));
                }
            }
        }
        for t in &self.tracks {
            if t.frames.len() != t.regions.len() {
                return Err(IngestError::invalid(
                    Location {
                        video: t.video_id.clone(),
                        frame: None,
                        track: t.track_id,
                    },
                    "track frames and regions differ in length",
                ));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, IngestError> {
        let gt: GroundTruth =
            serde_json::from_str(text).map_err(|e| IngestError::Parse(e.to_string()))?;
        gt.validate()?;
        Ok(gt)
    }
}

pub fn load_ground_truth(path: impl AsRef<Path>) -> Result<GroundTruth, IngestError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    GroundTruth::from_json(&text)
}

pub fn save_ground_truth(path: impl AsRef<Path>, gt: &GroundTruth) -> Result<(), IngestError> {
    let path = path.as_ref();
    let text = serde_json::to_string(gt).expect("ground truth serializes");
    fs::write(path, text).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}
