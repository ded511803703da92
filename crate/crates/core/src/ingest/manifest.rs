use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{decode_rle, BBox, IngestError, Location, Mask};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MaskManifest {
    pub videos: Vec<VideoEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoEntry {
    pub video_id: String,
    pub width: u32,
    pub height: u32,
    /// Total frame count. Zero on input means "one past the last listed
    /// frame"; it is filled in during validation.
    #[serde(default)]
    pub frame_count: u32,
    pub frames: Vec<FrameEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub frame_index: u32,
    pub objects: Vec<ObjectMask>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectMask {
    pub track_id: u32,
    pub class_id: u32,
    pub bbox: BBox,
    pub rle: String,
}

impl ObjectMask {
    pub fn decode(&self, video: &VideoEntry) -> Result<Mask, IngestError> {
        decode_rle(&self.rle, video.width as usize, video.height as usize).map_err(|e| {
            IngestError::invalid(
                Location {
                    video: video.video_id.clone(),
                    frame: None,
                    track: Some(self.track_id),
                },
                e.to_string(),
            )
        })
    }
}

impl MaskManifest {
    pub fn from_json(text: &str) -> Result<Self, IngestError> {
        let mut m: MaskManifest =
            serde_json::from_str(text).map_err(|e| IngestError::Parse(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }

    /// Checks every invariant, filling in implicit frame counts.
    pub fn validate(&mut self) -> Result<(), IngestError> {
        let mut seen_videos = HashSet::new();
        for video in &mut self.videos {
            let loc = |frame: Option<u32>, track: Option<u32>| Location {
                video: video.video_id.clone(),
                frame,
                track,
            };
            if !seen_videos.insert(video.video_id.clone()) {
                return Err(IngestError::invalid(loc(None, None), "duplicate video_id"));
            }
            if video.width == 0 || video.height == 0 {
                return Err(IngestError::invalid(loc(None, None), "zero resolution"));
            }
            if video.frame_count == 0 {
                video.frame_count = video.frames.last().map_or(0, |f| f.frame_index + 1);
                if video.frame_count == 0 {
                    return Err(IngestError::invalid(
                        loc(None, None),
                        "frame_count must be positive",
                    ));
                }
            }
            let mut prev: Option<u32> = None;
            for frame in &video.frames {
                let fi = frame.frame_index;
                if prev.is_some_and(|p| fi <= p) {
                    return Err(IngestError::invalid(
                        loc(Some(fi), None),
                        "frame_index not strictly increasing",
                    ));
                }
                prev = Some(fi);
                if fi >= video.frame_count {
                    return Err(IngestError::invalid(
                        loc(Some(fi), None),
                        format!("frame_index >= frame_count {}", video.frame_count),
                    ));
                }
                let mut tracks = HashSet::new();
                for obj in &frame.objects {
                    let at = loc(Some(fi), Some(obj.track_id));
                    if !tracks.insert(obj.track_id) {
                        return Err(IngestError::invalid(at, "duplicate track_id in frame"));
                    }
                    let mask = decode_rle(&obj.rle, video.width as usize, video.height as usize)
                        .map_err(|e| IngestError::invalid(at.clone(), e.to_string()))?;
                    match mask.bbox() {
                        None => return Err(IngestError::invalid(at, "empty mask")),
                        Some(b) if b != obj.bbox => {
                            return Err(IngestError::invalid(
                                at,
                                format!("bbox {:?} does not tightly bound mask {:?}", obj.bbox, b),
                            ))
                        }
                        Some(_) => {}
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<MaskManifest, IngestError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    MaskManifest::from_json(&text)
}

pub fn save_manifest(path: impl AsRef<Path>, m: &MaskManifest) -> Result<(), IngestError> {
    let path = path.as_ref();
    fs::write(path, m.to_json()).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}
