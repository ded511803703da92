use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{boundary_to_contour, normalize_video, trace_contour, validate_boundary, Contour, Rejection};
use crate::ingest::{IngestError, VideoEntry};

/// Tracks with this many contours or fewer are discarded.
pub const MIN_TRACK_LEN: usize = 6;

/// Time-ordered contours of one object identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub video_id: String,
    pub track_id: u32,
    pub class_id: u32,
    pub contours: Vec<Contour>,
    /// Number of missing frames between the first and last contour.
    pub gaps: u32,
}

impl TrackRecord {
    pub fn len(&self) -> usize {
        self.contours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contours.is_empty()
    }

    pub fn frame_indices(&self) -> Vec<u32> {
        self.contours.iter().map(|c| c.frame_index).collect()
    }
}

/// Groups one video's contours by track id, orders them by frame and drops
/// tracks shorter than [`MIN_TRACK_LEN`].
pub fn assemble_tracks(video_id: &str, contours: Vec<Contour>) -> Vec<TrackRecord> {
    let mut by_track: BTreeMap<u32, Vec<Contour>> = BTreeMap::new();
    for c in contours {
        by_track.entry(c.track_id).or_default().push(c);
    }
    by_track
        .into_iter()
        .filter(|(_, cs)| cs.len() >= MIN_TRACK_LEN)
        .map(|(track_id, mut cs)| {
            cs.sort_by_key(|c| c.frame_index);
            let span = cs.last().map_or(0, |c| c.frame_index) - cs[0].frame_index + 1;
            TrackRecord {
                video_id: video_id.to_string(),
                track_id,
                class_id: cs[0].class_id,
                gaps: span - cs.len() as u32,
                contours: cs,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractStats {
    pub objects: usize,
    pub open_contours: usize,
    pub too_few_points: usize,
    pub degenerate: usize,
    pub contours_kept: usize,
    pub tracks_kept: usize,
    pub tracks_dropped: usize,
}

/// Full per-video extraction: trace, validate, resample to `n` points,
/// convert to polar, normalise per class, assemble tracks.
pub fn extract_video(
    video: &VideoEntry,
    n: usize,
) -> Result<(Vec<TrackRecord>, ExtractStats), IngestError> {
    let mut stats = ExtractStats::default();
    let mut contours = Vec::new();
    for frame in &video.frames {
        for obj in &frame.objects {
            stats.objects += 1;
            let full = obj.decode(video)?;
            let crop = full.crop(&obj.bbox);
            let Ok(local) = trace_contour(&crop) else {
                stats.degenerate += 1;
                continue;
            };
            let boundary = local.translated(obj.bbox.x as i64, obj.bbox.y as i64);
            match validate_boundary(&boundary, n) {
                Err(Rejection::OpenContour) => {
                    stats.open_contours += 1;
                    continue;
                }
                Err(Rejection::TooFewPoints) => {
                    stats.too_few_points += 1;
                    continue;
                }
                Ok(()) => {}
            }
            let Ok(mut c) = boundary_to_contour(&boundary, n) else {
                stats.degenerate += 1;
                continue;
            };
            c.track_id = obj.track_id;
            c.class_id = obj.class_id;
            c.frame_index = frame.frame_index;
            c.bbox = Some(obj.bbox);
            contours.push(c);
        }
    }
    if !contours.is_empty() {
        normalize_video(&mut contours);
    }
    let n_tracks_before = {
        let mut ids: Vec<u32> = contours.iter().map(|c| c.track_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    };
    let tracks = assemble_tracks(&video.video_id, contours);
    stats.tracks_kept = tracks.len();
    stats.tracks_dropped = n_tracks_before - tracks.len();
    stats.contours_kept = tracks.iter().map(|t| t.len()).sum();
    Ok((tracks, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::to_polar;
    use crate::ingest::{encode_rle, FrameEntry, Mask, ObjectMask};

    fn contour(track: u32, frame: u32) -> Contour {
        let mut c = to_polar(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]).unwrap();
        c.track_id = track;
        c.frame_index = frame;
        c
    }

    #[test]
    fn five_dropped_six_kept() {
        let mut cs: Vec<Contour> = (0..5).map(|f| contour(1, f)).collect();
        cs.extend((0..6).map(|f| contour(2, f)));
        let tracks = assemble_tracks("v", cs);
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].track_id, 2);
        assert_eq!(tracks[0].len(), 6);
    }

    #[test]
    fn shuffled_frames_are_sorted_and_gaps_recorded() {
        let cs: Vec<Contour> = [9, 3, 0, 7, 1, 4, 2].iter().map(|&f| contour(0, f)).collect();
        let t = &assemble_tracks("v", cs)[0];
        assert_eq!(t.frame_indices(), vec![0, 1, 2, 3, 4, 7, 9]);
        assert_eq!(t.gaps, 3);
    }

    fn disk_video(offset: (u32, u32), radius: f64) -> VideoEntry {
        let (w, h) = (200usize, 200usize);
        let frames = (0..6)
            .map(|f| {
                let m = Mask::from_fn(w, h, |x, y| {
                    let dx = x as f64 - (60.0 + offset.0 as f64 + f as f64);
                    let dy = y as f64 - (70.0 + offset.1 as f64);
                    dx * dx + dy * dy <= radius * radius
                });
                FrameEntry {
                    frame_index: f,
                    objects: vec![ObjectMask {
                        track_id: 3,
                        class_id: 0,
                        bbox: m.bbox().unwrap(),
                        rle: encode_rle(&m),
                    }],
                }
            })
            .collect();
        VideoEntry {
            video_id: "d".into(),
            width: w as u32,
            height: h as u32,
            frame_count: 6,
            frames,
        }
    }

    #[test]
    fn extraction_is_translation_invariant() {
        let (a, sa) = extract_video(&disk_video((0, 0), 55.0), 256).unwrap();
        let (b, _) = extract_video(&disk_video((17, 23), 55.0), 256).unwrap();
        assert_eq!(sa.tracks_kept, 1);
        for (ca, cb) in a[0].contours.iter().zip(&b[0].contours) {
            assert_eq!(ca.r, cb.r);
            assert_eq!(ca.theta, cb.theta);
        }
    }

    #[test]
    fn small_objects_rejected_for_radii() {
        let (tracks, stats) = extract_video(&disk_video((0, 0), 12.0), 256).unwrap();
        assert!(tracks.is_empty());
        assert_eq!(stats.too_few_points, 6);
        let (tracks, _) = extract_video(&disk_video((0, 0), 30.0), 100).unwrap();
        assert_eq!(tracks.len(), 1);
    }
}
