//! Synthetic scenes of walking figures with injected anomalies.
//!
//! Each track is a stylised pedestrian (head, torso, backpack, swinging arms
//! and legs) walking left to right with a periodic gait. Test videos carry
//! one anomalous block each on a randomly chosen track.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize};

use super::{
    encode_rle, FrameEntry, GroundTruth, GtTrack, IngestError, Mask, MaskManifest, ObjectMask,
    Region, VideoEntry,
};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeFamily {
    EllipseWalker,
    PolygonWalker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnomalyKind {
    /// Arms raised and legs spread in a jittering, non-walking pose.
    Deformation,
    /// The figure is replaced by a wide wheeled shape never seen in training.
    NovelShape,
    /// The figure teleports across the scene and walks backwards, mirrored.
    MotionBreak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    /// Number of training videos.
    pub n_videos: usize,
    /// Number of test videos; defaults to `n_videos`.
    #[serde(default)]
    pub n_test_videos: Option<usize>,
    pub frames_per_video: usize,
    pub tracks_per_video: usize,
    pub anomaly_fraction: f64,
    pub shape_family: ShapeFamily,
    /// Anomaly kinds cycled over the test videos. Accepts a single kind.
    #[serde(alias = "anomaly_kind", deserialize_with = "one_or_many")]
    pub anomaly_kinds: Vec<AnomalyKind>,
    #[serde(default = "default_width")]
    pub width: u32,
    #[serde(default = "default_height")]
    pub height: u32,
}

fn default_width() -> u32 {
    320
}

fn default_height() -> u32 {
    256
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<AnomalyKind>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(AnomalyKind),
        Many(Vec<AnomalyKind>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(k) => vec![k],
        OneOrMany::Many(v) => v,
    })
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 7,
            n_videos: 20,
            n_test_videos: Some(8),
            frames_per_video: 48,
            tracks_per_video: 2,
            anomaly_fraction: 0.2,
            shape_family: ShapeFamily::EllipseWalker,
            anomaly_kinds: vec![
                AnomalyKind::Deformation,
                AnomalyKind::NovelShape,
                AnomalyKind::MotionBreak,
            ],
            width: default_width(),
            height: default_height(),
        }
    }
}

impl SynthConfig {
    pub fn n_test(&self) -> usize {
        self.n_test_videos.unwrap_or(self.n_videos)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |m: &str| Err(IngestError::Config(m.to_string()));
        if self.n_videos == 0 || self.frames_per_video == 0 || self.tracks_per_video == 0 {
            return bad("n_videos, frames_per_video and tracks_per_video must be positive");
        }
        if !(0.0..=1.0).contains(&self.anomaly_fraction) {
            return bad("anomaly_fraction must lie in [0, 1]");
        }
        if self.anomaly_kinds.is_empty() {
            return bad("at least one anomaly kind is required");
        }
        if self.width < 2 * X_MARGIN as u32 + 8 || self.height < 160 {
            return bad("frame too small for the synthetic figures (min 148x160)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub train: MaskManifest,
    pub test: MaskManifest,
    pub gt: GroundTruth,
}

/// Generates a train split (anomaly free) and a test split with ground truth.
/// Output is a pure function of `cfg`.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<SynthDataset, IngestError> {
    cfg.validate()?;
    let train_ids: Vec<usize> = (0..cfg.n_videos).collect();
    let test_ids: Vec<usize> = (0..cfg.n_test()).collect();
    let train: Vec<(VideoEntry, Option<Injected>)> =
        par::map(&train_ids, |&i| render_video(cfg, Split::Train, i));
    let test: Vec<(VideoEntry, Option<Injected>)> =
        par::map(&test_ids, |&i| render_video(cfg, Split::Test, i));

    let mut gt = GroundTruth::default();
    for (video, injected) in &test {
        let mut labels = vec![0u8; video.frame_count as usize];
        if let Some(inj) = injected {
            let mut regions = BTreeMap::new();
            let mut frames = Vec::new();
            let mut boxes = Vec::new();
            for (&f, bbox) in &inj.boxes {
                labels[f as usize] = 1;
                regions.insert(f, vec![Region::Bbox { bbox: *bbox }]);
                frames.push(f);
                boxes.push(Region::Bbox { bbox: *bbox });
            }
            gt.regions.insert(video.video_id.clone(), regions);
            gt.tracks.push(GtTrack {
                video_id: video.video_id.clone(),
                track_id: Some(inj.track_id),
                frames,
                regions: boxes,
            });
        }
        gt.frame_labels.insert(video.video_id.clone(), labels);
    }
    Ok(SynthDataset {
        train: MaskManifest {
            videos: train.into_iter().map(|(v, _)| v).collect(),
        },
        test: MaskManifest {
            videos: test.into_iter().map(|(v, _)| v).collect(),
        },
        gt,
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Split {
    Train,
    Test,
}

struct Injected {
    track_id: u32,
    boxes: BTreeMap<u32, super::BBox>,
}

const X_MARGIN: f64 = 70.0;

#[derive(Clone, Copy)]
enum Style {
    Walk,
    Spread,
    Cart,
}

struct Pose {
    hip: (f64, f64),
    scale: f64,
    phase: f64,
    dir: f64,
    style: Style,
}

fn render_video(cfg: &SynthConfig, split: Split, index: usize) -> (VideoEntry, Option<Injected>) {
    let stream = match split {
        Split::Train => index as u64,
        Split::Test => (1 << 32) + index as u64,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);

    let (w, h) = (cfg.width as f64, cfg.height as f64);
    let n_frames = cfg.frames_per_video;

    let block_len = (cfg.anomaly_fraction * n_frames as f64).round() as usize;
    let anomaly = (split == Split::Test && block_len > 0).then(|| {
        let kind = cfg.anomaly_kinds[index % cfg.anomaly_kinds.len()];
        let track = rng.random_range(0..cfg.tracks_per_video);
        let latest = n_frames - block_len;
        let start = rng.random_range(latest.min(8)..=latest);
        (kind, track, start..start + block_len)
    });

    let mut frames: Vec<FrameEntry> = (0..n_frames)
        .map(|f| FrameEntry {
            frame_index: f as u32,
            objects: Vec::new(),
        })
        .collect();
    let mut injected = None;

    for track in 0..cfg.tracks_per_video {
        let scale = rng.random_range(1.0..1.2);
        let period = rng.random_range(14.0..18.0);
        let speed = rng.random_range(0.8..1.3) * scale;
        let travel = speed * n_frames as f64;
        let x_hi = (w - X_MARGIN - travel).max(X_MARGIN + 1.0);
        let mut x = rng.random_range(X_MARGIN..x_hi);
        let y_lo = 70.0 * scale;
        let y_hi = (h - 58.0 * scale).max(y_lo + 1.0);
        let y0 = rng.random_range(y_lo..y_hi);
        let mut phase = rng.random_range(0.0..2.0 * PI);
        let omega = 2.0 * PI / period;

        let mine = anomaly
            .as_ref()
            .filter(|(_, t, _)| *t == track)
            .map(|(k, _, r)| (*k, r.clone()));
        let mut boxes = BTreeMap::new();

        for (f, frame) in frames.iter_mut().enumerate() {
            let active = mine.as_ref().filter(|(_, r)| r.contains(&f));
            let mut dir = 1.0;
            let mut style = Style::Walk;
            match active.map(|(k, _)| *k) {
                Some(AnomalyKind::Deformation) => style = Style::Spread,
                Some(AnomalyKind::NovelShape) => style = Style::Cart,
                Some(AnomalyKind::MotionBreak) => {
                    if mine.as_ref().is_some_and(|(_, r)| r.start == f) {
                        x = w - x;
                    }
                    dir = -1.0;
                }
                None => {}
            }
            x = x.clamp(X_MARGIN, w - X_MARGIN);
            let bob = 1.5 * scale * phase.sin().abs();
            let pose = Pose {
                hip: (x, y0 - bob),
                scale,
                phase,
                dir,
                style,
            };
            let mask = rasterize(&figure(cfg.shape_family, &pose), cfg.width, cfg.height);
            if let Some(bbox) = mask.bbox() {
                if active.is_some() {
                    boxes.insert(f as u32, bbox);
                }
                frame.objects.push(ObjectMask {
                    track_id: track as u32,
                    class_id: 0,
                    bbox,
                    rle: encode_rle(&mask),
                });
            }
            x += speed * dir;
            phase += omega * dir;
        }
        if mine.is_some() {
            injected = Some(Injected {
                track_id: track as u32,
                boxes,
            });
        }
    }

    let prefix = match split {
        Split::Train => "train",
        Split::Test => "test",
    };
    let video = VideoEntry {
        video_id: format!("{prefix}_{index:03}"),
        width: cfg.width,
        height: cfg.height,
        frame_count: n_frames as u32,
        frames,
    };
    (video, injected)
}

#[derive(Debug, Clone)]
enum Prim {
    Disk {
        c: (f64, f64),
        r: f64,
    },
    Ellipse {
        c: (f64, f64),
        a: f64,
        b: f64,
        angle: f64,
    },
    Capsule {
        p: (f64, f64),
        q: (f64, f64),
        r: f64,
    },
    Polygon(Vec<(f64, f64)>),
}

impl Prim {
    fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            Prim::Disk { c, r } => (x - c.0).powi(2) + (y - c.1).powi(2) <= r * r,
            Prim::Ellipse { c, a, b, angle } => {
                let (s, co) = angle.sin_cos();
                let (dx, dy) = (x - c.0, y - c.1);
                let u = co * dx + s * dy;
                let v = -s * dx + co * dy;
                (u / a).powi(2) + (v / b).powi(2) <= 1.0
            }
            Prim::Capsule { p, q, r } => {
                let (vx, vy) = (q.0 - p.0, q.1 - p.1);
                let len2 = vx * vx + vy * vy;
                let t = if len2 > 0.0 {
                    (((x - p.0) * vx + (y - p.1) * vy) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let (cx, cy) = (p.0 + t * vx, p.1 + t * vy);
                (x - cx).powi(2) + (y - cy).powi(2) <= r * r
            }
            Prim::Polygon(pts) => {
                let mut inside = false;
                let mut j = pts.len() - 1;
                for i in 0..pts.len() {
                    let (xi, yi) = pts[i];
                    let (xj, yj) = pts[j];
                    if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
                        inside = !inside;
                    }
                    j = i;
                }
                inside
            }
        }
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        match self {
            Prim::Disk { c, r } => (c.0 - r, c.1 - r, c.0 + r, c.1 + r),
            Prim::Ellipse { c, a, b, .. } => {
                let m = a.max(*b);
                (c.0 - m, c.1 - m, c.0 + m, c.1 + m)
            }
            Prim::Capsule { p, q, r } => (
                p.0.min(q.0) - r,
                p.1.min(q.1) - r,
                p.0.max(q.0) + r,
                p.1.max(q.1) + r,
            ),
            Prim::Polygon(pts) => pts.iter().fold(
                (f64::MAX, f64::MAX, f64::MIN, f64::MIN),
                |(x0, y0, x1, y1), &(x, y)| (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
            ),
        }
    }
}

fn thick_segment(p: (f64, f64), q: (f64, f64), r: f64) -> Prim {
    let (dx, dy) = (q.0 - p.0, q.1 - p.1);
    let len = (dx * dx + dy * dy).sqrt().max(1e-9);
    let (nx, ny) = (-dy / len * r, dx / len * r);
    Prim::Polygon(vec![
        (p.0 + nx, p.1 + ny),
        (q.0 + nx, q.1 + ny),
        (q.0 - nx, q.1 - ny),
        (p.0 - nx, p.1 - ny),
    ])
}

fn limb(family: ShapeFamily, p: (f64, f64), q: (f64, f64), r: f64) -> Prim {
    match family {
        ShapeFamily::EllipseWalker => Prim::Capsule { p, q, r },
        ShapeFamily::PolygonWalker => thick_segment(p, q, r),
    }
}

fn figure(family: ShapeFamily, pose: &Pose) -> Vec<Prim> {
    let s = pose.scale;
    let d = pose.dir;
    let (hx, hy) = pose.hip;
    let at = |dx: f64, dy: f64| (hx + d * dx * s, hy + dy * s);
    // limb endpoint from a joint, angle measured from straight down, positive forward
    let reach = |from: (f64, f64), len: f64, angle: f64| {
        (from.0 + d * len * s * angle.sin(), from.1 + len * s * angle.cos())
    };

    if let Style::Cart = pose.style {
        return vec![
            limb(family, at(-40.0, -20.0), at(40.0, -20.0), 16.0 * s),
            Prim::Disk {
                c: at(-24.0, 0.0),
                r: 11.0 * s,
            },
            Prim::Disk {
                c: at(24.0, 0.0),
                r: 11.0 * s,
            },
            limb(family, at(36.0, -20.0), at(44.0, -46.0), 3.5 * s),
        ];
    }

    let (leg_a, arm_a) = match pose.style {
        Style::Walk => (0.45 * pose.phase.sin(), 0.5 * pose.phase.sin()),
        _ => (0.7, 2.0 + 0.3 * (3.0 * pose.phase).sin()),
    };
    let hip = at(0.0, 0.0);
    let shoulder = at(2.0, -38.0);
    let mut prims = vec![
        limb(family, hip, reach(hip, 46.0, leg_a), 6.0 * s),
        limb(family, hip, reach(hip, 46.0, -leg_a), 6.0 * s),
        limb(family, shoulder, reach(shoulder, 32.0, -arm_a), 4.0 * s),
        limb(family, shoulder, reach(shoulder, 32.0, arm_a), 4.0 * s),
    ];
    match family {
        ShapeFamily::EllipseWalker => {
            prims.push(Prim::Ellipse {
                c: at(3.0, -22.0),
                a: 12.0 * s,
                b: 24.0 * s,
                angle: d * 0.12,
            });
            prims.push(Prim::Ellipse {
                c: at(-13.0, -26.0),
                a: 6.0 * s,
                b: 10.0 * s,
                angle: 0.0,
            });
            prims.push(Prim::Disk {
                c: at(5.0, -54.0),
                r: 10.0 * s,
            });
        }
        ShapeFamily::PolygonWalker => {
            prims.push(Prim::Polygon(vec![
                at(-10.0, -2.0),
                at(12.0, -4.0),
                at(16.0, -24.0),
                at(10.0, -46.0),
                at(-8.0, -46.0),
                at(-13.0, -24.0),
            ]));
            prims.push(Prim::Polygon(vec![
                at(-8.0, -16.0),
                at(-19.0, -18.0),
                at(-19.0, -36.0),
                at(-8.0, -38.0),
            ]));
            prims.push(Prim::Polygon(vec![
                at(-4.0, -44.0),
                at(14.0, -44.0),
                at(14.0, -64.0),
                at(-4.0, -64.0),
            ]));
        }
    }
    prims
}

fn rasterize(prims: &[Prim], width: u32, height: u32) -> Mask {
    let mut mask = Mask::new(width as usize, height as usize);
    for p in prims {
        let (x0, y0, x1, y1) = p.bounds();
        let xs = (x0.floor().max(0.0) as usize)..=(x1.ceil().min(width as f64 - 1.0) as usize);
        let ys = (y0.floor().max(0.0) as usize)..=(y1.ceil().min(height as f64 - 1.0) as usize);
        for y in ys {
            for x in xs.clone() {
                if !mask.get(x, y) && p.contains(x as f64 + 0.5, y as f64 + 0.5) {
                    mask.set(x, y, true);
                }
            }
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            n_videos: 2,
            n_test_videos: Some(3),
            frames_per_video: 20,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = SynthConfig { seed: 1, ..small() };
        assert_eq!(generate_synthetic(&cfg).unwrap(), generate_synthetic(&cfg).unwrap());
        let other = SynthConfig { seed: 2, ..small() };
        assert_ne!(
            generate_synthetic(&cfg).unwrap().train,
            generate_synthetic(&other).unwrap().train
        );
    }

    #[test]
    fn zero_fraction_has_no_anomalies() {
        let cfg = SynthConfig {
            anomaly_fraction: 0.0,
            ..small()
        };
        let ds = generate_synthetic(&cfg).unwrap();
        assert!(ds.gt.frame_labels.values().flatten().all(|&l| l == 0));
        assert!(ds.gt.tracks.is_empty());
    }

    #[test]
    fn anomalous_frame_count_follows_fraction() {
        // 5 test videos x 20 frames = 100 frames; one block of round(0.2*20) per video.
        let cfg = SynthConfig {
            n_test_videos: Some(5),
            ..small()
        };
        let ds = generate_synthetic(&cfg).unwrap();
        let total: usize = ds.gt.frame_labels.values().flatten().map(|&l| l as usize).sum();
        assert_eq!(total, 20);
    }

    #[test]
    fn outputs_validate_and_round_trip() {
        let ds = generate_synthetic(&small()).unwrap();
        for m in [&ds.train, &ds.test] {
            let back = MaskManifest::from_json(&m.to_json()).unwrap();
            assert_eq!(&back, m);
        }
        ds.gt.validate().unwrap();
        // train split is disjoint from any ground-truth region
        for v in &ds.train.videos {
            assert!(!ds.gt.regions.contains_key(&v.video_id));
            assert!(!ds.gt.frame_labels.contains_key(&v.video_id));
        }
    }

    #[test]
    fn single_kind_accepted_in_json() {
        let text = r#"{"seed":1,"n_videos":1,"frames_per_video":8,"tracks_per_video":1,
            "anomaly_fraction":0.5,"shape_family":"polygon-walker","anomaly_kind":"motion-break"}"#;
        let cfg: SynthConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.anomaly_kinds, vec![AnomalyKind::MotionBreak]);
        assert_eq!(cfg.n_test(), 1);
    }
}
