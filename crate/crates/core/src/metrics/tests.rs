use super::*;
use crate::ingest::GtTrack;
use crate::scoring::ObjectScoreSeries;

fn b(x: u32, y: u32) -> BBox {
    BBox::new(x, y, 10, 10)
}

fn region(x: u32, y: u32) -> Region {
    Region::Bbox { bbox: b(x, y) }
}

/// One detection per object series entry: (track, frame, box, score).
fn scores_file(video: &str, frames: usize, dets: &[(u32, u32, BBox, f64)]) -> ScoresFile {
    let mut objects: BTreeMap<u32, ObjectScoreSeries> = BTreeMap::new();
    for &(track, f, bb, s) in dets {
        let o = objects.entry(track).or_insert_with(|| ObjectScoreSeries {
            track_id: track,
            frames: vec![],
            scores: vec![],
            bboxes: vec![],
        });
        o.frames.push(f);
        o.scores.push(s);
        o.bboxes.push(bb);
    }
    let raw = vec![0.0; frames];
    [(
        video.to_string(),
        ScoreTimeline {
            smoothed: raw.clone(),
            raw,
            sigma: 1.0,
            objects: objects.into_values().collect(),
        },
    )]
    .into()
}

/// Four frames; regions at frames 0 and 1 (same place) and frame 2 (elsewhere).
fn three_region_gt() -> GroundTruth {
    let mut regions = BTreeMap::new();
    regions.insert(0, vec![region(0, 0)]);
    regions.insert(1, vec![region(0, 0)]);
    regions.insert(2, vec![region(20, 20)]);
    GroundTruth {
        frame_labels: [("v".to_string(), vec![1, 1, 1, 0])].into(),
        regions: [("v".to_string(), regions)].into(),
        tracks: vec![GtTrack {
            video_id: "v".into(),
            track_id: Some(0),
            frames: vec![0, 1, 2],
            regions: vec![region(0, 0), region(0, 0), region(20, 20)],
        }],
    }
}

#[test]
fn rbdc_three_region_hand_enumeration() {
    // thresholds 0.9 → (0, 1/3), 0.8 → (1/4, 1/3), 0.7 → (1/2, 1/3),
    // 0.6 → (1/2, 2/3), then flat to fp 1: area 1/12 + 1/12 + 1/3 = 1/2
    let s = scores_file(
        "v",
        4,
        &[
            (1, 0, b(0, 0), 0.9),
            (1, 1, b(0, 0), 0.6),
            (2, 1, b(50, 50), 0.8),
            (3, 3, b(0, 0), 0.7),
        ],
    );
    let gt = three_region_gt();
    let cfg = MetricsConfig::default();
    assert!((rbdc(&s, &gt, &cfg, None).unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn rbdc_trivial_cases() {
    let gt = three_region_gt();
    let cfg = MetricsConfig::default();
    let perfect = scores_file(
        "v",
        4,
        &[(1, 0, b(0, 0), 0.9), (1, 1, b(0, 0), 0.8), (2, 2, b(20, 20), 0.7)],
    );
    assert_eq!(rbdc(&perfect, &gt, &cfg, None).unwrap(), 1.0);
    assert_eq!(tbdc(&perfect, &gt, &cfg, None).unwrap(), 1.0);
    let none = scores_file("v", 4, &[]);
    assert_eq!(rbdc(&none, &gt, &cfg, None).unwrap(), 0.0);
    assert_eq!(tbdc(&none, &gt, &cfg, None).unwrap(), 0.0);
    let mut empty = gt.clone();
    empty.regions.clear();
    empty.tracks.clear();
    assert!(matches!(rbdc(&none, &empty, &cfg, None), Err(MetricsError::NoGtRegions)));
    assert!(matches!(tbdc(&none, &empty, &cfg, None), Err(MetricsError::NoGtTracks)));
    assert!(matches!(
        rbdc(&ScoresFile::new(), &gt, &cfg, None),
        Err(MetricsError::MissingVideo(_))
    ));
}

/// Track A: 4 regions at (0,0), frames 0..3. Track B: 2 regions at (30,30), frames 0..1.
fn two_track_case() -> (ScoresFile, GroundTruth) {
    let a: Vec<Region> = (0..4).map(|_| region(0, 0)).collect();
    let bb: Vec<Region> = (0..2).map(|_| region(30, 30)).collect();
    let mut regions = BTreeMap::new();
    for f in 0..4u32 {
        let mut r = vec![region(0, 0)];
        if f < 2 {
            r.push(region(30, 30));
        }
        regions.insert(f, r);
    }
    let gt = GroundTruth {
        frame_labels: [("v".to_string(), vec![1, 1, 1, 1])].into(),
        regions: [("v".to_string(), regions)].into(),
        tracks: vec![
            GtTrack {
                video_id: "v".into(),
                track_id: Some(1),
                frames: vec![0, 1, 2, 3],
                regions: a,
            },
            GtTrack {
                video_id: "v".into(),
                track_id: Some(2),
                frames: vec![0, 1],
                regions: bb,
            },
        ],
    };
    let s = scores_file(
        "v",
        4,
        &[
            (1, 0, b(0, 0), 0.9),
            (1, 1, b(0, 0), 0.8),
            (2, 0, b(30, 30), 0.5),
            (2, 1, b(30, 30), 0.4),
            (3, 2, b(60, 60), 0.7),
        ],
    );
    (s, gt)
}

#[test]
fn tbdc_two_track_hand_enumeration() {
    let (s, gt) = two_track_case();
    // alpha 0.1: A at 0.9, B at 0.5; FP 0.7 → (0,1/2), (1/4,1/2), (1/4,1), flat
    let lo = MetricsConfig { alpha: 0.1, ..Default::default() };
    assert!((tbdc(&s, &gt, &lo, None).unwrap() - 0.875).abs() < 1e-9);
    // alpha 0.6: A needs 3 of 4 (has 2) → never; B needs 2 → 0.4
    let hi = MetricsConfig { alpha: 0.6, ..Default::default() };
    assert!((tbdc(&s, &gt, &hi, None).unwrap() - 0.375).abs() < 1e-9);
}

#[test]
fn detection_monotonicity() {
    let (s, gt) = two_track_case();
    let cfg = MetricsConfig::default();
    let base_r = rbdc(&s, &gt, &cfg, None).unwrap();
    let base_t = tbdc(&s, &gt, &cfg, None).unwrap();

    // a correct detection on a missed region
    let mut better = s.clone();
    let o = &mut better.get_mut("v").unwrap().objects[0];
    o.frames.push(2);
    o.bboxes.push(b(0, 0));
    o.scores.push(0.3);
    assert!(rbdc(&better, &gt, &cfg, None).unwrap() >= base_r);
    assert!(tbdc(&better, &gt, &cfg, None).unwrap() >= base_t);

    // a spurious detection at an existing score level
    let mut worse = s.clone();
    let o = &mut worse.get_mut("v").unwrap().objects[0];
    o.frames.push(3);
    o.bboxes.push(b(70, 70));
    o.scores.push(0.8);
    assert!(rbdc(&worse, &gt, &cfg, None).unwrap() <= base_r);
    assert!(tbdc(&worse, &gt, &cfg, None).unwrap() <= base_t);
}

#[test]
fn frame_mask_excludes_frames() {
    let gt = three_region_gt();
    let mut s = scores_file("v", 4, &[]);
    let t = s.get_mut("v").unwrap();
    // frame 3 (normal) scores high and would break perfect separation
    t.smoothed = vec![0.9, 0.8, 0.7, 0.95];
    let mut gt2 = gt.clone();
    gt2.frame_labels.insert("v".into(), vec![1, 1, 0, 0]);
    gt2.regions.get_mut("v").unwrap().remove(&2);
    assert_eq!(frame_auc(&s, &gt2, true, None).unwrap(), 0.5);
    let mask: FrameMask = [("v".to_string(), vec![true, true, true, false])].into();
    assert_eq!(frame_auc(&s, &gt2, true, Some(&mask)).unwrap(), 1.0);
    let short: FrameMask = [("v".to_string(), vec![true])].into();
    assert!(matches!(
        frame_auc(&s, &gt2, true, Some(&short)),
        Err(MetricsError::LengthMismatch(_))
    ));

    // masking the spurious-detection frame removes its false positive
    let cfg = MetricsConfig::default();
    let d = scores_file("v", 4, &[(1, 0, b(0, 0), 0.9), (2, 3, b(60, 60), 0.95)]);
    let all = rbdc(&d, &gt, &cfg, None).unwrap();
    let m = rbdc(&d, &gt, &cfg, Some(&mask)).unwrap();
    assert!(m > all);
}

#[test]
fn evaluate_reports_everything() {
    let (mut s, mut gt) = two_track_case();
    gt.frame_labels.insert("v".into(), vec![1, 1, 0, 0]);
    gt.regions.get_mut("v").unwrap().retain(|&f, _| f < 2);
    for t in &mut gt.tracks {
        let keep = t.frames.iter().filter(|&&f| f < 2).count();
        t.frames.truncate(keep);
        t.regions.truncate(keep);
    }
    s.get_mut("v").unwrap().smoothed = vec![0.8, 0.6, 0.1, 0.2];
    let r = evaluate(&s, &gt, &MetricsConfig::default(), None).unwrap();
    assert_eq!(r.auc, 1.0);
    assert_eq!(r.per_video_auc["v"], Some(1.0));
    for v in [r.auc, r.rbdc, r.tbdc] {
        assert!((0.0..=1.0).contains(&v));
    }
    let json = serde_json::to_value(&r).unwrap();
    for key in ["auc", "rbdc", "tbdc", "per_video_auc"] {
        assert!(json.get(key).is_some());
    }
}
