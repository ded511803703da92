//! The individual pipeline stages as plain functions over in-memory artifacts.

use std::collections::BTreeMap;

use super::artifacts::{DescriptorIndex, DescriptorKind, DescriptorSet, ExtractOutput, TrackEntry, VideoInfo};
use super::{ModelsConfig, PipelineError};
use crate::descriptors::{radii_descriptor, shape_contexts, DescriptorMatrix, SC_LEN};
use crate::geometry::{extract_video, ExtractStats};
use crate::ingest::{BBox, MaskManifest};
use crate::models::{Crnn, Lae, Model, ModelKind, Rrnn, Tae, TrainReport, Vae};
use crate::par;
use crate::scoring::{
    build_timeline, crnn_track_score, normalize_scores, ObjectScoreSeries, ScoresFile, ScoringConfig,
};
use crate::shapecluster::{subsample_and_label, ClusterConfig, ClusterModel, LabelingReport};

fn add_stats(a: &mut ExtractStats, b: &ExtractStats) {
    a.objects += b.objects;
    a.open_contours += b.open_contours;
    a.too_few_points += b.too_few_points;
    a.degenerate += b.degenerate;
    a.contours_kept += b.contours_kept;
    a.tracks_kept += b.tracks_kept;
    a.tracks_dropped += b.tracks_dropped;
}

/// Traces every object mask into `points`-point contours and groups them into tracks.
pub fn extract(manifest: &MaskManifest, points: usize) -> Result<ExtractOutput, PipelineError> {
    let per_video = par::try_map(&manifest.videos, |v| extract_video(v, points))
        .map_err(|e| PipelineError::stage("extract", e))?;
    let mut out = ExtractOutput {
        points,
        videos: manifest
            .videos
            .iter()
            .map(|v| VideoInfo {
                video_id: v.video_id.clone(),
                frame_count: v.frame_count,
            })
            .collect(),
        tracks: Vec::new(),
        stats: ExtractStats::default(),
    };
    for (tracks, stats) in per_video {
        add_stats(&mut out.stats, &stats);
        out.tracks.extend(tracks);
    }
    Ok(out)
}

/// One descriptor row per contour, in track order.
pub fn describe(ex: &ExtractOutput, kind: DescriptorKind) -> Result<DescriptorSet, PipelineError> {
    let err = |e| PipelineError::stage("describe", e);
    let per_track: Vec<Vec<f32>> = match kind {
        DescriptorKind::Radii => par::try_map(&ex.tracks, |t| {
            t.contours
                .iter()
                .map(|c| radii_descriptor(c).map(|d| d.0))
                .collect::<Result<Vec<_>, _>>()
                .map(|rows| rows.iter().flatten().map(|&v| v as f32).collect())
        })
        .map_err(err)?,
        DescriptorKind::Sc => ex
            .tracks
            .iter()
            .map(|t| {
                shape_contexts(&t.contours)
                    .map(|ds| ds.iter().flat_map(|d| d.counts().iter().map(|&c| c as f32)).collect())
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?,
    };
    let cols = match kind {
        DescriptorKind::Radii => ex.points,
        DescriptorKind::Sc => SC_LEN,
    };
    let mut tracks = Vec::with_capacity(ex.tracks.len());
    let mut start = 0;
    for t in &ex.tracks {
        tracks.push(TrackEntry {
            video_id: t.video_id.clone(),
            track_id: t.track_id,
            frames: t.frame_indices(),
            bboxes: t.contours.iter().map(|c| c.bbox.unwrap_or(BBox::new(0, 0, 0, 0))).collect(),
            start,
        });
        start += t.len();
    }
    Ok(DescriptorSet {
        index: DescriptorIndex {
            kind,
            videos: ex.videos.clone(),
            tracks,
        },
        matrix: DescriptorMatrix {
            rows: start,
            cols,
            data: per_track.into_iter().flatten().collect(),
        },
    })
}

fn expect_kind(set: &DescriptorSet, kind: DescriptorKind, stage: &str) -> Result<(), PipelineError> {
    if set.index.kind != kind {
        return Err(PipelineError::Invalid(format!(
            "{stage} needs {kind:?} descriptors, got {:?}",
            set.index.kind
        )));
    }
    Ok(())
}

/// Self-labels the Shape Context rows of the training split.
pub fn cluster(
    set: &DescriptorSet,
    cfg: &ClusterConfig,
    seed: u64,
) -> Result<(Vec<usize>, ClusterModel, LabelingReport), PipelineError> {
    expect_kind(set, DescriptorKind::Sc, "cluster")?;
    subsample_and_label(&set.all_rows(), SC_LEN, cfg, seed).map_err(|e| PipelineError::stage("cluster", e))
}

/// Splits per-row labels back into per-track sequences.
pub fn label_sequences(set: &DescriptorSet, labels: &[usize]) -> Vec<Vec<usize>> {
    set.index
        .tracks
        .iter()
        .map(|t| labels[t.start..t.start + t.len()].to_vec())
        .collect()
}

/// Trains one model. The classification RNN learns from `labels` (one per
/// Shape Context row, `n_clusters` classes); the others read radii rows.
pub fn train(
    kind: ModelKind,
    set: &DescriptorSet,
    labels: Option<(&[usize], usize)>,
    cfg: &ModelsConfig,
    seed: u64,
) -> Result<(Model, TrainReport), PipelineError> {
    let stage = format!("train:{kind}");
    let err = |e| PipelineError::stage(&stage, e);
    if kind == ModelKind::Crnn {
        expect_kind(set, DescriptorKind::Sc, &stage)?;
        let (labels, k) = labels.ok_or_else(|| PipelineError::Invalid("crnn training needs cluster labels".into()))?;
        if labels.len() != set.matrix.rows {
            return Err(PipelineError::Invalid(format!(
                "{} labels for {} descriptor rows",
                labels.len(),
                set.matrix.rows
            )));
        }
        let seqs = label_sequences(set, labels);
        let (m, r) = Crnn::train(&seqs, k, cfg.crnn.clone(), seed).map_err(err)?;
        return Ok((Model::Crnn(m), r));
    }
    expect_kind(set, DescriptorKind::Radii, &stage)?;
    let images: Vec<_> = set.index.tracks.iter().map(|t| set.track_image(t)).collect();
    Ok(match kind {
        ModelKind::Vae => {
            let (m, r) = Vae::train(&images, cfg.vae.clone(), seed).map_err(err)?;
            (Model::Vae(m), r)
        }
        ModelKind::Lae => {
            let (m, r) = Lae::train(&images, cfg.lae.clone(), seed).map_err(err)?;
            (Model::Lae(m), r)
        }
        ModelKind::Tae => {
            let (m, r) = Tae::train(&images, cfg.tae.clone(), seed).map_err(err)?;
            (Model::Tae(m), r)
        }
        ModelKind::Rrnn => {
            let (m, r) = Rrnn::train(&images, cfg.rrnn.clone(), seed).map_err(err)?;
            (Model::Rrnn(m), r)
        }
        ModelKind::Crnn => unreachable!(),
    })
}

/// Scores every test track with `model` and turns the object series into
/// per-video timelines.
pub fn score(
    model: &Model,
    set: &DescriptorSet,
    cluster: Option<&ClusterModel>,
    cfg: &ScoringConfig,
) -> Result<ScoresFile, PipelineError> {
    let stage = format!("score:{}", model.kind());
    let err = |e: Box<dyn std::error::Error + Send + Sync>| PipelineError::Stage {
        stage: stage.clone(),
        source: e,
    };
    let wanted = if model.kind() == ModelKind::Crnn {
        DescriptorKind::Sc
    } else {
        DescriptorKind::Radii
    };
    expect_kind(set, wanted, &stage)?;
    if let Model::Crnn(_) = model {
        if cluster.is_none() {
            return Err(PipelineError::Invalid("crnn scoring needs the cluster model".into()));
        }
    }
    let series = par::try_map(&set.index.tracks, |t| -> Result<ObjectScoreSeries, Box<dyn std::error::Error + Send + Sync>> {
        let scores = match model {
            Model::Vae(m) => m.score_track(&set.track_image(t))?,
            Model::Lae(m) => m.score_track(&set.track_image(t))?,
            Model::Tae(m) => m.score_track(&set.track_image(t))?,
            Model::Rrnn(m) => m.score_track(&set.track_image(t))?,
            Model::Crnn(m) => {
                let c = cluster.expect("checked above");
                let rows = set.track_rows(t);
                let labels = c.assign(&rows)?;
                let prox = c.proximity(&rows)?;
                crnn_track_score(&labels, m, &prox)?
            }
        };
        Ok(ObjectScoreSeries::new(t.track_id, t.frames.clone(), scores, t.bboxes.clone())?)
    })
    .map_err(err)?;

    let mut by_video: BTreeMap<&str, Vec<ObjectScoreSeries>> = BTreeMap::new();
    for (t, s) in set.index.tracks.iter().zip(series) {
        by_video.entry(t.video_id.as_str()).or_default().push(s);
    }
    let mut out = ScoresFile::new();
    for v in &set.index.videos {
        let objects = by_video.remove(v.video_id.as_str()).unwrap_or_default();
        let timeline = build_timeline(objects, v.frame_count as usize, cfg).map_err(|e| err(e.into()))?;
        out.insert(v.video_id.clone(), timeline);
    }
    normalize_scores(&mut out, cfg.normalization);
    Ok(out)
}
