//! Staged, cached end-to-end runs: synth → extract → describe → cluster →
//! train → score → eval.

mod artifacts;
mod cache;
mod config;
mod stages;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{generate_synthetic, load_ground_truth, load_manifest, save_ground_truth, save_manifest, IngestError};
use crate::metrics::{evaluate, load_frame_mask, save_report, MetricsReport};
use crate::models::{Model, ModelKind};
use crate::scoring::{load_scores, save_scores};
use crate::shapecluster::{load_cluster_model, save_cluster_model, LabelingReport};

pub use artifacts::{
    index_path, read_json, write_json, DescriptorIndex, DescriptorKind, DescriptorSet, ExtractOutput, TrackEntry,
    VideoInfo,
};
pub use cache::{file_digest, stage_seed, StageCache};
pub use config::{ModelsConfig, PathsConfig, PipelineConfig};
pub use stages::{cluster, describe, extract, label_sequences, score, train};

type BoxError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: BoxError,
    },
}

impl PipelineError {
    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        PipelineError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    pub(crate) fn stage(stage: &str, e: impl Into<BoxError>) -> Self {
        PipelineError::Stage {
            stage: stage.to_string(),
            source: e.into(),
        }
    }

    /// Whether the failure is bad input or configuration rather than a
    /// runtime fault.
    pub fn is_validation(&self) -> bool {
        match self {
            PipelineError::Config(_) | PipelineError::Invalid(_) => true,
            PipelineError::Io { .. } => false,
            PipelineError::Stage { source, .. } => matches!(
                source.downcast_ref::<IngestError>(),
                Some(IngestError::Validation { .. } | IngestError::Parse(_) | IngestError::Config(_))
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRun {
    pub name: String,
    pub cache_hit: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub stages: Vec<StageRun>,
    /// Evaluation of each enabled model, by model name.
    pub metrics: BTreeMap<String, MetricsReport>,
    pub cluster: Option<LabelingReport>,
    pub workdir: PathBuf,
}

impl PipelineReport {
    pub fn all_cached(&self) -> bool {
        self.stages.iter().all(|s| s.cache_hit)
    }
}

struct Runner {
    cache: StageCache,
    stages: Vec<StageRun>,
}

impl Runner {
    /// Runs `body` unless the stage's recorded key is current.
    fn stage<P: Serialize>(
        &mut self,
        name: &str,
        params: &P,
        inputs: &[&Path],
        outputs: &[&Path],
        body: impl FnOnce() -> Result<(), PipelineError>,
    ) -> Result<(), PipelineError> {
        let t0 = Instant::now();
        let key = self.cache.key(name, params, inputs)?;
        let hit = self.cache.is_fresh(name, &key, outputs);
        if hit {
            info!("{name}: cached");
        } else {
            info!("{name}: running");
            self.cache.invalidate(name);
            body()?;
            self.cache.record(name, &key)?;
        }
        let seconds = t0.elapsed().as_secs_f64();
        if !hit {
            info!("{name}: done in {seconds:.1}s");
        }
        self.stages.push(StageRun {
            name: name.to_string(),
            cache_hit: hit,
            seconds,
        });
        Ok(())
    }
}

fn split_paths(cfg: &PipelineConfig) -> (PathBuf, PathBuf, PathBuf) {
    let w = &cfg.workdir;
    match &cfg.synth {
        Some(_) => (w.join("train.json"), w.join("test.json"), w.join("gt.json")),
        None => {
            let p = &cfg.paths;
            (
                p.train_manifest.clone().expect("validated"),
                p.test_manifest.clone().expect("validated"),
                p.gt.clone().expect("validated"),
            )
        }
    }
}

/// Runs every stage in dependency order, reusing outputs whose inputs and
/// settings are unchanged.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport, PipelineError> {
    cfg.validate()?;
    let kinds = cfg.model_kinds()?;
    let w = cfg.workdir.clone();
    fs::create_dir_all(&w).map_err(|e| PipelineError::io(&w, e))?;
    let mut run = Runner {
        cache: StageCache::new(&w)?,
        stages: Vec::new(),
    };
    let (train_m, test_m, gt_path) = split_paths(cfg);

    if let Some(s) = &cfg.synth {
        let mut s = s.clone();
        s.seed = cfg.seed;
        run.stage("synth", &s, &[], &[&train_m, &test_m, &gt_path], || {
            let ds = generate_synthetic(&s).map_err(|e| PipelineError::stage("synth", e))?;
            let wr = |p: &Path, m| save_manifest(p, m).map_err(|e| PipelineError::stage("synth", e));
            wr(&train_m, &ds.train)?;
            wr(&test_m, &ds.test)?;
            save_ground_truth(&gt_path, &ds.gt).map_err(|e| PipelineError::stage("synth", e))
        })?;
    }

    let mut desc_kinds = Vec::new();
    if kinds.iter().any(|&k| k != ModelKind::Crnn) {
        desc_kinds.push(DescriptorKind::Radii);
    }
    if kinds.contains(&ModelKind::Crnn) {
        desc_kinds.push(DescriptorKind::Sc);
    }
    let points = |k: DescriptorKind| match k {
        DescriptorKind::Radii => cfg.radii_points,
        DescriptorKind::Sc => cfg.shape_context_points,
    };
    let name = |k: DescriptorKind| match k {
        DescriptorKind::Radii => "radii",
        DescriptorKind::Sc => "sc",
    };
    let tracks_path = |k, split: &str| w.join(format!("tracks-{}-{split}.json", name(k)));
    let desc_path = |k, split: &str| w.join(format!("{}-{split}.bin", name(k)));
    let splits = [("train", &train_m), ("test", &test_m)];

    // extract
    {
        let outs: Vec<PathBuf> = desc_kinds
            .iter()
            .flat_map(|&k| splits.iter().map(move |(s, _)| tracks_path(k, s)))
            .collect();
        let params: Vec<usize> = desc_kinds.iter().map(|&k| points(k)).collect();
        run.stage("extract", &params, &[&train_m, &test_m], &refs(&outs), || {
            for (split, manifest) in splits {
                let m = load_manifest(manifest).map_err(|e| PipelineError::stage("extract", e))?;
                for &k in &desc_kinds {
                    write_json(&tracks_path(k, split), &extract(&m, points(k))?)?;
                }
            }
            Ok(())
        })?;
    }

    // describe
    {
        let ins: Vec<PathBuf> = desc_kinds
            .iter()
            .flat_map(|&k| splits.iter().map(move |(s, _)| tracks_path(k, s)))
            .collect();
        let outs: Vec<PathBuf> = desc_kinds
            .iter()
            .flat_map(|&k| splits.iter().flat_map(move |(s, _)| [desc_path(k, s), index_path(&desc_path(k, s))]))
            .collect();
        run.stage("describe", &desc_kinds, &refs(&ins), &refs(&outs), || {
            for &k in &desc_kinds {
                for (split, _) in splits {
                    let ex: ExtractOutput = read_json(&tracks_path(k, split))?;
                    describe(&ex, k)?.save(&desc_path(k, split))?;
                }
            }
            Ok(())
        })?;
    }

    // cluster
    let cluster_path = w.join("cluster.bin");
    let labels_path = w.join("labels-train.json");
    let cluster_report_path = w.join("cluster-report.json");
    let sc_train = desc_path(DescriptorKind::Sc, "train");
    if kinds.contains(&ModelKind::Crnn) {
        let seed = stage_seed(cfg.seed, "cluster");
        run.stage(
            "cluster",
            &(&cfg.cluster, seed),
            &[&sc_train, &index_path(&sc_train)],
            &[&cluster_path, &labels_path, &cluster_report_path],
            || {
                let set = DescriptorSet::load(&sc_train)?;
                let (labels, model, report) = cluster(&set, &cfg.cluster, seed)?;
                info!(
                    "cluster: {} descriptors, {} clusters kept, cv accuracy {:.4}",
                    report.descriptors, report.n_clusters, report.cv.mean_accuracy
                );
                save_cluster_model(&cluster_path, &model).map_err(|e| PipelineError::stage("cluster", e))?;
                write_json(&labels_path, &labels)?;
                write_json(&cluster_report_path, &report)
            },
        )?;
    }

    let mask_path = cfg.paths.frame_mask.clone();
    let mut metrics = BTreeMap::new();
    for &kind in &kinds {
        let dk = if kind == ModelKind::Crnn {
            DescriptorKind::Sc
        } else {
            DescriptorKind::Radii
        };
        let model_path = w.join(format!("model-{kind}.ckpt"));
        let train_report = w.join(format!("train-{kind}.json"));
        let scores_path = w.join(format!("scores-{kind}.json"));
        let metrics_path = w.join(format!("metrics-{kind}.json"));
        let train_desc = desc_path(dk, "train");
        let test_desc = desc_path(dk, "test");

        let stage = format!("train:{kind}");
        let seed = stage_seed(cfg.seed, &stage);
        let mut ins = vec![train_desc.clone(), index_path(&train_desc)];
        let mut score_ins = vec![model_path.clone(), test_desc.clone(), index_path(&test_desc)];
        if kind == ModelKind::Crnn {
            ins.push(labels_path.clone());
            ins.push(cluster_path.clone());
            score_ins.push(cluster_path.clone());
        }
        let params = (model_params(cfg, kind), seed);
        run.stage(&stage, &params, &refs(&ins), &[&model_path, &train_report], || {
            let set = DescriptorSet::load(&train_desc)?;
            let (model, report) = if kind == ModelKind::Crnn {
                let labels: Vec<usize> = read_json(&labels_path)?;
                let k = load_cluster_model(&cluster_path)
                    .map_err(|e| PipelineError::stage(&stage, e))?
                    .n_clusters();
                train(kind, &set, Some((&labels, k)), &cfg.models, seed)?
            } else {
                train(kind, &set, None, &cfg.models, seed)?
            };
            if let Some(l) = report.loss_trace.last() {
                info!("{stage}: final loss {l:.6}");
            }
            model.save(&model_path).map_err(|e| PipelineError::stage(&stage, e))?;
            write_json(&train_report, &report)
        })?;

        let stage = format!("score:{kind}");
        run.stage(&stage, &cfg.scoring, &refs(&score_ins), &[&scores_path], || {
            let model = Model::load(&model_path).map_err(|e| PipelineError::stage(&stage, e))?;
            let set = DescriptorSet::load(&test_desc)?;
            let cl = if kind == ModelKind::Crnn {
                Some(load_cluster_model(&cluster_path).map_err(|e| PipelineError::stage(&stage, e))?)
            } else {
                None
            };
            let scores = score(&model, &set, cl.as_ref(), &cfg.scoring)?;
            save_scores(&scores_path, &scores).map_err(|e| PipelineError::stage(&stage, e))
        })?;

        let stage = format!("eval:{kind}");
        let mut eval_ins = vec![scores_path.clone(), gt_path.clone()];
        eval_ins.extend(mask_path.clone());
        run.stage(&stage, &cfg.metrics, &refs(&eval_ins), &[&metrics_path], || {
            let scores = load_scores(&scores_path).map_err(|e| PipelineError::stage(&stage, e))?;
            let gt = load_ground_truth(&gt_path).map_err(|e| PipelineError::stage(&stage, e))?;
            let mask = match &mask_path {
                Some(p) => Some(load_frame_mask(p).map_err(|e| PipelineError::stage(&stage, e))?),
                None => None,
            };
            let report = evaluate(&scores, &gt, &cfg.metrics, mask.as_ref())
                .map_err(|e| PipelineError::stage(&stage, e))?;
            info!(
                "{kind}: auc {:.4} rbdc {:.4} tbdc {:.4}",
                report.auc, report.rbdc, report.tbdc
            );
            save_report(&metrics_path, &report).map_err(|e| PipelineError::stage(&stage, e))
        })?;
        metrics.insert(kind.to_string(), read_json::<MetricsReport>(&metrics_path)?);
    }
    let summary = w.join("metrics.json");
    let text = serde_json::to_string_pretty(&metrics).map_err(|e| PipelineError::io(&summary, e))?;
    fs::write(&summary, text).map_err(|e| PipelineError::io(&summary, e))?;

    let cluster = if kinds.contains(&ModelKind::Crnn) {
        Some(read_json(&cluster_report_path)?)
    } else {
        None
    };
    Ok(PipelineReport {
        stages: run.stages,
        metrics,
        cluster,
        workdir: w,
    })
}

fn refs(v: &[PathBuf]) -> Vec<&Path> {
    v.iter().map(PathBuf::as_path).collect()
}

fn model_params(cfg: &PipelineConfig, kind: ModelKind) -> serde_json::Value {
    let m = &cfg.models;
    let v = match kind {
        ModelKind::Vae => serde_json::to_value(&m.vae),
        ModelKind::Lae => serde_json::to_value(&m.lae),
        ModelKind::Tae => serde_json::to_value(&m.tae),
        ModelKind::Rrnn => serde_json::to_value(&m.rrnn),
        ModelKind::Crnn => serde_json::to_value(&m.crnn),
    };
    v.expect("model specs serialize")
}
