use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::ingest::SynthConfig;
use crate::metrics::MetricsConfig;
use crate::models::{CrnnSpec, LaeSpec, ModelKind, RrnnSpec, TaeSpec, VaeSpec};
use crate::scoring::ScoringConfig;
use crate::shapecluster::ClusterConfig;

/// Input locations. Ignored when a synthetic dataset is requested.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    pub train_manifest: Option<PathBuf>,
    pub test_manifest: Option<PathBuf>,
    pub gt: Option<PathBuf>,
    /// Optional per-video frame selection for evaluation.
    pub frame_mask: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelsConfig {
    /// Models to train and evaluate, by name.
    pub enabled: Vec<String>,
    pub vae: VaeSpec,
    pub lae: LaeSpec,
    pub tae: TaeSpec,
    pub rrnn: RrnnSpec,
    pub crnn: CrnnSpec,
}

impl Default for ModelsConfig {
    fn default() -> Self {
        ModelsConfig {
            enabled: ModelKind::ALL.iter().map(|k| k.to_string()).collect(),
            vae: VaeSpec::default(),
            lae: LaeSpec::default(),
            tae: TaeSpec::default(),
            rrnn: RrnnSpec::default(),
            crnn: CrnnSpec::default(),
        }
    }
}

/// Everything a full run needs; every hyperparameter defaults to its
/// published value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub workdir: PathBuf,
    pub paths: PathsConfig,
    /// Generate the train/test split instead of reading manifests. Its seed
    /// is replaced by the master seed.
    pub synth: Option<SynthConfig>,
    pub radii_points: usize,
    pub shape_context_points: usize,
    pub models: ModelsConfig,
    pub cluster: ClusterConfig,
    pub scoring: ScoringConfig,
    pub metrics: MetricsConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            workdir: PathBuf::from("work"),
            paths: PathsConfig::default(),
            synth: None,
            radii_points: crate::geometry::RADII_POINTS,
            shape_context_points: crate::geometry::SHAPE_CONTEXT_POINTS,
            models: ModelsConfig::default(),
            cluster: ClusterConfig::default(),
            scoring: ScoringConfig::default(),
            metrics: MetricsConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    }

    /// Enabled models in canonical order.
    pub fn model_kinds(&self) -> Result<Vec<ModelKind>, PipelineError> {
        let mut kinds = self
            .models
            .enabled
            .iter()
            .map(|s| ModelKind::from_str(s).map_err(PipelineError::Config))
            .collect::<Result<Vec<_>, _>>()?;
        kinds.sort();
        kinds.dedup();
        Ok(kinds)
    }

    /// Checks everything that can be checked without touching inputs.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        let kinds = self.model_kinds()?;
        if kinds.is_empty() {
            return bad("no models enabled".into());
        }
        if self.radii_points != crate::geometry::RADII_POINTS {
            return bad(format!(
                "radii_points must be {}, got {}",
                crate::geometry::RADII_POINTS,
                self.radii_points
            ));
        }
        if self.shape_context_points != crate::geometry::SHAPE_CONTEXT_POINTS {
            return bad(format!(
                "shape_context_points must be {}, got {}",
                crate::geometry::SHAPE_CONTEXT_POINTS,
                self.shape_context_points
            ));
        }
        if !(self.scoring.sigma > 0.0) {
            return bad(format!("scoring.sigma must be positive, got {}", self.scoring.sigma));
        }
        if !(0.0..=1.0).contains(&self.metrics.iou_min) || !(0.0..=1.0).contains(&self.metrics.alpha) {
            return bad("metrics.iou_min and metrics.alpha must lie in [0, 1]".into());
        }
        if self.cluster.k < 2 {
            return bad(format!("cluster.k must be at least 2, got {}", self.cluster.k));
        }
        match &self.synth {
            Some(s) => s.validate().or_else(|e| bad(e.to_string()))?,
            None => {
                let p = &self.paths;
                if p.train_manifest.is_none() || p.test_manifest.is_none() || p.gt.is_none() {
                    return bad(
                        "either synth or paths.train_manifest, paths.test_manifest and paths.gt are required"
                            .into(),
                    );
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_and_carry_published_values() {
        let c = PipelineConfig::default();
        let back: PipelineConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!(c.cluster.k, 30);
        assert_eq!(c.cluster.sample, 10_000);
        assert_eq!(c.models.tae.widths, vec![128, 64, 32, 16]);
        assert_eq!(c.models.vae.latent_dim, 128);
        let partial: PipelineConfig = serde_json::from_str(r#"{"seed": 3}"#).unwrap();
        assert_eq!(partial.seed, 3);
        assert_eq!(partial.models, ModelsConfig::default());
    }

    #[test]
    fn unknown_model_is_a_config_error() {
        let mut c = PipelineConfig {
            synth: Some(SynthConfig::default()),
            ..Default::default()
        };
        assert!(c.validate().is_ok());
        c.models.enabled = vec!["tae".into(), "gan".into()];
        assert!(matches!(c.validate(), Err(PipelineError::Config(m)) if m.contains("gan")));
    }
}
