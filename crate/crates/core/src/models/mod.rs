//! The five anomaly models and their per-frame evidence.
//!
//! Autoencoders (VAE, LAE on track images; TAE on single descriptor rows)
//! score frames by reconstruction error, the regression RNN by next-contour
//! prediction error, and the classification RNN yields next-cluster
//! probability vectors that the scoring module combines with novelty.

mod augment;
mod crnn;
mod image;
mod lae;
mod rrnn;
mod tae;
mod vae;

use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::{Checkpoint, NnError};

pub use augment::{augment_epoch, AugmentConfig};
pub use crnn::{Crnn, CrnnSpec, MIN_PREFIX};
pub use image::{frame_errors_from_rows, square_image};
pub use lae::{Lae, LaeSpec};
pub use rrnn::{rrnn_windows, Rrnn, RrnnSpec};
pub use tae::{Tae, TaeSpec};
pub use vae::{Vae, VaeSpec};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("track too short: need {needed} frames, got {got}")]
    TrackTooShort { needed: usize, got: usize },
    #[error("prefix too short: need {needed} labels, got {got}")]
    PrefixTooShort { needed: usize, got: usize },
    #[error("label {label} outside 0..{classes}")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("checkpoint holds a {found} model, expected {expected}")]
    WrongKind { expected: String, found: String },
    #[error("bad model metadata: {0}")]
    Meta(String),
    #[error(transparent)]
    Nn(#[from] NnError),
}

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Vae,
    Lae,
    Tae,
    Rrnn,
    Crnn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Vae,
        ModelKind::Lae,
        ModelKind::Tae,
        ModelKind::Rrnn,
        ModelKind::Crnn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Vae => "vae",
            ModelKind::Lae => "lae",
            ModelKind::Tae => "tae",
            ModelKind::Rrnn => "rrnn",
            ModelKind::Crnn => "crnn",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown model '{s}' (expected vae, lae, tae, rrnn or crnn)"))
    }
}

/// Per-epoch mean training loss.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub loss_trace: Vec<f64>,
}

impl TrainReport {
    pub fn is_finite(&self) -> bool {
        self.loss_trace.iter().all(|v| v.is_finite())
    }
}

/// Any trained model, as stored in a checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Vae(Vae),
    Lae(Lae),
    Tae(Tae),
    Rrnn(Rrnn),
    Crnn(Crnn),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Vae(_) => ModelKind::Vae,
            Model::Lae(_) => ModelKind::Lae,
            Model::Tae(_) => ModelKind::Tae,
            Model::Rrnn(_) => ModelKind::Rrnn,
            Model::Crnn(_) => ModelKind::Crnn,
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        match self {
            Model::Vae(m) => m.to_checkpoint(),
            Model::Lae(m) => m.to_checkpoint(),
            Model::Tae(m) => m.to_checkpoint(),
            Model::Rrnn(m) => m.to_checkpoint(),
            Model::Crnn(m) => m.to_checkpoint(),
        }
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self> {
        let kind = ModelKind::from_str(&ck.kind).map_err(ModelError::Meta)?;
        Ok(match kind {
            ModelKind::Vae => Model::Vae(Vae::from_checkpoint(ck)?),
            ModelKind::Lae => Model::Lae(Lae::from_checkpoint(ck)?),
            ModelKind::Tae => Model::Tae(Tae::from_checkpoint(ck)?),
            ModelKind::Rrnn => Model::Rrnn(Rrnn::from_checkpoint(ck)?),
            ModelKind::Crnn => Model::Crnn(Crnn::from_checkpoint(ck)?),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(self.to_checkpoint().save(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(Checkpoint::load(path)?)
    }
}

/// RNG for epoch `epoch` of a run seeded with `seed`; streams never overlap
/// with the initialisation stream (stream 0).
pub(crate) fn epoch_rng(seed: u64, epoch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64 + 1);
    rng
}

pub(crate) fn init_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shuffled index batches covering `0..n`.
pub(crate) fn minibatches(n: usize, batch: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx.chunks(batch.max(1)).map(<[usize]>::to_vec).collect()
}

pub(crate) fn checkpoint_meta<T: Serialize>(spec: &T) -> serde_json::Value {
    serde_json::to_value(spec).expect("specs serialise")
}

pub(crate) fn parse_checkpoint<T: serde::de::DeserializeOwned>(
    ck: &Checkpoint,
    expected: ModelKind,
    networks: usize,
) -> Result<T> {
    if ck.kind != expected.as_str() {
        return Err(ModelError::WrongKind {
            expected: expected.to_string(),
            found: ck.kind.clone(),
        });
    }
    if ck.networks.len() != networks {
        return Err(ModelError::Meta(format!(
            "expected {networks} networks, found {}",
            ck.networks.len()
        )));
    }
    serde_json::from_value(ck.meta.clone()).map_err(|e| ModelError::Meta(e.to_string()))
}

/// Mean squared difference of two equal-length slices.
pub(crate) fn mean_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len().max(1) as f64
}
