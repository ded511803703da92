use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Random slicing of label sequences, redrawn every epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    /// Chance that a sequence is replaced by a random contiguous slice.
    pub slice_prob: f64,
    /// Shortest slice length.
    pub min_range: usize,
    /// Shuffle the sequence order each epoch.
    pub shuffle: bool,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            slice_prob: 0.8,
            min_range: 3,
            shuffle: true,
        }
    }
}

/// One epoch's training sequences. Each sequence is, with probability
/// `slice_prob`, cut to a slice whose length is uniform in
/// `[min_range, len]` and whose start is uniform over the valid offsets.
/// Sequences shorter than `min_range` pass through whole.
pub fn augment_epoch<R: Rng + ?Sized>(
    seqs: &[Vec<usize>],
    cfg: &AugmentConfig,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = seqs
        .iter()
        .map(|s| {
            if s.len() < cfg.min_range || !rng.random_bool(cfg.slice_prob.clamp(0.0, 1.0)) {
                return s.clone();
            }
            let len = rng.random_range(cfg.min_range..=s.len());
            let start = rng.random_range(0..=s.len() - len);
            s[start..start + len].to_vec()
        })
        .collect();
    if cfg.shuffle {
        out.shuffle(rng);
    }
    out
}
