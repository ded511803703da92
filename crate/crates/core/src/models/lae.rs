use serde::{Deserialize, Serialize};

use super::tae::{fit_autoencoder, mirrored_dense};
use super::{
    checkpoint_meta, frame_errors_from_rows, init_rng, mean_sq, parse_checkpoint, square_image,
    ModelError, ModelKind, Result, TrainReport,
};
use crate::descriptors::TrackImage;
use crate::nn::{Checkpoint, Network, Tensor};

/// Dense autoencoder over flattened square track images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LaeSpec {
    /// Side of the square input image.
    pub image_size: usize,
    pub widths: Vec<usize>,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
}

impl Default for LaeSpec {
    fn default() -> Self {
        LaeSpec {
            image_size: 256,
            widths: vec![1024, 256],
            epochs: 100,
            batch: 8,
            lr: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lae {
    pub spec: LaeSpec,
    net: Network,
}

impl Lae {
    pub fn new(spec: LaeSpec, seed: u64) -> Result<Self> {
        if spec.image_size < 2 {
            return Err(ModelError::Meta("image_size must be at least 2".into()));
        }
        let mut dims = vec![spec.image_size * spec.image_size];
        dims.extend(&spec.widths);
        let net = Network::new(&mirrored_dense(&dims), &mut init_rng(seed))?;
        Ok(Lae { spec, net })
    }

    pub fn train(tracks: &[TrackImage], spec: LaeSpec, seed: u64) -> Result<(Self, TrainReport)> {
        let mut m = Lae::new(spec, seed)?;
        let s = m.spec.image_size;
        let data: Vec<f64> = tracks.iter().flat_map(|t| square_image(t, s)).collect();
        let (epochs, batch, lr) = (m.spec.epochs, m.spec.batch, m.spec.lr);
        let report = fit_autoencoder(&mut m.net, &data, s * s, epochs, batch, lr, seed)?;
        Ok((m, report))
    }

    /// Reconstruction of one square image.
    pub fn reconstruct(&self, img: &[f64]) -> Result<Vec<f64>> {
        let s = self.spec.image_size;
        let x = Tensor::new(vec![1, s * s], img.to_vec())?;
        Ok(self.net.infer(&x)?.into_data())
    }

    pub fn score_track(&self, t: &TrackImage) -> Result<Vec<f64>> {
        let s = self.spec.image_size;
        let img = square_image(t, s);
        let rec = self.reconstruct(&img)?;
        let rows: Vec<f64> = img
            .chunks(s)
            .zip(rec.chunks(s))
            .map(|(a, b)| mean_sq(a, b))
            .collect();
        Ok(frame_errors_from_rows(&rows, t.rows))
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            kind: ModelKind::Lae.to_string(),
            meta: checkpoint_meta(&self.spec),
            networks: vec![self.net.clone()],
        }
    }

    pub fn from_checkpoint(mut ck: Checkpoint) -> Result<Self> {
        let spec = parse_checkpoint(&ck, ModelKind::Lae, 1)?;
        Ok(Lae {
            spec,
            net: ck.networks.remove(0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lae_learns_and_scores_every_frame() {
        let tracks: Vec<TrackImage> = (0..8)
            .map(|k| {
                let rows: Vec<Vec<f64>> = (0..10)
                    .map(|t| (0..256).map(|c| 0.5 + 0.2 * ((c as f64) / 40.0 + 0.05 * (t + k) as f64).sin()).collect())
                    .collect();
                TrackImage::from_rows(&rows)
            })
            .collect();
        let spec = LaeSpec {
            image_size: 8,
            widths: vec![16, 4],
            epochs: 60,
            batch: 4,
            lr: 3e-3,
        };
        let (m, rep) = Lae::train(&tracks, spec.clone(), 3).unwrap();
        assert!(rep.is_finite());
        assert!(rep.loss_trace.last().unwrap() < &rep.loss_trace[0]);
        assert_eq!(m, Lae::train(&tracks, spec, 3).unwrap().0);
        let scores = m.score_track(&tracks[0]).unwrap();
        assert_eq!(scores.len(), 10);
    }
}
