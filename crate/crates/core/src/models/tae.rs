use serde::{Deserialize, Serialize};

use super::{
    checkpoint_meta, epoch_rng, init_rng, mean_sq, minibatches, parse_checkpoint, ModelError,
    ModelKind, Result, TrainReport,
};
use crate::descriptors::TrackImage;
use crate::geometry::RADII_POINTS;
use crate::nn::{mse_loss, Adam, Checkpoint, LayerSpec, Network, Tensor};

/// Tabular autoencoder over single 256-value descriptor rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaeSpec {
    pub input: usize,
    /// Encoder widths after the input; the decoder mirrors them.
    pub widths: Vec<usize>,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
}

impl Default for TaeSpec {
    fn default() -> Self {
        TaeSpec {
            input: RADII_POINTS,
            widths: vec![128, 64, 32, 16],
            epochs: 50,
            batch: 16,
            lr: 2e-4,
        }
    }
}

/// Dense stack `dims[0] → … → dims.last() → … → dims[0]` with ReLU between
/// layers and a sigmoid output.
pub(crate) fn mirrored_dense(dims: &[usize]) -> Vec<LayerSpec> {
    let mut path: Vec<usize> = dims.to_vec();
    path.extend(dims.iter().rev().skip(1));
    let mut specs = Vec::new();
    for (i, w) in path.windows(2).enumerate() {
        if i > 0 {
            specs.push(LayerSpec::Relu);
        }
        specs.push(LayerSpec::Dense {
            inputs: w[0],
            outputs: w[1],
        });
    }
    specs.push(LayerSpec::Sigmoid);
    specs
}

/// Minibatch MSE training of a plain autoencoder on `data` (rows of `dim`).
pub(crate) fn fit_autoencoder(
    net: &mut Network,
    data: &[f64],
    dim: usize,
    epochs: usize,
    batch: usize,
    lr: f64,
    seed: u64,
) -> Result<TrainReport> {
    let n = data.len() / dim;
    if n == 0 {
        return Err(ModelError::EmptyTrainingSet);
    }
    let mut opt = Adam::new(lr);
    let mut report = TrainReport::default();
    for epoch in 0..epochs {
        let mut rng = epoch_rng(seed, epoch);
        let mut total = 0.0;
        for idx in minibatches(n, batch, &mut rng) {
            let x: Vec<f64> = idx
                .iter()
                .flat_map(|&i| data[i * dim..(i + 1) * dim].iter().copied())
                .collect();
            let x = Tensor::new(vec![idx.len(), dim], x)?;
            net.zero_grad();
            let y = net.forward(&x)?;
            let (loss, g) = mse_loss(&y, &x)?;
            net.backward(&g)?;
            opt.update(net.params_mut());
            total += loss * idx.len() as f64;
        }
        report.loss_trace.push(total / n as f64);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tae {
    pub spec: TaeSpec,
    net: Network,
}

impl Tae {
    pub fn new(spec: TaeSpec, seed: u64) -> Result<Self> {
        let mut dims = vec![spec.input];
        dims.extend(&spec.widths);
        let net = Network::new(&mirrored_dense(&dims), &mut init_rng(seed))?;
        Ok(Tae { spec, net })
    }

    /// Trains on every row of every track image, pooled into one table.
    pub fn train(tracks: &[TrackImage], spec: TaeSpec, seed: u64) -> Result<(Self, TrainReport)> {
        let mut m = Tae::new(spec, seed)?;
        let data: Vec<f64> = tracks.iter().flat_map(|t| t.data.iter().copied()).collect();
        let s = &m.spec;
        let (dim, epochs, batch, lr) = (s.input, s.epochs, s.batch, s.lr);
        let report = fit_autoencoder(&mut m.net, &data, dim, epochs, batch, lr, seed)?;
        Ok((m, report))
    }

    /// Reconstructs `rows` (row-major, `input` values each).
    pub fn reconstruct(&self, rows: &[f64]) -> Result<Vec<f64>> {
        let n = rows.len() / self.spec.input;
        let x = Tensor::new(vec![n, self.spec.input], rows.to_vec())?;
        Ok(self.net.infer(&x)?.into_data())
    }

    /// Per-frame mean squared reconstruction error.
    pub fn score_track(&self, t: &TrackImage) -> Result<Vec<f64>> {
        let rec = self.reconstruct(&t.data)?;
        let d = self.spec.input;
        Ok((0..t.rows)
            .map(|i| mean_sq(&t.data[i * d..(i + 1) * d], &rec[i * d..(i + 1) * d]))
            .collect())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            kind: ModelKind::Tae.to_string(),
            meta: checkpoint_meta(&self.spec),
            networks: vec![self.net.clone()],
        }
    }

    pub fn from_checkpoint(mut ck: Checkpoint) -> Result<Self> {
        let spec = parse_checkpoint(&ck, ModelKind::Tae, 1)?;
        Ok(Tae {
            spec,
            net: ck.networks.remove(0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smooth_track(h: usize, phase: f64) -> TrackImage {
        let rows: Vec<Vec<f64>> = (0..h)
            .map(|t| {
                (0..16)
                    .map(|c| 0.5 + 0.3 * ((c as f64 * 0.4) + phase + 0.1 * t as f64).sin())
                    .collect()
            })
            .collect();
        TrackImage::from_rows(&rows)
    }

    fn small_spec() -> TaeSpec {
        TaeSpec {
            input: 16,
            widths: vec![8, 4],
            epochs: 150,
            batch: 8,
            lr: 5e-3,
        }
    }

    #[test]
    fn layout_mirrors_widths() {
        let specs = mirrored_dense(&[256, 128, 64, 32, 16]);
        let dense: Vec<_> = specs
            .iter()
            .filter_map(|s| match s {
                LayerSpec::Dense { inputs, outputs } => Some((*inputs, *outputs)),
                _ => None,
            })
            .collect();
        assert_eq!(dense.len(), 8);
        assert_eq!(dense[3], (32, 16));
        assert_eq!(dense[4], (16, 32));
        assert_eq!(dense[7], (128, 256));
        assert_eq!(specs.last(), Some(&LayerSpec::Sigmoid));
    }

    #[test]
    fn trains_deterministically_and_flags_spike() {
        let tracks: Vec<_> = (0..6).map(|k| smooth_track(20, k as f64 * 0.3)).collect();
        let (a, rep) = Tae::train(&tracks, small_spec(), 11).unwrap();
        let (b, _) = Tae::train(&tracks, small_spec(), 11).unwrap();
        assert_eq!(a, b);
        assert!(rep.is_finite());
        assert!(rep.loss_trace.last().unwrap() < &rep.loss_trace[0]);

        let mut probe = smooth_track(20, 0.45);
        for v in &mut probe.data[7 * 16..8 * 16] {
            *v = 1.0 - *v;
        }
        let s = a.score_track(&probe).unwrap();
        assert_eq!(s.len(), 20);
        let argmax = (0..20).max_by(|&i, &j| s[i].total_cmp(&s[j])).unwrap();
        assert_eq!(argmax, 7);
    }

    #[test]
    fn empty_training_set() {
        assert!(matches!(
            Tae::train(&[], small_spec(), 0),
            Err(ModelError::EmptyTrainingSet)
        ));
    }
}
