use serde::{Deserialize, Serialize};

use super::{
    checkpoint_meta, epoch_rng, init_rng, mean_sq, minibatches, parse_checkpoint, ModelError,
    ModelKind, Result, TrainReport,
};
use crate::descriptors::TrackImage;
use crate::geometry::RADII_POINTS;
use crate::nn::{mse_loss, Adam, Checkpoint, LayerSpec, Network, Tensor};

/// Many-to-one recurrent regressor: `window` descriptors in, the next one out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RrnnSpec {
    pub input: usize,
    pub hidden: usize,
    pub window: usize,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
}

impl Default for RrnnSpec {
    fn default() -> Self {
        RrnnSpec {
            input: RADII_POINTS,
            hidden: 8,
            window: 3,
            epochs: 200,
            batch: 1,
            lr: 1e-5,
        }
    }
}

/// Sliding windows with stride 1: every run of `window + 1` consecutive rows
/// gives one sample. Returns `(inputs, targets, count)`, with inputs laid out
/// `[count, window, d]` and targets `[count, d]`.
pub fn rrnn_windows(tracks: &[TrackImage], window: usize) -> (Vec<f64>, Vec<f64>, usize) {
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    let mut count = 0;
    for t in tracks {
        for end in window..t.rows {
            for r in end - window..end {
                inputs.extend_from_slice(t.row(r));
            }
            targets.extend_from_slice(t.row(end));
            count += 1;
        }
    }
    (inputs, targets, count)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rrnn {
    pub spec: RrnnSpec,
    net: Network,
}

impl Rrnn {
    pub fn new(spec: RrnnSpec, seed: u64) -> Result<Self> {
        let net = Network::new(
            &[
                LayerSpec::RnnTanh {
                    inputs: spec.input,
                    hidden: spec.hidden,
                    return_sequences: false,
                },
                LayerSpec::Dense {
                    inputs: spec.hidden,
                    outputs: spec.input,
                },
            ],
            &mut init_rng(seed),
        )?;
        Ok(Rrnn { spec, net })
    }

    pub fn train(tracks: &[TrackImage], spec: RrnnSpec, seed: u64) -> Result<(Self, TrainReport)> {
        let mut m = Rrnn::new(spec, seed)?;
        let (w, d) = (m.spec.window, m.spec.input);
        let (inputs, targets, n) = rrnn_windows(tracks, w);
        if n == 0 {
            return Err(ModelError::EmptyTrainingSet);
        }
        let mut opt = Adam::new(m.spec.lr);
        let mut report = TrainReport::default();
        for epoch in 0..m.spec.epochs {
            let mut rng = epoch_rng(seed, epoch);
            let mut total = 0.0;
            for idx in minibatches(n, m.spec.batch, &mut rng) {
                let b = idx.len();
                let x: Vec<f64> = idx
                    .iter()
                    .flat_map(|&i| inputs[i * w * d..(i + 1) * w * d].iter().copied())
                    .collect();
                let y: Vec<f64> = idx
                    .iter()
                    .flat_map(|&i| targets[i * d..(i + 1) * d].iter().copied())
                    .collect();
                m.net.zero_grad();
                let pred = m.net.forward(&Tensor::new(vec![b, w, d], x)?)?;
                let (loss, g) = mse_loss(&pred, &Tensor::new(vec![b, d], y)?)?;
                m.net.backward(&g)?;
                opt.update(m.net.params_mut());
                total += loss * b as f64;
            }
            report.loss_trace.push(total / n as f64);
        }
        Ok((m, report))
    }

    /// Prediction of the row following `history` (`window × input` values).
    pub fn predict(&self, history: &[f64]) -> Result<Vec<f64>> {
        let x = Tensor::new(vec![1, self.spec.window, self.spec.input], history.to_vec())?;
        Ok(self.net.infer(&x)?.into_data())
    }

    /// Frame `t ≥ window` gets the MSE of its prediction; earlier frames get
    /// the track's smallest scored value.
    pub fn score_track(&self, t: &TrackImage) -> Result<Vec<f64>> {
        let w = self.spec.window;
        if t.rows <= w {
            return Err(ModelError::TrackTooShort {
                needed: w + 1,
                got: t.rows,
            });
        }
        let d = self.spec.input;
        let (inputs, _, n) = rrnn_windows(std::slice::from_ref(t), w);
        let x = Tensor::new(vec![n, w, d], inputs)?;
        let pred = self.net.infer(&x)?;
        let scored: Vec<f64> = (0..n)
            .map(|i| mean_sq(&pred.data()[i * d..(i + 1) * d], t.row(w + i)))
            .collect();
        let floor = scored.iter().copied().fold(f64::INFINITY, f64::min);
        let mut out = vec![floor; w];
        out.extend(scored);
        Ok(out)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            kind: ModelKind::Rrnn.to_string(),
            meta: checkpoint_meta(&self.spec),
            networks: vec![self.net.clone()],
        }
    }

    pub fn from_checkpoint(mut ck: Checkpoint) -> Result<Self> {
        let spec = parse_checkpoint(&ck, ModelKind::Rrnn, 1)?;
        Ok(Rrnn {
            spec,
            net: ck.networks.remove(0),
        })
    }
}
