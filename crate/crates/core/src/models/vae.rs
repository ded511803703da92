use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{
    checkpoint_meta, epoch_rng, frame_errors_from_rows, init_rng, mean_sq, minibatches,
    parse_checkpoint, square_image, ModelError, ModelKind, Result, TrainReport,
};
use crate::descriptors::TrackImage;
use crate::nn::{kl_loss, mse_loss, Adam, Checkpoint, LayerSpec, Network, Tensor};

/// Convolutional VAE over square track images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VaeSpec {
    /// Side of the square input; must be divisible by `stride^4`.
    pub image_size: usize,
    /// Output channels of the four encoder convolutions.
    pub channels: [usize; 4],
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub latent_dim: usize,
    pub kl_weight: f64,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
}

impl Default for VaeSpec {
    fn default() -> Self {
        VaeSpec {
            image_size: 256,
            channels: [32, 64, 128, 256],
            kernel: 4,
            stride: 2,
            padding: 1,
            latent_dim: 128,
            kl_weight: 1.0,
            epochs: 100,
            batch: 16,
            lr: 1e-4,
        }
    }
}

impl VaeSpec {
    fn bottleneck_side(&self) -> Result<usize> {
        let mut side = self.image_size;
        for _ in 0..4 {
            let out = (side + 2 * self.padding)
                .checked_sub(self.kernel)
                .map(|v| v / self.stride + 1);
            match out {
                // the decoder must land back on exactly the same size
                Some(o) if o > 0 && (o - 1) * self.stride + self.kernel == side + 2 * self.padding => side = o,
                _ => {
                    return Err(ModelError::Meta(format!(
                        "image_size {} does not halve cleanly through four convolutions",
                        self.image_size
                    )))
                }
            }
        }
        Ok(side)
    }

    fn layers(&self) -> Result<[Vec<LayerSpec>; 4]> {
        let f = self.bottleneck_side()?;
        let (k, s, p) = (self.kernel, self.stride, self.padding);
        let mut chans = vec![1];
        chans.extend(self.channels);
        let flat = self.channels[3] * f * f;

        let mut enc = Vec::new();
        for w in chans.windows(2) {
            enc.push(LayerSpec::Conv2d {
                in_channels: w[0],
                out_channels: w[1],
                kernel: k,
                stride: s,
                padding: p,
            });
            enc.push(LayerSpec::Relu);
        }
        enc.push(LayerSpec::Reshape { shape: vec![flat] });
        let head = vec![LayerSpec::Dense {
            inputs: flat,
            outputs: self.latent_dim,
        }];

        let mut dec = vec![
            LayerSpec::Dense {
                inputs: self.latent_dim,
                outputs: flat,
            },
            LayerSpec::Reshape {
                shape: vec![self.channels[3], f, f],
            },
        ];
        for w in chans.windows(2).rev() {
            dec.push(LayerSpec::Relu);
            dec.push(LayerSpec::Deconv2d {
                in_channels: w[1],
                out_channels: w[0],
                kernel: k,
                stride: s,
                padding: p,
            });
        }
        dec.push(LayerSpec::Sigmoid);
        Ok([enc, head.clone(), head, dec])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vae {
    pub spec: VaeSpec,
    encoder: Network,
    mu_head: Network,
    logvar_head: Network,
    decoder: Network,
}

impl Vae {
    pub fn new(spec: VaeSpec, seed: u64) -> Result<Self> {
        let [e, m, l, d] = spec.layers()?;
        let mut rng = init_rng(seed);
        Ok(Vae {
            encoder: Network::new(&e, &mut rng)?,
            mu_head: Network::new(&m, &mut rng)?,
            logvar_head: Network::new(&l, &mut rng)?,
            decoder: Network::new(&d, &mut rng)?,
            spec,
        })
    }

    pub fn train(tracks: &[TrackImage], spec: VaeSpec, seed: u64) -> Result<(Self, TrainReport)> {
        if tracks.is_empty() {
            return Err(ModelError::EmptyTrainingSet);
        }
        let mut m = Vae::new(spec, seed)?;
        let s = m.spec.image_size;
        let images: Vec<Vec<f64>> = tracks.iter().map(|t| square_image(t, s)).collect();
        let mut opt = Adam::new(m.spec.lr);
        let mut report = TrainReport::default();
        for epoch in 0..m.spec.epochs {
            let mut rng = epoch_rng(seed, epoch);
            let mut total = 0.0;
            for idx in minibatches(images.len(), m.spec.batch, &mut rng) {
                let b = idx.len();
                let x: Vec<f64> = idx.iter().flat_map(|&i| images[i].iter().copied()).collect();
                let x = Tensor::new(vec![b, 1, s, s], x)?;
                let eta: Vec<f64> = (0..b * m.spec.latent_dim)
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect();
                total += m.step(&x, &eta, &mut opt)? * b as f64;
            }
            report.loss_trace.push(total / images.len() as f64);
        }
        Ok((m, report))
    }

    /// One optimisation step on batch `x` with reparameterisation noise `eta`.
    fn step(&mut self, x: &Tensor, eta: &[f64], opt: &mut Adam) -> Result<f64> {
        for n in self.networks_mut() {
            n.zero_grad();
        }
        let h = self.encoder.forward(x)?;
        let mu = self.mu_head.forward(&h)?;
        let lv = self.logvar_head.forward(&h)?;
        let sd: Vec<f64> = lv.data().iter().map(|v| (0.5 * v).exp()).collect();
        let z: Vec<f64> = mu
            .data()
            .iter()
            .zip(&sd)
            .zip(eta)
            .map(|((m, s), e)| m + s * e)
            .collect();
        let z = Tensor::new(mu.shape().to_vec(), z)?;
        let rec = self.decoder.forward(&z)?;
        let (mse, g) = mse_loss(&rec, x)?;
        let (kl, gmu, glv) = kl_loss(&mu, &lv)?;
        let w = self.spec.kl_weight;

        let dz = self.decoder.backward(&g)?;
        let dmu: Vec<f64> = dz.data().iter().zip(gmu.data()).map(|(a, b)| a + w * b).collect();
        let dlv: Vec<f64> = dz
            .data()
            .iter()
            .zip(eta)
            .zip(&sd)
            .zip(glv.data())
            .map(|(((d, e), s), g)| d * e * 0.5 * s + w * g)
            .collect();
        let dh_mu = self.mu_head.backward(&Tensor::new(mu.shape().to_vec(), dmu)?)?;
        let dh_lv = self.logvar_head.backward(&Tensor::new(mu.shape().to_vec(), dlv)?)?;
        let dh: Vec<f64> = dh_mu.data().iter().zip(dh_lv.data()).map(|(a, b)| a + b).collect();
        self.encoder.backward(&Tensor::new(h.shape().to_vec(), dh)?)?;
        opt.update(self.networks_mut().into_iter().flat_map(|n| n.params_mut()));
        Ok(mse + w * kl)
    }

    fn networks_mut(&mut self) -> [&mut Network; 4] {
        [
            &mut self.encoder,
            &mut self.mu_head,
            &mut self.logvar_head,
            &mut self.decoder,
        ]
    }

    /// Deterministic reconstruction through the posterior mean.
    pub fn reconstruct(&self, img: &[f64]) -> Result<Vec<f64>> {
        let s = self.spec.image_size;
        let x = Tensor::new(vec![1, 1, s, s], img.to_vec())?;
        let mu = self.mu_head.infer(&self.encoder.infer(&x)?)?;
        Ok(self.decoder.infer(&mu)?.into_data())
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
            kind: ModelKind::Vae.to_string(),
            meta: checkpoint_meta(&self.spec),
            networks: vec![
                self.encoder.clone(),
                self.mu_head.clone(),
                self.logvar_head.clone(),
                self.decoder.clone(),
            ],
        }
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self> {
        let spec: VaeSpec = parse_checkpoint(&ck, ModelKind::Vae, 4)?;
        let [encoder, mu_head, logvar_head, decoder]: [Network; 4] =
            ck.networks.try_into().expect("count checked");
        Ok(Vae {
            spec,
            encoder,
            mu_head,
            logvar_head,
            decoder,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec() -> VaeSpec {
        VaeSpec {
            image_size: 16,
            channels: [2, 3, 4, 4],
            latent_dim: 3,
            epochs: 40,
            batch: 4,
            lr: 3e-3,
            ..Default::default()
        }
    }

    fn tracks() -> Vec<TrackImage> {
        (0..8)
            .map(|k| {
                let rows: Vec<Vec<f64>> = (0..12)
                    .map(|t| (0..256).map(|c| 0.5 + 0.25 * ((c as f64) / 30.0 + 0.1 * (t + k) as f64).sin()).collect())
                    .collect();
                TrackImage::from_rows(&rows)
            })
            .collect()
    }

    #[test]
    fn default_layout_reaches_sixteen_square() {
        let [enc, head, _, dec] = VaeSpec::default().layers().unwrap();
        assert_eq!(enc.iter().filter(|l| matches!(l, LayerSpec::Conv2d { .. })).count(), 4);
        assert_eq!(dec.iter().filter(|l| matches!(l, LayerSpec::Deconv2d { .. })).count(), 4);
        assert_eq!(
            head[0],
            LayerSpec::Dense {
                inputs: 256 * 16 * 16,
                outputs: 128
            }
        );
        assert!(VaeSpec { image_size: 40, ..Default::default() }.layers().is_err());
    }

    #[test]
    fn trains_reproducibly_with_falling_loss() {
        let (a, rep) = Vae::train(&tracks(), tiny_spec(), 5).unwrap();
        assert!(rep.is_finite());
        assert!(rep.loss_trace.last().unwrap() < &rep.loss_trace[0], "{:?}", rep.loss_trace);
        let (b, _) = Vae::train(&tracks(), tiny_spec(), 5).unwrap();
        assert_eq!(a, b);
        let s = a.score_track(&tracks()[0]).unwrap();
        assert_eq!(s.len(), 12);
        let back = Vae::from_checkpoint(a.to_checkpoint()).unwrap();
        assert_eq!(back.spec, a.spec);
    }
}
