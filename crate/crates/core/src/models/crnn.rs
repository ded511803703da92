use serde::{Deserialize, Serialize};

use super::{
    augment_epoch, epoch_rng, init_rng, parse_checkpoint, AugmentConfig, ModelError, ModelKind,
    Result, TrainReport,
};
use crate::nn::{cross_entropy, softmax_rows, Adam, Checkpoint, LayerSpec, Network, Tensor};

/// Shortest label prefix the classifier is asked to continue.
pub const MIN_PREFIX: usize = 3;

/// Recurrent next-cluster classifier over one-hot cluster labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrnnSpec {
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub augment: AugmentConfig,
}

impl Default for CrnnSpec {
    fn default() -> Self {
        CrnnSpec {
            hidden: 8,
            epochs: 200,
            lr: 1e-3,
            augment: AugmentConfig::default(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Meta {
    spec: CrnnSpec,
    n_clusters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crnn {
    pub spec: CrnnSpec,
    pub n_clusters: usize,
    net: Network,
}

impl Crnn {
    pub fn new(spec: CrnnSpec, n_clusters: usize, seed: u64) -> Result<Self> {
        if n_clusters < 2 {
            return Err(ModelError::Meta(format!(
                "need at least 2 clusters, got {n_clusters}"
            )));
        }
        // Emits logits at every step; step t continues the prefix ending at t.
        let net = Network::new(
            &[
                LayerSpec::RnnTanh {
                    inputs: n_clusters,
                    hidden: spec.hidden,
                    return_sequences: true,
                },
                LayerSpec::Dense {
                    inputs: spec.hidden,
                    outputs: n_clusters,
                },
            ],
            &mut init_rng(seed),
        )?;
        Ok(Crnn {
            spec,
            n_clusters,
            net,
        })
    }

    fn one_hot(&self, labels: &[usize]) -> Result<Tensor> {
        let k = self.n_clusters;
        let mut x = vec![0.0; labels.len() * k];
        for (t, &l) in labels.iter().enumerate() {
            if l >= k {
                return Err(ModelError::LabelOutOfRange { label: l, classes: k });
            }
            x[t * k + l] = 1.0;
        }
        Ok(Tensor::new(vec![1, labels.len(), k], x)?)
    }

    /// Trains one sequence at a time. Each epoch re-slices and reshuffles the
    /// sequences; within a sequence, every step whose prefix has at least
    /// [`MIN_PREFIX`] labels contributes a cross-entropy term for the label
    /// that follows.
    pub fn train(
        seqs: &[Vec<usize>],
        n_clusters: usize,
        spec: CrnnSpec,
        seed: u64,
    ) -> Result<(Self, TrainReport)> {
        let mut m = Crnn::new(spec, n_clusters, seed)?;
        if !seqs.iter().any(|s| s.len() > MIN_PREFIX) {
            return Err(ModelError::EmptyTrainingSet);
        }
        let k = n_clusters;
        let mut opt = Adam::new(m.spec.lr);
        let mut report = TrainReport::default();
        for epoch in 0..m.spec.epochs {
            let mut rng = epoch_rng(seed, epoch);
            let mut total = 0.0;
            let mut used = 0usize;
            for s in augment_epoch(seqs, &m.spec.augment, &mut rng) {
                if s.len() <= MIN_PREFIX {
                    continue;
                }
                let steps = s.len() - 1;
                m.net.zero_grad();
                let logits = m.net.forward(&m.one_hot(&s[..steps])?)?;
                let first = MIN_PREFIX - 1;
                let picked = Tensor::new(vec![steps - first, k], logits.data()[first * k..].to_vec())?;
                let (loss, g) = cross_entropy(&picked, &s[first + 1..])?;
                let mut grad = vec![0.0; steps * k];
                grad[first * k..].copy_from_slice(g.data());
                m.net.backward(&Tensor::new(logits.shape().to_vec(), grad)?)?;
                opt.update(m.net.params_mut());
                total += loss;
                used += 1;
            }
            report.loss_trace.push(total / used.max(1) as f64);
        }
        Ok((m, report))
    }

    /// Distribution over the cluster that follows `prefix`.
    pub fn predict(&self, prefix: &[usize]) -> Result<Vec<f64>> {
        if prefix.len() < MIN_PREFIX {
            return Err(ModelError::PrefixTooShort {
                needed: MIN_PREFIX,
                got: prefix.len(),
            });
        }
        let logits = self.net.infer(&self.one_hot(prefix)?)?;
        let k = self.n_clusters;
        Ok(softmax_rows(&logits.data()[(prefix.len() - 1) * k..], k))
    }

    /// For each position `i` of `labels`, the predicted distribution of
    /// `labels[i]` given `labels[..i]`, or `None` when that prefix is shorter
    /// than [`MIN_PREFIX`]. One causal pass gives every prefix at once.
    pub fn transition_distributions(&self, labels: &[usize]) -> Result<Vec<Option<Vec<f64>>>> {
        let mut out = vec![None; labels.len().min(MIN_PREFIX)];
        if labels.len() <= MIN_PREFIX {
            return Ok(out);
        }
        let k = self.n_clusters;
        let logits = self.net.infer(&self.one_hot(&labels[..labels.len() - 1])?)?;
        let probs = softmax_rows(logits.data(), k);
        for i in MIN_PREFIX..labels.len() {
            out.push(Some(probs[(i - 1) * k..i * k].to_vec()));
        }
        Ok(out)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            kind: ModelKind::Crnn.to_string(),
            meta: serde_json::to_value(Meta {
                spec: self.spec.clone(),
                n_clusters: self.n_clusters,
            })
            .expect("specs serialise"),
            networks: vec![self.net.clone()],
        }
    }

    pub fn from_checkpoint(mut ck: Checkpoint) -> Result<Self> {
        let meta: Meta = parse_checkpoint(&ck, ModelKind::Crnn, 1)?;
        Ok(Crnn {
            spec: meta.spec,
            n_clusters: meta.n_clusters,
            net: ck.networks.remove(0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyclic(len: usize, offset: usize) -> Vec<usize> {
        (0..len).map(|i| (i + offset) % 3).collect()
    }

    fn trained() -> Crnn {
        let seqs: Vec<Vec<usize>> = (0..8).map(|o| cyclic(24, o)).collect();
        let spec = CrnnSpec {
            epochs: 120,
            lr: 1e-2,
            ..Default::default()
        };
        let (m, rep) = Crnn::train(&seqs, 3, spec, 9).unwrap();
        assert!(rep.is_finite());
        assert!(rep.loss_trace.last().unwrap() < &rep.loss_trace[0]);
        m
    }

    #[test]
    fn learns_a_cycle() {
        let m = trained();
        let mut correct = 0;
        let mut total = 0;
        for o in 0..3 {
            let s = cyclic(30, o);
            for i in MIN_PREFIX..s.len() {
                let p = m.predict(&s[..i]).unwrap();
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
                assert!(p.iter().all(|&v| v >= 0.0));
                let argmax = (0..3).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
                correct += usize::from(argmax == s[i]);
                total += 1;
            }
        }
        assert!(correct as f64 / total as f64 > 0.99, "{correct}/{total}");
    }

    #[test]
    fn batch_transitions_match_single_predictions() {
        let m = trained();
        let s = vec![0, 1, 2, 0, 2, 1, 0];
        let all = m.transition_distributions(&s).unwrap();
        assert_eq!(all.len(), s.len());
        assert!(all[..MIN_PREFIX].iter().all(Option::is_none));
        for (i, p) in all.iter().enumerate().skip(MIN_PREFIX) {
            assert_eq!(p.as_ref().unwrap(), &m.predict(&s[..i]).unwrap());
        }
    }

    #[test]
    fn short_prefix_and_bad_label() {
        let m = Crnn::new(CrnnSpec::default(), 4, 0).unwrap();
        assert!(matches!(
            m.predict(&[0, 1]),
            Err(ModelError::PrefixTooShort { needed: 3, got: 2 })
        ));
        assert!(matches!(
            m.predict(&[0, 1, 7]),
            Err(ModelError::LabelOutOfRange { label: 7, classes: 4 })
        ));
    }
}
