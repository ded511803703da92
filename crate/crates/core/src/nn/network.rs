use rand::Rng;

use super::layer::Cache;
use super::{Layer, LayerSpec, NnError, Param, Result, Tensor};

/// A sequential stack of layers. `forward` keeps per-layer caches for the
/// next `backward`; `infer` is the cache-free, read-only path.
#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<Layer>,
    caches: Option<Vec<Cache>>,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

impl Network {
    pub fn new<R: Rng + ?Sized>(specs: &[LayerSpec], rng: &mut R) -> Result<Self> {
        let layers = specs
            .iter()
            .map(|s| Layer::new(s.clone(), rng))
            .collect::<Result<_>>()?;
        Ok(Self::from_layers(layers))
    }

    pub fn from_layers(layers: Vec<Layer>) -> Self {
        Network {
            layers,
            caches: None,
        }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec().clone()).collect()
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for l in &self.layers {
            let (y, c) = l.forward(&cur)?;
            caches.push(c);
            cur = y;
        }
        self.caches = Some(caches);
        Ok(cur)
    }

    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        let mut cur = x.clone();
        for l in &self.layers {
            cur = l.forward(&cur)?.0;
        }
        Ok(cur)
    }

    /// Backpropagates `grad` (d loss / d output), accumulating into every
    /// parameter's `grad`, and returns d loss / d input.
    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let caches = self.caches.take().ok_or(NnError::NoCachedForward)?;
        let mut g = grad.clone();
        for (l, c) in self.layers.iter_mut().zip(caches).rev() {
            g = l.backward(c, &g)?;
        }
        Ok(g)
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    pub fn params(&self) -> impl Iterator<Item = &Param> {
        self.layers.iter().flat_map(|l| l.params().iter())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.layers.iter_mut().flat_map(|l| l.params_mut().iter_mut())
    }

    pub fn n_params(&self) -> usize {
        self.params().map(|p| p.value.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mlp(seed: u64) -> Network {
        Network::new(
            &[
                LayerSpec::Dense { inputs: 4, outputs: 3 },
                LayerSpec::Relu,
                LayerSpec::Dense { inputs: 3, outputs: 2 },
            ],
            &mut ChaCha8Rng::seed_from_u64(seed),
        )
        .unwrap()
    }

    #[test]
    fn backward_requires_forward() {
        let mut n = mlp(0);
        assert!(matches!(
            n.backward(&Tensor::zeros(vec![1, 2])),
            Err(NnError::NoCachedForward)
        ));
    }

    #[test]
    fn zero_output_gradient_gives_zero_parameter_gradients() {
        let mut n = mlp(3);
        let x = Tensor::new(vec![2, 4], vec![0.3, -0.1, 0.8, 0.2, -0.5, 0.9, 0.1, -0.7]).unwrap();
        n.forward(&x).unwrap();
        n.backward(&Tensor::zeros(vec![2, 2])).unwrap();
        assert!(n.params().all(|p| p.grad.iter().all(|&g| g == 0.0)));
    }

    #[test]
    fn seeded_init_is_reproducible() {
        assert_eq!(mlp(9), mlp(9));
        assert_ne!(mlp(9), mlp(10));
        assert_eq!(mlp(9).n_params(), 4 * 3 + 3 + 3 * 2 + 2);
    }
}
