//! Central finite-difference checks of the analytic gradients.
//!
//! Layers are probed through the scalar `L = Σ r ⊙ layer(x)` with a fixed
//! random `r`, so `dL/dy = r`. The reported error is norm-wise:
//! `‖g_analytic − g_numeric‖ / max(‖g_analytic‖, ‖g_numeric‖)` over every
//! probed input and parameter coordinate.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{cross_entropy, kl_loss, mse_loss, LayerSpec, Network, Result, Tensor};

/// Finite-difference step.
pub const FD_STEP: f64 = 1e-3;
/// Coordinates probed per blob; larger blobs are subsampled.
const MAX_PROBES: usize = 48;

fn rel_err(a: &[f64], n: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(n).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(n));
    if scale < 1e-12 {
        norm(&diff)
    } else {
        norm(&diff) / scale
    }
}

fn probes(len: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if len <= MAX_PROBES {
        (0..len).collect()
    } else {
        let mut v = sample(rng, len, MAX_PROBES).into_vec();
        v.sort_unstable();
        v
    }
}

fn random_vec(n: usize, rng: &mut ChaCha8Rng, avoid_zero: bool) -> Vec<f64> {
    (0..n)
        .map(|_| loop {
            let v: f64 = rng.random_range(-1.0..1.0);
            // keep clear of the ReLU kink so ±step never crosses it
            if !avoid_zero || v.abs() > 0.05 {
                break v;
            }
        })
        .collect()
}

/// Checks one randomly initialised layer on a random input of `input_shape`.
pub fn check_layer(spec: &LayerSpec, input_shape: &[usize], seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Network::new(std::slice::from_ref(spec), &mut rng)?;
    let n_in: usize = input_shape.iter().product();
    let x = Tensor::new(
        input_shape.to_vec(),
        random_vec(n_in, &mut rng, matches!(spec, LayerSpec::Relu)),
    )?;
    let y = net.forward(&x)?;
    let r = Tensor::new(y.shape().to_vec(), random_vec(y.len(), &mut rng, false))?;
    let dx = net.backward(&r)?;

    let objective = |net: &Network, x: &Tensor| -> Result<f64> {
        let y = net.infer(x)?;
        Ok(y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum())
    };

    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    for i in probes(n_in, &mut rng) {
        let mut xp = x.clone();
        xp.data_mut()[i] += FD_STEP;
        let fp = objective(&net, &xp)?;
        xp.data_mut()[i] -= 2.0 * FD_STEP;
        let fm = objective(&net, &xp)?;
        analytic.push(dx.data()[i]);
        numeric.push((fp - fm) / (2.0 * FD_STEP));
    }
    let grads: Vec<Vec<f64>> = net.params().map(|p| p.grad.clone()).collect();
    for (pi, g) in grads.iter().enumerate() {
        for i in probes(g.len(), &mut rng) {
            let nudge = |net: &mut Network, d: f64| {
                net.params_mut().nth(pi).expect("param index").value[i] += d;
            };
            nudge(&mut net, FD_STEP);
            let fp = objective(&net, &x)?;
            nudge(&mut net, -2.0 * FD_STEP);
            let fm = objective(&net, &x)?;
            nudge(&mut net, FD_STEP);
            analytic.push(g[i]);
            numeric.push((fp - fm) / (2.0 * FD_STEP));
        }
    }
    Ok(rel_err(&analytic, &numeric))
}

fn check_scalar_fn(
    x: &[f64],
    analytic: &[f64],
    f: impl Fn(&[f64]) -> Result<f64>,
) -> Result<f64> {
    let mut numeric = Vec::with_capacity(x.len());
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        xp[i] = x[i] + FD_STEP;
        let fp = f(&xp)?;
        xp[i] = x[i] - FD_STEP;
        let fm = f(&xp)?;
        xp[i] = x[i];
        numeric.push((fp - fm) / (2.0 * FD_STEP));
    }
    Ok(rel_err(analytic, &numeric))
}

/// Gradient of the mean squared error w.r.t. the prediction.
pub fn check_mse(shape: &[usize], seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = shape.iter().product();
    let p = Tensor::new(shape.to_vec(), random_vec(n, &mut rng, false))?;
    let t = Tensor::new(shape.to_vec(), random_vec(n, &mut rng, false))?;
    let (_, g) = mse_loss(&p, &t)?;
    check_scalar_fn(p.data(), g.data(), |v| {
        Ok(mse_loss(&Tensor::new(shape.to_vec(), v.to_vec())?, &t)?.0)
    })
}

/// Gradients of the KL term w.r.t. both `mu` and `logvar`.
pub fn check_kl(shape: &[usize], seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = shape.iter().product();
    let mu = random_vec(n, &mut rng, false);
    let lv = random_vec(n, &mut rng, false);
    let joint: Vec<f64> = mu.iter().chain(&lv).copied().collect();
    let (_, gm, gl) = kl_loss(
        &Tensor::new(shape.to_vec(), mu)?,
        &Tensor::new(shape.to_vec(), lv)?,
    )?;
    let analytic: Vec<f64> = gm.data().iter().chain(gl.data()).copied().collect();
    check_scalar_fn(&joint, &analytic, |v| {
        let (m, l) = v.split_at(n);
        Ok(kl_loss(
            &Tensor::new(shape.to_vec(), m.to_vec())?,
            &Tensor::new(shape.to_vec(), l.to_vec())?,
        )?
        .0)
    })
}

/// Gradient of the cross-entropy w.r.t. the logits of `rows × classes`.
pub fn check_cross_entropy(rows: usize, classes: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let logits: Vec<f64> = random_vec(rows * classes, &mut rng, false)
        .into_iter()
        .map(|v| 3.0 * v)
        .collect();
    let targets: Vec<usize> = (0..rows).map(|_| rng.random_range(0..classes)).collect();
    let shape = vec![rows, classes];
    let (_, g) = cross_entropy(&Tensor::new(shape.clone(), logits.clone())?, &targets)?;
    check_scalar_fn(&logits, g.data(), |v| {
        Ok(cross_entropy(&Tensor::new(shape.clone(), v.to_vec())?, &targets)?.0)
    })
}

/// One small representative configuration per layer kind, with an input shape.
pub fn layer_cases() -> Vec<(&'static str, LayerSpec, Vec<usize>)> {
    vec![
        ("dense", LayerSpec::Dense { inputs: 5, outputs: 4 }, vec![3, 5]),
        (
            "conv2d",
            LayerSpec::Conv2d {
                in_channels: 2,
                out_channels: 3,
                kernel: 4,
                stride: 2,
                padding: 1,
            },
            vec![2, 2, 6, 6],
        ),
        (
            "deconv2d",
            LayerSpec::Deconv2d {
                in_channels: 3,
                out_channels: 2,
                kernel: 4,
                stride: 2,
                padding: 1,
            },
            vec![2, 3, 3, 3],
        ),
        (
            "rnn-tanh",
            LayerSpec::RnnTanh {
                inputs: 4,
                hidden: 3,
                return_sequences: false,
            },
            vec![2, 5, 4],
        ),
        (
            "rnn-tanh-seq",
            LayerSpec::RnnTanh {
                inputs: 3,
                hidden: 4,
                return_sequences: true,
            },
            vec![2, 4, 3],
        ),
        ("relu", LayerSpec::Relu, vec![4, 6]),
        ("sigmoid", LayerSpec::Sigmoid, vec![4, 6]),
        ("tanh", LayerSpec::Tanh, vec![4, 6]),
        ("softmax", LayerSpec::Softmax, vec![4, 6]),
        ("reshape", LayerSpec::Reshape { shape: vec![2, 3] }, vec![4, 6]),
    ]
}
