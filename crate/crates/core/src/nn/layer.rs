use rand::Rng;
use serde::{Deserialize, Serialize};

use super::conv::{gemm, Window};
use super::{rnn, shape_err, NnError, Result, Tensor};
use crate::par;

/// Declarative layer description; checkpoints store these verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LayerSpec {
    /// Affine map on the last axis.
    Dense { inputs: usize, outputs: usize },
    /// `[N, C, H, W] → [N, OC, OH, OW]`.
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    /// Transposed convolution, the adjoint geometry of `Conv2d`.
    Deconv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    /// Elman cell `h_t = tanh(Wx·x_t + Wh·h_{t-1} + b)` over `[N, T, inputs]`.
    /// Emits every hidden state (`[N, T, hidden]`) or only the last (`[N, hidden]`).
    RnnTanh {
        inputs: usize,
        hidden: usize,
        return_sequences: bool,
    },
    /// Per-sample reshape; the batch axis is kept.
    Reshape { shape: Vec<usize> },
    Relu,
    Sigmoid,
    Tanh,
    /// Softmax over the last axis.
    Softmax,
}

impl LayerSpec {
    fn param_shapes(&self) -> Vec<(usize, usize, usize)> {
        // (len, fan_in, fan_out); fan values drive the init bound, 0 means zeros
        match *self {
            LayerSpec::Dense { inputs, outputs } => {
                vec![(inputs * outputs, inputs, outputs), (outputs, 0, 0)]
            }
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            }
            | LayerSpec::Deconv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => {
                let kk = kernel * kernel;
                vec![
                    (in_channels * out_channels * kk, in_channels * kk, out_channels * kk),
                    (out_channels, 0, 0),
                ]
            }
            LayerSpec::RnnTanh { inputs, hidden, .. } => vec![
                (hidden * inputs, inputs, hidden),
                (hidden * hidden, hidden, hidden),
                (hidden, 0, 0),
            ],
            _ => Vec::new(),
        }
    }

    /// Lengths of this layer's parameter blobs, in storage order.
    pub fn param_lens(&self) -> Vec<usize> {
        self.param_shapes().into_iter().map(|(n, _, _)| n).collect()
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(NnError::InvalidSpec(format!("{self:?}: {m}")));
        match *self {
            LayerSpec::Dense { inputs, outputs } if inputs == 0 || outputs == 0 => {
                bad("zero width")
            }
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                ..
            }
            | LayerSpec::Deconv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                ..
            } if in_channels == 0 || out_channels == 0 || kernel == 0 || stride == 0 => {
                bad("zero extent")
            }
            LayerSpec::RnnTanh { inputs, hidden, .. } if inputs == 0 || hidden == 0 => {
                bad("zero width")
            }
            _ => Ok(()),
        }
    }
}

/// A trainable tensor with its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
}

impl Param {
    fn new(value: Vec<f64>) -> Self {
        let grad = vec![0.0; value.len()];
        Param { value, grad }
    }
}

/// Intermediate state kept from forward for backward.
#[derive(Debug, Clone)]
pub(crate) enum Cache {
    Input(Tensor),
    Output(Tensor),
    Columns { cols: Vec<Vec<f64>>, in_shape: Vec<usize> },
    Shape(Vec<usize>),
    Rnn(rnn::RnnCache),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    spec: LayerSpec,
    params: Vec<Param>,
}

impl Layer {
    /// Builds a layer with weights drawn from U(−a, a), a = √(6/(fan_in+fan_out)),
    /// and zero biases.
    pub fn new<R: Rng + ?Sized>(spec: LayerSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let params = spec
            .param_shapes()
            .into_iter()
            .map(|(len, fan_in, fan_out)| {
                if fan_in + fan_out == 0 {
                    return Param::new(vec![0.0; len]);
                }
                let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Param::new((0..len).map(|_| rng.random_range(-a..a)).collect())
            })
            .collect();
        Ok(Layer { spec, params })
    }

    /// Builds a layer from explicit parameter values.
    pub fn with_params(spec: LayerSpec, values: Vec<Vec<f64>>) -> Result<Self> {
        spec.validate()?;
        let shapes = spec.param_shapes();
        if shapes.len() != values.len()
            || shapes.iter().zip(&values).any(|((n, _, _), v)| *n != v.len())
        {
            return Err(shape_err(format!("parameter blobs do not match {spec:?}")));
        }
        Ok(Layer {
            spec,
            params: values.into_iter().map(Param::new).collect(),
        })
    }

    pub fn spec(&self) -> &LayerSpec {
        &self.spec
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    pub(crate) fn forward(&self, x: &Tensor) -> Result<(Tensor, Cache)> {
        match &self.spec {
            LayerSpec::Dense { inputs, outputs } => {
                let (inputs, outputs) = (*inputs, *outputs);
                if x.last_dim() != inputs || x.shape().len() < 2 {
                    return Err(shape_err(format!(
                        "dense expects [.., {inputs}], got {:?}",
                        x.shape()
                    )));
                }
                let rows = x.len() / inputs;
                let mut y = Vec::with_capacity(rows * outputs);
                for _ in 0..rows {
                    y.extend_from_slice(&self.params[1].value);
                }
                gemm(rows, inputs, outputs, x.data(), false, &self.params[0].value, true, &mut y, true);
                let mut shape = x.shape().to_vec();
                *shape.last_mut().expect("rank ≥ 2") = outputs;
                Ok((Tensor::new(shape, y)?, Cache::Input(x.clone())))
            }
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
            } => {
                let (n, win) = conv_window(x, *in_channels, *kernel, *stride, *padding)?;
                let oc = *out_channels;
                let (ckk, ohw) = (win.col_rows(), win.col_cols());
                let (w, b) = (&self.params[0].value, &self.params[1].value);
                let per_sample = par::map_range(n, |i| {
                    let mut cols = vec![0.0; ckk * ohw];
                    win.im2col(x.sample(i), &mut cols);
                    let mut y: Vec<f64> = b.iter().flat_map(|&v| std::iter::repeat_n(v, ohw)).collect();
                    gemm(oc, ckk, ohw, w, false, &cols, false, &mut y, true);
                    (y, cols)
                });
                let (ys, cols): (Vec<_>, Vec<_>) = per_sample.into_iter().unzip();
                let out = Tensor::new(
                    vec![n, oc, win.out_height(), win.out_width()],
                    ys.concat(),
                )?;
                Ok((
                    out,
                    Cache::Columns {
                        cols,
                        in_shape: x.shape().to_vec(),
                    },
                ))
            }
            LayerSpec::Deconv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
            } => {
                let (n, win) = deconv_window(x, *in_channels, *out_channels, *kernel, *stride, *padding)?;
                let (ic, hw) = (*in_channels, x.shape()[2] * x.shape()[3]);
                let (ockk, out_len) = (win.col_rows(), win.channels * win.height * win.width);
                let plane = win.height * win.width;
                let (w, b) = (&self.params[0].value, &self.params[1].value);
                let ys = par::map_range(n, |i| {
                    let mut cols = vec![0.0; ockk * hw];
                    gemm(ockk, ic, hw, w, true, x.sample(i), false, &mut cols, false);
                    let mut y: Vec<f64> = b.iter().flat_map(|&v| std::iter::repeat_n(v, plane)).collect();
                    debug_assert_eq!(y.len(), out_len);
                    win.col2im(&cols, &mut y);
                    y
                });
                let out = Tensor::new(vec![n, win.channels, win.height, win.width], ys.concat())?;
                Ok((out, Cache::Input(x.clone())))
            }
            LayerSpec::RnnTanh {
                inputs,
                hidden,
                return_sequences,
            } => {
                let (y, cache) = rnn::forward(
                    x,
                    *inputs,
                    *hidden,
                    *return_sequences,
                    &self.params[0].value,
                    &self.params[1].value,
                    &self.params[2].value,
                )?;
                Ok((y, Cache::Rnn(cache)))
            }
            LayerSpec::Reshape { shape } => {
                let mut full = vec![x.batch()];
                full.extend_from_slice(shape);
                let y = x.clone().reshape(full)?;
                Ok((y, Cache::Shape(x.shape().to_vec())))
            }
            LayerSpec::Relu => Ok((x.map(|v| v.max(0.0)), Cache::Input(x.clone()))),
            LayerSpec::Sigmoid => {
                let y = x.map(sigmoid);
                Ok((y.clone(), Cache::Output(y)))
            }
            LayerSpec::Tanh => {
                let y = x.map(f64::tanh);
                Ok((y.clone(), Cache::Output(y)))
            }
            LayerSpec::Softmax => {
                let k = x.last_dim();
                let y = Tensor::new(x.shape().to_vec(), super::softmax_rows(x.data(), k))?;
                Ok((y.clone(), Cache::Output(y)))
            }
        }
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub(crate) fn backward(&mut self, cache: Cache, dy: &Tensor) -> Result<Tensor> {
        match (&self.spec, cache) {
            (LayerSpec::Dense { inputs, outputs }, Cache::Input(x)) => {
                let (inputs, outputs) = (*inputs, *outputs);
                let rows = x.len() / inputs;
                check_grad_len(dy, rows * outputs)?;
                let (gw, rest) = self.params.split_at_mut(1);
                gemm(outputs, rows, inputs, dy.data(), true, x.data(), false, &mut gw[0].grad, true);
                for r in dy.data().chunks(outputs) {
                    for (g, v) in rest[0].grad.iter_mut().zip(r) {
                        *g += v;
                    }
                }
                let mut dx = vec![0.0; rows * inputs];
                gemm(rows, outputs, inputs, dy.data(), false, &gw[0].value, false, &mut dx, false);
                Tensor::new(x.shape().to_vec(), dx)
            }
            (
                LayerSpec::Conv2d {
                    out_channels,
                    kernel,
                    stride,
                    padding,
                    in_channels,
                },
                Cache::Columns { cols, in_shape },
            ) => {
                let win = Window {
                    channels: *in_channels,
                    height: in_shape[2],
                    width: in_shape[3],
                    kernel: *kernel,
                    stride: *stride,
                    padding: *padding,
                };
                let (oc, ckk, ohw) = (*out_channels, win.col_rows(), win.col_cols());
                let n = in_shape[0];
                check_grad_len(dy, n * oc * ohw)?;
                let w = &self.params[0].value;
                let per_sample = par::map_range(n, |i| {
                    let g = &dy.data()[i * oc * ohw..(i + 1) * oc * ohw];
                    let mut dw = vec![0.0; oc * ckk];
                    gemm(oc, ohw, ckk, g, false, &cols[i], true, &mut dw, false);
                    let mut dcols = vec![0.0; ckk * ohw];
                    gemm(ckk, oc, ohw, w, true, g, false, &mut dcols, false);
                    let mut dx = vec![0.0; win.channels * win.height * win.width];
                    win.col2im(&dcols, &mut dx);
                    (dw, dx)
                });
                let mut dx_all = Vec::with_capacity(in_shape.iter().product());
                for (i, (dw, dx)) in per_sample.into_iter().enumerate() {
                    add_into(&mut self.params[0].grad, &dw);
                    let g = &dy.data()[i * oc * ohw..(i + 1) * oc * ohw];
                    for (c, plane) in g.chunks(ohw).enumerate() {
                        self.params[1].grad[c] += plane.iter().sum::<f64>();
                    }
                    dx_all.extend(dx);
                }
                Tensor::new(in_shape, dx_all)
            }
            (
                LayerSpec::Deconv2d {
                    in_channels,
                    out_channels,
                    kernel,
                    stride,
                    padding,
                },
                Cache::Input(x),
            ) => {
                let (n, win) = deconv_window(&x, *in_channels, *out_channels, *kernel, *stride, *padding)?;
                let (ic, hw, ockk) = (*in_channels, x.shape()[2] * x.shape()[3], win.col_rows());
                let out_len = win.channels * win.height * win.width;
                let plane = win.height * win.width;
                check_grad_len(dy, n * out_len)?;
                let w = &self.params[0].value;
                let per_sample = par::map_range(n, |i| {
                    let g = &dy.data()[i * out_len..(i + 1) * out_len];
                    let mut dcols = vec![0.0; ockk * hw];
                    win.im2col(g, &mut dcols);
                    let mut dx = vec![0.0; ic * hw];
                    gemm(ic, ockk, hw, w, false, &dcols, false, &mut dx, false);
                    let mut dw = vec![0.0; ic * ockk];
                    gemm(ic, hw, ockk, x.sample(i), false, &dcols, true, &mut dw, false);
                    (dw, dx)
                });
                let mut dx_all = Vec::with_capacity(x.len());
                for (i, (dw, dx)) in per_sample.into_iter().enumerate() {
                    add_into(&mut self.params[0].grad, &dw);
                    let g = &dy.data()[i * out_len..(i + 1) * out_len];
                    for (c, p) in g.chunks(plane).enumerate() {
                        self.params[1].grad[c] += p.iter().sum::<f64>();
                    }
                    dx_all.extend(dx);
                }
                Tensor::new(x.shape().to_vec(), dx_all)
            }
            (LayerSpec::RnnTanh { .. }, Cache::Rnn(cache)) => {
                let [gx, gh, gb] = &mut self.params[..] else {
                    unreachable!("rnn has three parameter blobs")
                };
                rnn::backward(&cache, dy, &gx.value, &gh.value, &mut gx.grad, &mut gh.grad, &mut gb.grad)
            }
            (LayerSpec::Reshape { .. }, Cache::Shape(shape)) => dy.clone().reshape(shape),
            (LayerSpec::Relu, Cache::Input(x)) => {
                check_grad_len(dy, x.len())?;
                let d = x
                    .data()
                    .iter()
                    .zip(dy.data())
                    .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
                    .collect();
                Tensor::new(x.shape().to_vec(), d)
            }
            (LayerSpec::Sigmoid, Cache::Output(y)) => {
                check_grad_len(dy, y.len())?;
                let d = y.data().iter().zip(dy.data()).map(|(&s, &g)| g * s * (1.0 - s)).collect();
                Tensor::new(y.shape().to_vec(), d)
            }
            (LayerSpec::Tanh, Cache::Output(y)) => {
                check_grad_len(dy, y.len())?;
                let d = y.data().iter().zip(dy.data()).map(|(&t, &g)| g * (1.0 - t * t)).collect();
                Tensor::new(y.shape().to_vec(), d)
            }
            (LayerSpec::Softmax, Cache::Output(y)) => {
                check_grad_len(dy, y.len())?;
                let k = y.last_dim();
                let mut d = Vec::with_capacity(y.len());
                for (s, g) in y.data().chunks(k).zip(dy.data().chunks(k)) {
                    let dot: f64 = s.iter().zip(g).map(|(a, b)| a * b).sum();
                    d.extend(s.iter().zip(g).map(|(&si, &gi)| si * (gi - dot)));
                }
                Tensor::new(y.shape().to_vec(), d)
            }
            (spec, _) => Err(shape_err(format!("cache does not belong to {spec:?}"))),
        }
    }
}

pub(crate) fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

fn add_into(acc: &mut [f64], v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

fn check_grad_len(dy: &Tensor, n: usize) -> Result<()> {
    if dy.len() != n {
        return Err(shape_err(format!(
            "output gradient has {} values, expected {n}",
            dy.len()
        )));
    }
    Ok(())
}

fn conv_window(
    x: &Tensor,
    channels: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
) -> Result<(usize, Window)> {
    let s = x.shape();
    if s.len() != 4 || s[1] != channels || s[2] + 2 * padding < kernel || s[3] + 2 * padding < kernel {
        return Err(shape_err(format!(
            "conv2d expects [N, {channels}, H, W] with H, W + 2·{padding} ≥ {kernel}, got {s:?}"
        )));
    }
    Ok((
        s[0],
        Window {
            channels,
            height: s[2],
            width: s[3],
            kernel,
            stride,
            padding,
        },
    ))
}

/// The window that maps a transposed convolution's output back onto its input.
fn deconv_window(
    x: &Tensor,
    in_channels: usize,
    out_channels: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
) -> Result<(usize, Window)> {
    let s = x.shape();
    let out = |h: usize| ((h - 1) * stride + kernel).checked_sub(2 * padding).filter(|&o| o > 0);
    match (s.len() == 4 && s[1] == in_channels && s[2] > 0 && s[3] > 0)
        .then(|| (out(s[2]), out(s[3])))
    {
        Some((Some(height), Some(width))) => Ok((
            s[0],
            Window {
                channels: out_channels,
                height,
                width,
                kernel,
                stride,
                padding,
            },
        )),
        _ => Err(shape_err(format!(
            "deconv2d expects [N, {in_channels}, H, W], got {s:?}"
        ))),
    }
}
