//! Elman tanh recurrence with backpropagation through time.

use super::conv::gemm;
use super::{shape_err, Result, Tensor};

#[derive(Debug, Clone)]
pub(crate) struct RnnCache {
    x: Tensor,
    /// Hidden states `[N, T, H]`.
    hs: Vec<f64>,
    hidden: usize,
    return_sequences: bool,
}

pub(crate) fn forward(
    x: &Tensor,
    inputs: usize,
    hidden: usize,
    return_sequences: bool,
    wx: &[f64],
    wh: &[f64],
    b: &[f64],
) -> Result<(Tensor, RnnCache)> {
    let s = x.shape();
    if s.len() != 3 || s[2] != inputs || s[1] == 0 {
        return Err(shape_err(format!(
            "rnn expects [N, T ≥ 1, {inputs}], got {s:?}"
        )));
    }
    let (n, t_len) = (s[0], s[1]);
    let mut hs = vec![0.0; n * t_len * hidden];
    let mut pre = vec![0.0; hidden];
    for i in 0..n {
        for t in 0..t_len {
            let xt = &x.data()[(i * t_len + t) * inputs..][..inputs];
            pre.copy_from_slice(b);
            gemm(hidden, inputs, 1, wx, false, xt, false, &mut pre, true);
            if t > 0 {
                let prev = &hs[(i * t_len + t - 1) * hidden..][..hidden];
                gemm(hidden, hidden, 1, wh, false, prev, false, &mut pre, true);
            }
            let ht = &mut hs[(i * t_len + t) * hidden..][..hidden];
            for (h, p) in ht.iter_mut().zip(&pre) {
                *h = p.tanh();
            }
        }
    }
    let y = if return_sequences {
        Tensor::new(vec![n, t_len, hidden], hs.clone())?
    } else {
        let last = (0..n)
            .flat_map(|i| hs[(i * t_len + t_len - 1) * hidden..][..hidden].iter().copied())
            .collect();
        Tensor::new(vec![n, hidden], last)?
    };
    Ok((
        y,
        RnnCache {
            x: x.clone(),
            hs,
            hidden,
            return_sequences,
        },
    ))
}

pub(crate) fn backward(
    c: &RnnCache,
    dy: &Tensor,
    wx: &[f64],
    wh: &[f64],
    gwx: &mut [f64],
    gwh: &mut [f64],
    gb: &mut [f64],
) -> Result<Tensor> {
    let (n, t_len, inputs) = (c.x.shape()[0], c.x.shape()[1], c.x.shape()[2]);
    let hidden = c.hidden;
    let expected = if c.return_sequences { n * t_len * hidden } else { n * hidden };
    if dy.len() != expected {
        return Err(shape_err(format!(
            "rnn output gradient has {} values, expected {expected}",
            dy.len()
        )));
    }
    let mut dx = vec![0.0; c.x.len()];
    let mut dh = vec![0.0; hidden];
    let mut da = vec![0.0; hidden];
    for i in 0..n {
        dh.iter_mut().for_each(|v| *v = 0.0);
        for t in (0..t_len).rev() {
            let incoming = if c.return_sequences {
                Some(&dy.data()[(i * t_len + t) * hidden..][..hidden])
            } else if t == t_len - 1 {
                Some(&dy.data()[i * hidden..][..hidden])
            } else {
                None
            };
            if let Some(g) = incoming {
                for (d, v) in dh.iter_mut().zip(g) {
                    *d += v;
                }
            }
            let ht = &c.hs[(i * t_len + t) * hidden..][..hidden];
            for ((a, d), h) in da.iter_mut().zip(&dh).zip(ht) {
                *a = d * (1.0 - h * h);
            }
            let xt = &c.x.data()[(i * t_len + t) * inputs..][..inputs];
            gemm(hidden, 1, inputs, &da, false, xt, false, gwx, true);
            for (g, a) in gb.iter_mut().zip(&da) {
                *g += a;
            }
            gemm(1, hidden, inputs, &da, false, wx, false, &mut dx[(i * t_len + t) * inputs..][..inputs], false);
            if t > 0 {
                let prev = &c.hs[(i * t_len + t - 1) * hidden..][..hidden];
                gemm(hidden, 1, hidden, &da, false, prev, false, gwh, true);
                gemm(1, hidden, hidden, &da, false, wh, false, &mut dh, false);
            }
        }
    }
    Tensor::new(c.x.shape().to_vec(), dx)
}
