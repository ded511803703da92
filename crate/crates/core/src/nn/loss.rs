use super::{shape_err, Result, Tensor};

/// Mean squared error and its gradient with respect to `pred`.
pub fn mse_loss(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    if pred.shape() != target.shape() {
        return Err(shape_err(format!(
            "mse: {:?} vs {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let n = pred.len().max(1) as f64;
    let mut loss = 0.0;
    let grad = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(p, t)| {
            let d = p - t;
            loss += d * d;
            2.0 * d / n
        })
        .collect();
    Ok((loss / n, Tensor::new(pred.shape().to_vec(), grad)?))
}

/// `−½ Σ (1 + logvar − mu² − exp(logvar))` averaged over the batch axis.
/// Returns the loss with gradients for `mu` and `logvar`.
pub fn kl_loss(mu: &Tensor, logvar: &Tensor) -> Result<(f64, Tensor, Tensor)> {
    if mu.shape() != logvar.shape() {
        return Err(shape_err(format!(
            "kl: {:?} vs {:?}",
            mu.shape(),
            logvar.shape()
        )));
    }
    let batch = mu.batch().max(1) as f64;
    let mut loss = 0.0;
    let mut dmu = Vec::with_capacity(mu.len());
    let mut dlv = Vec::with_capacity(mu.len());
    for (&m, &lv) in mu.data().iter().zip(logvar.data()) {
        let e = lv.exp();
        loss += -0.5 * (1.0 + lv - m * m - e);
        dmu.push(m / batch);
        dlv.push(0.5 * (e - 1.0) / batch);
    }
    Ok((
        loss / batch,
        Tensor::new(mu.shape().to_vec(), dmu)?,
        Tensor::new(mu.shape().to_vec(), dlv)?,
    ))
}

/// Row-wise log-softmax over rows of length `k`.
pub fn log_softmax(x: &[f64], k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    for row in x.chunks(k) {
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        out.extend(row.iter().map(|v| v - lse));
    }
    out
}

pub fn softmax_rows(x: &[f64], k: usize) -> Vec<f64> {
    log_softmax(x, k).into_iter().map(f64::exp).collect()
}

/// Mean categorical cross-entropy of logits `[rows, K]` against class
/// indices, computed through log-softmax. Gradient is w.r.t. the logits.
pub fn cross_entropy(logits: &Tensor, classes: &[usize]) -> Result<(f64, Tensor)> {
    let k = logits.last_dim();
    let rows = logits.len() / k.max(1);
    if rows != classes.len() || classes.iter().any(|&c| c >= k) {
        return Err(shape_err(format!(
            "cross-entropy: {rows} rows of {k} logits vs {} targets",
            classes.len()
        )));
    }
    let lsm = log_softmax(logits.data(), k);
    let n = rows.max(1) as f64;
    let mut loss = 0.0;
    let mut grad: Vec<f64> = lsm.iter().map(|v| v.exp() / n).collect();
    for (r, &c) in classes.iter().enumerate() {
        loss -= lsm[r * k + c];
        grad[r * k + c] -= 1.0 / n;
    }
    Ok((loss / n, Tensor::new(logits.shape().to_vec(), grad)?))
}
