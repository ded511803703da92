/// Resamples an `h × w` row-major matrix to `out_h` rows by linear
/// interpolation along the row axis, align-corners style: output row `j`
/// samples input position `j·(h−1)/(out_h−1)`.
pub fn resize_rows(m: &[f64], h: usize, w: usize, out_h: usize) -> Vec<f64> {
    assert_eq!(m.len(), h * w, "matrix size");
    assert!(h >= 1 && out_h >= 1);
    if h == out_h {
        return m.to_vec();
    }
    let mut out = Vec::with_capacity(out_h * w);
    for j in 0..out_h {
        let pos = if out_h == 1 {
            0.0
        } else {
            j as f64 * (h - 1) as f64 / (out_h - 1) as f64
        };
        let lo = (pos.floor() as usize).min(h - 1);
        let hi = (lo + 1).min(h - 1);
        let f = pos - lo as f64;
        let (a, b) = (&m[lo * w..(lo + 1) * w], &m[hi * w..(hi + 1) * w]);
        out.extend(a.iter().zip(b).map(|(x, y)| x + f * (y - x)));
    }
    out
}

/// Track frame that resized row `j` (of `out_h`) came from: `round(j·(h−1)/(out_h−1))`.
pub fn row_source_frame(j: usize, h: usize, out_h: usize) -> usize {
    if out_h <= 1 {
        return 0;
    }
    (j as f64 * (h - 1) as f64 / (out_h - 1) as f64).round() as usize
}
