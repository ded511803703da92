//! Track image ↔ square model input, and model rows ↔ track frames.

use crate::descriptors::TrackImage;
use crate::nn::{resize_rows, row_source_frame};

/// Resizes a track image to `size × size`: linear along time to `size` rows,
/// then (when `size` differs from the descriptor width) linear along the
/// contour axis as well. Both resamplings use the align-corners convention.
pub fn square_image(t: &TrackImage, size: usize) -> Vec<f64> {
    let tall = resize_rows(&t.data, t.rows, t.cols, size);
    if t.cols == size {
        return tall;
    }
    let transposed = transpose(&tall, size, t.cols);
    let narrowed = resize_rows(&transposed, t.cols, size, size);
    transpose(&narrowed, size, size)
}

fn transpose(m: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; m.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = m[r * cols + c];
        }
    }
    out
}

/// Maps per-row errors of a resized image back onto the `h` frames of the
/// track. Row `j` belongs to frame `round(j·(h−1)/(S−1))`; a frame averages
/// its rows. When `h > S` some frames own no row and take the value
/// interpolated at their position on the row axis instead.
pub fn frame_errors_from_rows(row_err: &[f64], h: usize) -> Vec<f64> {
    let s = row_err.len();
    assert!(s >= 1 && h >= 1);
    if h == 1 {
        return vec![row_err.iter().sum::<f64>() / s as f64];
    }
    let mut sum = vec![0.0; h];
    let mut count = vec![0usize; h];
    for (j, &e) in row_err.iter().enumerate() {
        let f = row_source_frame(j, h, s);
        sum[f] += e;
        count[f] += 1;
    }
    (0..h)
        .map(|f| {
            if count[f] > 0 {
                sum[f] / count[f] as f64
            } else {
                let pos = f as f64 * (s - 1) as f64 / (h - 1) as f64;
                let lo = (pos.floor() as usize).min(s - 1);
                let hi = (lo + 1).min(s - 1);
                let w = pos - lo as f64;
                row_err[lo] + w * (row_err[hi] - row_err[lo])
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_when_track_is_square() {
        let e: Vec<f64> = (0..256).map(|v| v as f64).collect();
        assert_eq!(frame_errors_from_rows(&e, 256), e);
    }

    #[test]
    fn equal_row_errors_give_equal_frames() {
        for h in [6, 50, 300] {
            let f = frame_errors_from_rows(&[0.25; 64], h);
            assert_eq!(f.len(), h);
            assert!(f.iter().all(|&v| (v - 0.25).abs() < 1e-15));
        }
    }

    #[test]
    fn spike_frame_receives_maximum() {
        // a single anomalous frame, upsampled: its own rows carry the most error
        for (h, spike) in [(6, 2), (48, 30), (40, 0), (200, 101)] {
            let mut rows = vec![vec![0.0; 4]; h];
            rows[spike] = vec![1.0; 4];
            let img = TrackImage::from_rows(&rows);
            let sq = square_image(&img, 64);
            let row_err: Vec<f64> = sq.chunks(64).map(|r| r.iter().map(|v| v * v).sum()).collect();
            let f = frame_errors_from_rows(&row_err, h);
            let argmax = (0..h).max_by(|&a, &b| f[a].total_cmp(&f[b])).unwrap();
            assert_eq!(argmax, spike, "h={h}");
        }
    }

    #[test]
    fn square_image_keeps_corners() {
        let rows: Vec<Vec<f64>> = (0..6).map(|r| (0..256).map(|c| (r * 1000 + c) as f64).collect()).collect();
        let img = TrackImage::from_rows(&rows);
        let sq = square_image(&img, 32);
        assert_eq!(sq.len(), 32 * 32);
        assert_eq!(sq[0], 0.0);
        assert_eq!(sq[31], 255.0);
        assert_eq!(sq[31 * 32], 5000.0);
        assert!((sq[32 * 32 - 1] - 5255.0).abs() < 1e-9);
    }
}
