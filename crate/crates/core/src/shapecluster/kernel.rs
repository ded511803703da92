use crate::nn::gemm;
use crate::par;

/// `exp(−γ‖a_i − b_j‖²)` for all row pairs; result is `m × n` row-major.
pub fn rbf_cross(a: &[f64], b: &[f64], dim: usize, gamma: f64) -> Vec<f64> {
    let (m, n) = (a.len() / dim, b.len() / dim);
    let sq = |x: &[f64]| -> Vec<f64> { x.chunks(dim).map(|r| r.iter().map(|v| v * v).sum()).collect() };
    let (na, nb) = (sq(a), sq(b));
    // Row blocks of the dot-product matrix are independent gemm calls.
    const BLOCK: usize = 64;
    let blocks = m.div_ceil(BLOCK);
    par::map_range(blocks, |blk| {
        let lo = blk * BLOCK;
        let hi = (lo + BLOCK).min(m);
        let mut dots = vec![0.0; (hi - lo) * n];
        gemm(hi - lo, dim, n, &a[lo * dim..hi * dim], false, b, true, &mut dots, false);
        for (r, row) in dots.chunks_mut(n.max(1)).enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                let d2 = (na[lo + r] + nb[c] - 2.0 * *v).max(0.0);
                *v = (-gamma * d2).exp();
            }
        }
        dots
    })
    .concat()
}

/// Symmetric Gram matrix of `x` under the RBF kernel.
pub fn rbf_gram(x: &[f64], dim: usize, gamma: f64) -> Vec<f64> {
    let mut k = rbf_cross(x, x, dim, gamma);
    let n = x.len() / dim;
    // exact symmetry and unit diagonal regardless of rounding in the dot products
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in i + 1..n {
            k[j * n + i] = k[i * n + j];
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_formula() {
        let a: Vec<f64> = (0..15).map(|v| (v as f64 * 0.7).sin() * 3.0).collect();
        let b: Vec<f64> = (0..10).map(|v| (v as f64 * 1.3).cos() * 2.0).collect();
        let k = rbf_cross(&a, &b, 5, 0.1);
        for i in 0..3 {
            for j in 0..2 {
                let d2: f64 = (0..5).map(|t| (a[i * 5 + t] - b[j * 5 + t]).powi(2)).sum();
                assert!((k[i * 2 + j] - (-0.1 * d2).exp()).abs() < 1e-12);
            }
        }
        let g = rbf_gram(&a, 5, 0.1);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[1], g[3]);
    }
}
