//! im2col convolution and its transpose, both on top of `dgemm`.

/// `c = op(a)·op(b) (+ c if accumulate)`, with `op(a)` of size m×k and
/// `op(b)` of size k×n, all row-major. `a_t`/`b_t` select the transposed
/// storage (`a` stored k×m, `b` stored n×k).
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_t: bool,
    b: &[f64],
    b_t: bool,
    c: &mut [f64],
    accumulate: bool,
) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    let beta = if accumulate { 1.0 } else { 0.0 };
    // SAFETY: the asserts above bound every index the strides can reach.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Geometry of one convolution window sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Window {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

impl Window {
    pub fn out_height(&self) -> usize {
        (self.height + 2 * self.padding - self.kernel) / self.stride + 1
    }

    pub fn out_width(&self) -> usize {
        (self.width + 2 * self.padding - self.kernel) / self.stride + 1
    }

    pub fn col_rows(&self) -> usize {
        self.channels * self.kernel * self.kernel
    }

    pub fn col_cols(&self) -> usize {
        self.out_height() * self.out_width()
    }

    /// Input coordinate hit by output position `o` and kernel tap `k`.
    fn source(&self, o: usize, k: usize, extent: usize) -> Option<usize> {
        (o * self.stride + k)
            .checked_sub(self.padding)
            .filter(|&p| p < extent)
    }

    /// Unfolds a C×H×W image into a (C·k·k)×(OH·OW) column matrix.
    pub fn im2col(&self, img: &[f64], cols: &mut [f64]) {
        let (oh, ow, k) = (self.out_height(), self.out_width(), self.kernel);
        let ncols = oh * ow;
        for c in 0..self.channels {
            for ky in 0..k {
                for kx in 0..k {
                    let row = (c * k + ky) * k + kx;
                    let dst = &mut cols[row * ncols..(row + 1) * ncols];
                    for oy in 0..oh {
                        let y = self.source(oy, ky, self.height);
                        for ox in 0..ow {
                            let x = self.source(ox, kx, self.width);
                            dst[oy * ow + ox] = match (y, x) {
                                (Some(y), Some(x)) => img[(c * self.height + y) * self.width + x],
                                _ => 0.0,
                            };
                        }
                    }
                }
            }
        }
    }

    /// Adjoint of [`im2col`](Self::im2col): scatters columns back into an
    /// image, summing overlapping contributions.
    pub fn col2im(&self, cols: &[f64], img: &mut [f64]) {
        let (oh, ow, k) = (self.out_height(), self.out_width(), self.kernel);
        let ncols = oh * ow;
        for c in 0..self.channels {
            for ky in 0..k {
                for kx in 0..k {
                    let row = (c * k + ky) * k + kx;
                    let src = &cols[row * ncols..(row + 1) * ncols];
                    for oy in 0..oh {
                        let Some(y) = self.source(oy, ky, self.height) else {
                            continue;
                        };
                        for ox in 0..ow {
                            if let Some(x) = self.source(ox, kx, self.width) {
                                img[(c * self.height + y) * self.width + x] += src[oy * ow + ox];
                            }
                        }
                    }
                }
            }
        }
    }
}
