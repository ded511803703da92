use crate::descriptors::chi2_unchecked;
use crate::par;

/// Symmetric pairwise distances stored as the strict upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64 + Sync + Send) -> Self {
        let data = par::map_range(n, |i| ((i + 1)..n).map(|j| f(i, j)).collect::<Vec<_>>()).concat();
        DistanceMatrix { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub(crate) fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.data[self.index(i, j)]
        }
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.index(i, j);
        self.data[k] = v;
    }
}

/// χ² distances between all pairs of L1-normalised rows of length `dim`.
pub fn chi2_matrix(data: &[f64], dim: usize) -> DistanceMatrix {
    let n = data.len() / dim;
    DistanceMatrix::from_fn(n, |i, j| {
        chi2_unchecked(&data[i * dim..(i + 1) * dim], &data[j * dim..(j + 1) * dim])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn condensed_indexing() {
        let m = DistanceMatrix::from_fn(5, |i, j| (10 * i + j) as f64);
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 0.0 } else { (10 * i.min(j) + i.max(j)) as f64 };
                assert_eq!(m.get(i, j), want);
            }
        }
    }
}
