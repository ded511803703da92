use super::{kernel::rbf_cross, solve, ClusterError, Result, RhoRule, SmoProblem};
use crate::nn::gemm;

/// ν-one-class SVM, `f(x) = Σ α_s K(sv_s, x) − ρ`, with a logistic
/// proximity `σ(f(x)/scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OcSvmModel {
    pub dim: usize,
    pub gamma: f64,
    pub nu: f64,
    pub support: Vec<f64>,
    pub coef: Vec<f64>,
    pub rho: f64,
    /// Median |f| over the training points.
    pub scale: f64,
    pub max_violation: f64,
}

impl OcSvmModel {
    pub fn train(x: &[f64], dim: usize, nu: f64, gamma: f64, tolerance: f64) -> Result<Self> {
        let gram = super::rbf_gram(x, dim, gamma);
        Self::train_with_gram(x, dim, &gram, nu, gamma, tolerance)
    }

    /// Box `[0, 1]` with `Σα = νn`, started from the first `⌊νn⌋` variables
    /// at the upper bound.
    pub(crate) fn train_with_gram(
        x: &[f64],
        dim: usize,
        gram: &[f64],
        nu: f64,
        gamma: f64,
        tolerance: f64,
    ) -> Result<Self> {
        let n = x.len() / dim;
        if n == 0 {
            return Err(ClusterError::TooFewSamples { n, k: 1 });
        }
        let total = (nu.clamp(0.0, 1.0) * n as f64).max(f64::MIN_POSITIVE);
        let whole = (total.floor() as usize).min(n);
        let mut alpha = vec![0.0; n];
        alpha[..whole].iter_mut().for_each(|a| *a = 1.0);
        if whole < n {
            alpha[whole] = total - whole as f64;
        }
        let s = solve(SmoProblem {
            kernel: gram,
            y: &vec![1.0; n],
            p: &vec![0.0; n],
            upper: &vec![1.0; n],
            alpha,
            tolerance,
            max_iter: (100 * n).max(10_000_000),
            rho_rule: RhoRule::MinFree,
        });
        let sv: Vec<usize> = (0..n).filter(|&i| s.alpha[i] > 0.0).collect();
        let mut f: Vec<f64> = (0..n)
            .map(|i| sv.iter().map(|&j| s.alpha[j] * gram[i * n + j]).sum::<f64>() - s.rho)
            .collect();
        f.iter_mut().for_each(|v| *v = v.abs());
        f.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 {
            f[n / 2]
        } else {
            0.5 * (f[n / 2 - 1] + f[n / 2])
        };
        Ok(OcSvmModel {
            dim,
            gamma,
            nu,
            support: sv.iter().flat_map(|&i| x[i * dim..(i + 1) * dim].iter().copied()).collect(),
            coef: sv.iter().map(|&i| s.alpha[i]).collect(),
            rho: s.rho,
            scale: if median > 0.0 { median } else { 1.0 },
            max_violation: s.max_violation,
        })
    }

    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() % self.dim != 0 {
            return Err(ClusterError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let m = x.len() / self.dim;
        let k = rbf_cross(x, &self.support, self.dim, self.gamma);
        let mut f = vec![0.0; m];
        gemm(m, self.coef.len(), 1, &k, false, &self.coef, false, &mut f, false);
        f.iter_mut().for_each(|v| *v -= self.rho);
        Ok(f)
    }

    /// Proximity in (0, 1) of each row of `x`; 0.5 on the decision boundary.
    pub fn proximity(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .decision_values(x)?
            .into_iter()
            .map(|f| crate::nn::sigmoid(f / self.scale))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nu_property_and_far_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<f64> = (0..400).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = OcSvmModel::train(&x, 2, 0.1, 0.5, 1e-3).unwrap();
        let f = m.decision_values(&x).unwrap();
        let inside = f.iter().filter(|&&v| v >= 0.0).count();
        assert!(inside as f64 >= 0.9 * 200.0, "{inside}");
        let far = m.proximity(&[40.0, -40.0]).unwrap()[0];
        assert!(far < 0.5 && far > 0.0);
        // proximity is monotone in the decision value
        let probe = [0.0, 0.0, 0.9, 0.9, 3.0, 3.0];
        let (fv, pv) = (m.decision_values(&probe).unwrap(), m.proximity(&probe).unwrap());
        for a in 0..3 {
            for b in 0..3 {
                if fv[a] > fv[b] {
                    assert!(pv[a] > pv[b]);
                }
            }
        }
    }
}
