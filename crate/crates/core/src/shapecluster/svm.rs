use std::collections::BTreeMap;

use super::{kernel::rbf_cross, solve, ClusterError, Result, RhoRule, SmoProblem};
use crate::nn::gemm;
use crate::par;

/// One-vs-rest RBF C-SVC. Each class machine is
/// `f_c(x) = Σ_s coef[c][s]·K(sv_s, x) − rho[c]` over a shared support set.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub dim: usize,
    pub gamma: f64,
    pub c: f64,
    /// Label carried by each machine, ascending.
    pub class_ids: Vec<usize>,
    /// Support vectors, `n_sv × dim`.
    pub support: Vec<f64>,
    /// `class_ids.len() × n_sv`.
    pub coef: Vec<f64>,
    pub rho: Vec<f64>,
    /// Largest KKT violation left by any binary problem.
    pub max_violation: f64,
}

/// Dual solutions of the binary problems on a precomputed Gram matrix.
pub(crate) struct OvrFit {
    pub class_ids: Vec<usize>,
    /// Per class: `y_i α_i` for every training point.
    pub signed_alpha: Vec<Vec<f64>>,
    pub rho: Vec<f64>,
    pub max_violation: f64,
}

pub(crate) fn check_classes(labels: &[usize]) -> Result<Vec<usize>> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1;
    }
    if let Some((&class, &count)) = counts.iter().find(|(_, &c)| c < 2) {
        return Err(ClusterError::ClassUnderflow { class, count });
    }
    if counts.len() < 2 {
        let (&class, &count) = counts.iter().next().unwrap_or((&0, &0));
        return Err(ClusterError::ClassUnderflow { class, count });
    }
    Ok(counts.into_keys().collect())
}

pub(crate) fn fit_ovr(gram: &[f64], labels: &[usize], c: f64, tolerance: f64) -> Result<OvrFit> {
    let class_ids = check_classes(labels)?;
    let n = labels.len();
    let upper = vec![c; n];
    let p = vec![-1.0; n];
    let fits = par::map(&class_ids, |&cls| {
        let y: Vec<f64> = labels.iter().map(|&l| if l == cls { 1.0 } else { -1.0 }).collect();
        let s = solve(SmoProblem {
            kernel: gram,
            y: &y,
            p: &p,
            upper: &upper,
            alpha: vec![0.0; n],
            tolerance,
            max_iter: (100 * n).max(10_000_000),
            rho_rule: RhoRule::Average,
        });
        let signed: Vec<f64> = s.alpha.iter().zip(&y).map(|(a, y)| a * y).collect();
        (signed, s.rho, s.max_violation)
    });
    let mut out = OvrFit {
        class_ids,
        signed_alpha: Vec::new(),
        rho: Vec::new(),
        max_violation: 0.0,
    };
    for (a, r, v) in fits {
        out.signed_alpha.push(a);
        out.rho.push(r);
        out.max_violation = out.max_violation.max(v);
    }
    Ok(out)
}

/// Index of the largest value; ties go to the first.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

impl SvmModel {
    /// Trains on `x` (rows of `dim`) with labels; solves to KKT tolerance `tolerance`.
    pub fn train(x: &[f64], dim: usize, labels: &[usize], c: f64, gamma: f64, tolerance: f64) -> Result<Self> {
        let gram = super::rbf_gram(x, dim, gamma);
        Self::train_with_gram(x, dim, &gram, labels, c, gamma, tolerance)
    }

    pub(crate) fn train_with_gram(
        x: &[f64],
        dim: usize,
        gram: &[f64],
        labels: &[usize],
        c: f64,
        gamma: f64,
        tolerance: f64,
    ) -> Result<Self> {
        let fit = fit_ovr(gram, labels, c, tolerance)?;
        let sv: Vec<usize> = (0..labels.len())
            .filter(|&i| fit.signed_alpha.iter().any(|a| a[i] != 0.0))
            .collect();
        let support = sv.iter().flat_map(|&i| x[i * dim..(i + 1) * dim].iter().copied()).collect();
        let coef = fit
            .signed_alpha
            .iter()
            .flat_map(|a| sv.iter().map(move |&i| a[i]))
            .collect();
        Ok(SvmModel {
            dim,
            gamma,
            c,
            class_ids: fit.class_ids,
            support,
            coef,
            rho: fit.rho,
            max_violation: fit.max_violation,
        })
    }

    pub fn n_support(&self) -> usize {
        self.support.len() / self.dim.max(1)
    }

    /// Raw per-class decision values for each row of `x`, `m × classes`.
    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() % self.dim != 0 {
            return Err(ClusterError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let m = x.len() / self.dim;
        let (nsv, nc) = (self.n_support(), self.class_ids.len());
        let k = rbf_cross(x, &self.support, self.dim, self.gamma);
        let mut out = vec![0.0; m * nc];
        gemm(m, nsv, nc, &k, false, &self.coef, true, &mut out, false);
        for row in out.chunks_mut(nc) {
            for (v, r) in row.iter_mut().zip(&self.rho) {
                *v -= r;
            }
        }
        Ok(out)
    }

    /// Predicted label of each row of `x`.
    pub fn predict_batch(&self, x: &[f64]) -> Result<Vec<usize>> {
        let nc = self.class_ids.len();
        Ok(self
            .decision_values(x)?
            .chunks(nc)
            .map(|r| self.class_ids[argmax(r)])
            .collect())
    }

    /// Label (argmax of the decision values) and the raw decision values.
    pub fn predict(&self, x: &[f64]) -> Result<(usize, Vec<f64>)> {
        if x.len() != self.dim {
            return Err(ClusterError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let scores = self.decision_values(x)?;
        Ok((self.class_ids[argmax(&scores)], scores))
    }
}
