//! Sequential minimal optimisation for
//! `min ½ αᵀQα + pᵀα  s.t.  yᵀα = const, 0 ≤ α_i ≤ C_i`, with
//! `Q_ij = y_i y_j K_ij`, second-order working-set selection and a fully
//! cached kernel matrix.

const TAU: f64 = 1e-12;

/// How the offset is recovered from the optimal gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoRule {
    /// Mean of `y_i G_i` over free variables.
    Average,
    /// Smallest `y_i G_i` over free variables, so no free variable lands on
    /// the negative side of the decision function.
    MinFree,
}

pub struct SmoProblem<'a> {
    /// Full `n × n` kernel matrix.
    pub kernel: &'a [f64],
    pub y: &'a [f64],
    pub p: &'a [f64],
    pub upper: &'a [f64],
    /// Feasible starting point.
    pub alpha: Vec<f64>,
    pub tolerance: f64,
    pub max_iter: usize,
    pub rho_rule: RhoRule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    /// Largest KKT violation (`max_up −yG − min_low −yG`) at exit.
    pub max_violation: f64,
    pub converged: bool,
}

pub fn solve(pr: SmoProblem<'_>) -> SmoSolution {
    let n = pr.y.len();
    let k = pr.kernel;
    let (y, c) = (pr.y, pr.upper);
    let mut a = pr.alpha;
    let q = |i: usize, j: usize| y[i] * y[j] * k[i * n + j];

    let mut g = pr.p.to_vec();
    for i in (0..n).filter(|&i| a[i] != 0.0) {
        for j in 0..n {
            g[j] += a[i] * q(i, j);
        }
    }
    let up = |a: &[f64], t: usize| if y[t] > 0.0 { a[t] < c[t] } else { a[t] > 0.0 };
    let low = |a: &[f64], t: usize| if y[t] > 0.0 { a[t] > 0.0 } else { a[t] < c[t] };

    let mut iterations = 0;
    let mut violation;
    loop {
        // i maximises −y_t G_t over the "can move up" set
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if up(&a, t) && -y[t] * g[t] > gmax {
                gmax = -y[t] * g[t];
                i = t;
            }
        }
        // j minimises the second-order objective decrease over the "can move down" set
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !low(&a, t) {
                continue;
            }
            let yg = y[t] * g[t];
            gmax2 = gmax2.max(yg);
            if i == usize::MAX {
                continue;
            }
            let diff = gmax + yg;
            if diff > 0.0 {
                let quad = k[i * n + i] + k[t * n + t] - 2.0 * k[i * n + t];
                let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                if obj < best {
                    best = obj;
                    j = t;
                }
            }
        }
        violation = gmax + gmax2;
        if i == usize::MAX || j == usize::MAX || violation < pr.tolerance || iterations >= pr.max_iter {
            break;
        }
        iterations += 1;

        let (ai, aj) = (a[i], a[j]);
        let quad = (k[i * n + i] + k[j * n + j] - 2.0 * k[i * n + j]).max(TAU);
        if y[i] != y[j] {
            let delta = (-g[i] - g[j]) / quad;
            let diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if diff > 0.0 {
                if a[j] < 0.0 {
                    a[j] = 0.0;
                    a[i] = diff;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = -diff;
            }
            if diff > c[i] - c[j] {
                if a[i] > c[i] {
                    a[i] = c[i];
                    a[j] = c[i] - diff;
                }
            } else if a[j] > c[j] {
                a[j] = c[j];
                a[i] = c[j] + diff;
            }
        } else {
            let delta = (g[i] - g[j]) / quad;
            let sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if sum > c[i] {
                if a[i] > c[i] {
                    a[i] = c[i];
                    a[j] = sum - c[i];
                }
            } else if a[j] < 0.0 {
                a[j] = 0.0;
                a[i] = sum;
            }
            if sum > c[j] {
                if a[j] > c[j] {
                    a[j] = c[j];
                    a[i] = sum - c[j];
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = sum;
            }
        }
        let (di, dj) = (a[i] - ai, a[j] - aj);
        for t in 0..n {
            g[t] += q(i, t) * di + q(j, t) * dj;
        }
    }

    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free = Vec::new();
    for t in 0..n {
        let yg = y[t] * g[t];
        let at_upper = a[t] >= c[t];
        let at_lower = a[t] <= 0.0;
        if at_upper || at_lower {
            // a variable at a bound only constrains ρ from one side
            if (at_upper && y[t] < 0.0) || (at_lower && y[t] > 0.0) {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free.push(yg);
        }
    }
    let rho = if free.is_empty() {
        (ub + lb) / 2.0
    } else {
        match pr.rho_rule {
            RhoRule::Average => free.iter().sum::<f64>() / free.len() as f64,
            RhoRule::MinFree => free.iter().copied().fold(f64::INFINITY, f64::min),
        }
    };
    SmoSolution {
        alpha: a,
        rho,
        iterations,
        max_violation: violation,
        converged: violation < pr.tolerance,
    }
}
