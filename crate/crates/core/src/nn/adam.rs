use super::Param;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Bias-corrected Adam over an ordered list of parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// Applies one update from the accumulated gradients. The parameter list
    /// must have the same order and sizes on every call.
    pub fn update<'a>(&mut self, params: impl IntoIterator<Item = &'a mut Param>) {
        self.step += 1;
        let t = self.step as i32;
        let (c1, c2) = (1.0 - BETA1.powi(t), 1.0 - BETA2.powi(t));
        for (i, p) in params.into_iter().enumerate() {
            if self.m.len() <= i {
                self.m.push(vec![0.0; p.value.len()]);
                self.v.push(vec![0.0; p.value.len()]);
            }
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            assert_eq!(m.len(), p.value.len(), "parameter {i} changed size");
            for (((w, &g), mi), vi) in p.value.iter_mut().zip(&p.grad).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = BETA1 * *mi + (1.0 - BETA1) * g;
                *vi = BETA2 * *vi + (1.0 - BETA2) * g * g;
                *w -= self.lr * (*mi / c1) / ((*vi / c2).sqrt() + EPSILON);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn param(v: f64, g: f64) -> Param {
        Param {
            value: vec![v],
            grad: vec![g],
        }
    }

    #[test]
    fn first_step_moves_by_lr() {
        // f(w) = w², w = 1 → g = 2; m̂ = 2, v̂ = 4 → Δ = 0.1 · 2 / (2 + 1e−8)
        let mut p = param(1.0, 2.0);
        let mut opt = Adam::new(0.1);
        opt.update([&mut p]);
        let expected = 1.0 - 0.1 * 2.0 / (2.0 + EPSILON);
        assert!((p.value[0] - expected).abs() < 1e-15);
        assert!((p.value[0] - 0.9).abs() < 1e-8);
        assert_eq!(opt.step, 1);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = param(0.3, 0.0);
        let mut opt = Adam::new(0.5);
        for _ in 0..5 {
            opt.update([&mut p]);
        }
        assert_eq!(p.value[0], 0.3);
    }

    #[test]
    fn identical_runs_identical_trajectories() {
        let run = || {
            let mut p = param(1.0, 0.0);
            let mut opt = Adam::new(0.05);
            let mut traj = Vec::new();
            for _ in 0..50 {
                p.grad[0] = 2.0 * p.value[0];
                opt.update([&mut p]);
                traj.push(p.value[0]);
            }
            traj
        };
        assert_eq!(run(), run());
    }
}
