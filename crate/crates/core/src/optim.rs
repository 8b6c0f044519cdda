//! Adam, global-norm clipping and a reduce-on-plateau learning-rate schedule.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// Adam with bias-corrected first and second moments.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64, beta1: f64, beta2: f64) -> Self {
        Self { lr, beta1, beta2, eps: 1e-8, m: vec![0.0; n_params], v: vec![0.0; n_params], t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// `params <- params - lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), grad.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for ((p, &g), (m, v)) in params.iter_mut().zip(grad).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Rescale `grad` in place so its L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = l2_norm(grad);
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= scale);
    }
    norm
}

/// Multiplies the learning rate by `factor` once the windowed mean of the
/// monitored loss has failed to improve on its best value (by a relative
/// `threshold`) for more than `patience` consecutive observations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReduceOnPlateau {
    pub patience: usize,
    pub factor: f64,
    pub threshold: f64,
    pub window: usize,
    best: f64,
    bad: usize,
    recent: VecDeque<f64>,
    sum: f64,
}

impl ReduceOnPlateau {
    pub fn new(patience: usize, factor: f64, threshold: f64, window: usize) -> Self {
        Self {
            patience,
            factor,
            threshold,
            window: window.max(1),
            best: f64::INFINITY,
            bad: 0,
            recent: VecDeque::new(),
            sum: 0.0,
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    /// Record one loss value; returns the (possibly reduced) learning rate.
    pub fn observe(&mut self, loss: f64, lr: f64) -> f64 {
        self.recent.push_back(loss);
        self.sum += loss;
        if self.recent.len() > self.window {
            self.sum -= self.recent.pop_front().unwrap();
        }
        let smoothed = self.sum / self.recent.len() as f64;
        if smoothed < self.best - self.threshold * self.best.abs() || self.best == f64::INFINITY {
            self.best = smoothed;
            self.bad = 0;
            lr
        } else {
            self.bad += 1;
            if self.bad > self.patience {
                self.bad = 0;
                lr * self.factor
            } else {
                lr
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut opt = Adam::new(2, 0.1, 0.9, 0.999);
        let mut p = vec![1.0, -1.0];
        opt.step(&mut p, &[3.0, -0.5]);
        assert!((p[0] - 0.9).abs() < 1e-7);
        assert!((p[1] + 0.9).abs() < 1e-6);
    }

    #[test]
    fn adam_minimises_quadratic() {
        let mut opt = Adam::new(1, 0.05, 0.9, 0.999);
        let mut p = vec![3.0];
        for _ in 0..2000 {
            let g = [2.0 * (p[0] - 1.0)];
            opt.step(&mut p, &g);
        }
        assert!((p[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn clipping() {
        let mut g = vec![3.0, 4.0];
        assert_eq!(clip_grad_norm(&mut g, 1.0), 5.0);
        assert!((l2_norm(&g) - 1.0).abs() < 1e-15);
        let mut small = vec![0.3, 0.4];
        clip_grad_norm(&mut small, 1.0);
        assert_eq!(small, vec![0.3, 0.4]);
    }

    #[test]
    fn plateau_reduces_after_patience() {
        let mut s = ReduceOnPlateau::new(3, 0.5, 1e-4, 1);
        let mut lr = 1.0;
        lr = s.observe(10.0, lr);
        for _ in 0..3 {
            lr = s.observe(10.0, lr);
            assert_eq!(lr, 1.0);
        }
        lr = s.observe(10.0, lr);
        assert_eq!(lr, 0.5);
        lr = s.observe(5.0, lr);
        assert_eq!(lr, 0.5);
        assert_eq!(s.best(), 5.0);
    }
}
