//! Naive (fully factorised) mean field.
//!
//! With mean values `m_i = E[x_i]` the product-distribution free energy is
//!
//! ```text
//! F(m) = sum_ij J_ij m_i m_j + sum_i h_i m_i - (1/beta) sum_i H((1 + m_i) / 2)
//! ```
//!
//! where `H` is the binary entropy in nats. It is minimised with Adam over
//! `m = tanh(theta)`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::IsingModel;
use crate::optim::{l2_norm, Adam};
use crate::rng;

/// Binary entropy in nats; `H(0) = H(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
    term(p) + term(1.0 - p)
}

fn check_len(model: &IsingModel, m: &[f64]) -> Result<()> {
    if m.len() != model.n() {
        return Err(Error::DimensionMismatch { expected: model.n(), got: m.len() });
    }
    Ok(())
}

pub fn nmf_free_energy(model: &IsingModel, m: &[f64]) -> Result<f64> {
    check_len(model, m)?;
    if m.iter().any(|v| !(-1.0..=1.0).contains(v)) {
        return Err(Error::InvalidConfig("mean values must lie in [-1, 1]".into()));
    }
    let n = model.n();
    let j = model.couplings();
    let mut energy = 0.0;
    for i in 0..n {
        let row: f64 = j[i * n..(i + 1) * n].iter().zip(m).map(|(a, b)| a * b).sum();
        energy += m[i] * (row + model.fields()[i]);
    }
    let entropy: f64 = m.iter().map(|&v| binary_entropy((1.0 + v) / 2.0)).sum();
    Ok(energy - entropy / model.beta())
}

/// `dF/dm_i = sum_j (J_ij + J_ji) m_j + h_i + atanh(m_i) / beta`.
pub fn nmf_grad(model: &IsingModel, m: &[f64]) -> Result<Vec<f64>> {
    check_len(model, m)?;
    if m.iter().any(|v| !(-1.0 < *v && *v < 1.0)) {
        return Err(Error::InvalidConfig("gradient needs mean values strictly inside (-1, 1)".into()));
    }
    let n = model.n();
    Ok((0..n)
        .map(|i| {
            let coupling: f64 = (0..n).map(|k| model.bond(i, k) * m[k]).sum::<f64>() - 2.0 * model.coupling(i, i) * m[i];
            coupling + model.fields()[i] + m[i].atanh() / model.beta()
        })
        .collect())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NmfConfig {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub iterations: usize,
    pub restarts: usize,
    /// Stop a restart once the gradient norm with respect to `theta` drops below this.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for NmfConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            iterations: 10_000,
            restarts: 10,
            tolerance: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RestartResult {
    pub seed: u64,
    pub f_star: f64,
    pub magnetization: f64,
    pub iterations_used: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NmfSolution {
    pub x_bar: Vec<f64>,
    #[serde(rename = "F_star")]
    pub f_star: f64,
    pub iterations_used: usize,
    pub converged: bool,
    pub restart_results: Vec<RestartResult>,
}

impl NmfSolution {
    pub fn magnetization(&self) -> f64 {
        self.x_bar.iter().sum::<f64>() / self.x_bar.len() as f64
    }

    /// Mean and sample standard deviation of `F*` across restarts.
    pub fn restart_spread(&self) -> (f64, f64) {
        let f: Vec<f64> = self.restart_results.iter().map(|r| r.f_star).collect();
        let k = f.len() as f64;
        let mean = f.iter().sum::<f64>() / k;
        let sd = if f.len() > 1 { (f.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt() } else { 0.0 };
        (mean, sd)
    }
}

struct Run {
    x_bar: Vec<f64>,
    f: f64,
    iterations: usize,
    converged: bool,
}

fn single_run(model: &IsingModel, cfg: &NmfConfig, seed: u64) -> Result<Run> {
    let n = model.n();
    let mut r = rng::rng_from_seed(seed);
    let mut theta: Vec<f64> = (0..n).map(|_| r.random_range(-0.1..=0.1)).collect();
    let mut adam = Adam::new(n, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2);

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut iterations = 0;
    let mut converged = false;
    for it in 0..cfg.iterations {
        let m: Vec<f64> = theta.iter().map(|t| t.tanh()).collect();
        let f = nmf_free_energy(model, &m)?;
        if !f.is_finite() {
            return Err(Error::NonFinite { quantity: "naive mean-field objective", iteration: it });
        }
        if best.as_ref().is_none_or(|(b, _)| f < *b) {
            best = Some((f, m.clone()));
        }
        // saturated tanh: the entropy gradient is no longer representable
        if m.iter().any(|v| v.abs() >= 1.0) {
            break;
        }
        let g: Vec<f64> = nmf_grad(model, &m)?
            .iter()
            .zip(&m)
            .map(|(g, v)| g * (1.0 - v * v))
            .collect();
        iterations = it + 1;
        if l2_norm(&g) < cfg.tolerance {
            converged = true;
            break;
        }
        adam.step(&mut theta, &g);
    }
    let m: Vec<f64> = theta.iter().map(|t| t.tanh()).collect();
    if m.iter().all(|v| v.abs() < 1.0) {
        let f = nmf_free_energy(model, &m)?;
        if best.as_ref().is_none_or(|(b, _)| f < *b) {
            best = Some((f, m));
        }
    }
    let (f, x_bar) = best.expect("at least one objective evaluation");
    Ok(Run { x_bar, f, iterations, converged })
}

/// Minimise the naive mean-field free energy from `cfg.restarts` seeded
/// starting points and keep the best restart.
pub fn nmf_minimize(model: &IsingModel, cfg: &NmfConfig) -> Result<NmfSolution> {
    if cfg.restarts == 0 {
        return Err(Error::InvalidConfig("need at least one restart".into()));
    }
    let mut results = Vec::with_capacity(cfg.restarts);
    let mut best: Option<Run> = None;
    for k in 0..cfg.restarts {
        let seed = rng::derive_seed(cfg.seed, &[k as u64]);
        let run = single_run(model, cfg, seed)?;
        results.push(RestartResult {
            seed,
            f_star: run.f,
            magnetization: run.x_bar.iter().sum::<f64>() / run.x_bar.len() as f64,
            iterations_used: run.iterations,
            converged: run.converged,
        });
        if best.as_ref().is_none_or(|b| run.f < b.f) {
            best = Some(run);
        }
    }
    let best = best.unwrap();
    Ok(NmfSolution {
        x_bar: best.x_bar,
        f_star: best.f,
        iterations_used: best.iterations,
        converged: best.converged,
        restart_results: results,
    })
}
