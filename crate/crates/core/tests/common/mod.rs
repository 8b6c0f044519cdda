//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use cormf_core::cormf;
use cormf_core::ising::{IsingModel, SpinConfiguration};
use cormf_core::ordering::SpinOrder;
use cormf_core::rnn::{Architecture, RnnMeanField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random couplings (asymmetric storage allowed) and optional fields.
pub fn random_model(r: &mut impl Rng, n: usize, with_field: bool, beta: f64) -> IsingModel {
    let mut j = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                j[a * n + b] = r.random_range(-1.0..1.0);
            }
        }
    }
    let h = (0..n).map(|_| if with_field { r.random_range(-1.0..1.0) } else { 0.0 }).collect();
    IsingModel::new(n, j, h, beta).unwrap()
}

/// Spin `i` of state `s`: bit set means -1.
pub fn spin(s: u64, i: usize) -> f64 {
    if s >> i & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// Energy straight from the definition, one double sum per state.
pub fn brute_energy(model: &IsingModel, s: u64) -> f64 {
    let n = model.n();
    let mut e = 0.0;
    for i in 0..n {
        for j in 0..n {
            e += model.coupling(i, j) * spin(s, i) * spin(s, j);
        }
        e += model.fields()[i] * spin(s, i);
    }
    e
}

/// `ln Z` from all log-weights at once: shift by the maximum and add the
/// terms smallest first.
pub fn brute_log_z(model: &IsingModel) -> f64 {
    let n = model.n();
    let logw: Vec<f64> = (0..1u64 << n).map(|s| -model.beta() * brute_energy(model, s)).collect();
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut terms: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
    terms.sort_by(f64::total_cmp);
    max + terms.iter().sum::<f64>().ln()
}

pub fn brute_boltzmann(model: &IsingModel) -> Vec<f64> {
    let lz = brute_log_z(model);
    (0..1u64 << model.n()).map(|s| (-model.beta() * brute_energy(model, s) - lz).exp()).collect()
}

/// Weight of the heaviest spanning tree of the complete graph with edge
/// weights `w[a][b]`, by checking every `(n-1)`-edge subset.
pub fn brute_max_spanning_tree(n: usize, w: &[Vec<f64>]) -> f64 {
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let mut best = f64::NEG_INFINITY;
    let m = edges.len();
    for mask in 0u32..1 << m {
        if mask.count_ones() as usize != n - 1 {
            continue;
        }
        let chosen: Vec<(usize, usize)> = (0..m).filter(|k| mask >> k & 1 == 1).map(|k| edges[k]).collect();
        // a tree: n-1 edges that connect everything
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(a, b) in &chosen {
                let other = if a == v { b } else if b == v { a } else { continue };
                if !seen[other] {
                    seen[other] = true;
                    stack.push(other);
                }
            }
        }
        if seen.iter().all(|&s| s) {
            best = best.max(chosen.iter().map(|&(a, b)| w[a][b]).sum());
        }
    }
    best
}

/// Small network with a random non-zero read-out, so conditionals depend on
/// the history.
pub fn random_net(arch: Architecture, seed: u64) -> RnnMeanField {
    let mut net = RnnMeanField::new(arch, seed).unwrap();
    let mut r = rng(seed ^ 0x5eed);
    let (w, b) = net.readout_mut();
    for v in w.iter_mut().chain(b.iter_mut()) {
        *v = r.random_range(-1.0..1.0);
    }
    net
}

pub fn small_arch() -> Architecture {
    Architecture { layers: 2, hidden: 6 }
}

pub fn random_order(r: &mut impl Rng, n: usize) -> SpinOrder {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(r);
    SpinOrder::new(p).unwrap()
}

/// `F_Q` by enumeration with the network evaluated one state at a time.
pub fn brute_variational_f(net: &RnnMeanField, model: &IsingModel, order: &SpinOrder) -> f64 {
    let n = model.n();
    (0..1u64 << n)
        .map(|s| {
            let x = SpinConfiguration::from_index(n, s);
            let lq = cormf::log_prob(net, order, &x).unwrap();
            lq.exp() * (model.energy_of(x.spins()) + lq / model.beta())
        })
        .sum()
}

/// Central finite difference of `f` along coordinate `i`.
pub fn central_difference(params: &[f64], i: usize, eps: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let mut p = params.to_vec();
    p[i] = params[i] + eps;
    let up = f(&p);
    p[i] = params[i] - eps;
    let down = f(&p);
    (up - down) / (2.0 * eps)
}

/// Relative error with an absolute floor for near-zero references.
pub fn rel_err(got: f64, want: f64, floor: f64) -> f64 {
    (got - want).abs() / want.abs().max(floor)
}

/// Enumerated expectation of the baseline-corrected score estimator
/// `(1/beta) E_Q[grad ln Q (R - b)]` with the population baseline
/// `b = E_Q[R]`, together with the score mean `E_Q[grad ln Q]`.
pub fn enumerated_estimator(net: &RnnMeanField, model: &IsingModel, order: &SpinOrder) -> (Vec<f64>, Vec<f64>) {
    let n = model.n();
    let beta = model.beta();
    let states: Vec<(SpinConfiguration, f64, f64, Vec<f64>)> = (0..1u64 << n)
        .map(|s| {
            let x = SpinConfiguration::from_index(n, s);
            let lq = cormf::log_prob(net, order, &x).unwrap();
            let reward = beta * model.energy_of(x.spins()) + lq;
            let g = cormf::log_prob_grad(net, order, &x).unwrap();
            (x, lq.exp(), reward, g)
        })
        .collect();
    let baseline: f64 = states.iter().map(|(_, q, r, _)| q * r).sum();
    let p = net.num_params();
    let mut est = vec![0.0; p];
    let mut score = vec![0.0; p];
    for (_, q, r, g) in &states {
        for k in 0..p {
            est[k] += q * g[k] * (r - baseline) / beta;
            score[k] += q * g[k];
        }
    }
    (est, score)
}

/// Solve `A x = b` for a small dense system by Gaussian elimination with
/// partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// A network whose conditionals ignore the history and reproduce the
/// product distribution with means `m` (given in spin-index order).
///
/// The first layer's input weights are zeroed, which makes the top hidden
/// trajectory `h_t` deterministic. Each coordinate of `h_t` is read off by
/// pointing the read-out at it, and the read-out is then fitted as the
/// minimum-norm solution of `w . h_t + c = 2 atanh(m_{order[t]})`.
pub fn product_net(order: &SpinOrder, m: &[f64], seed: u64) -> RnnMeanField {
    let n = m.len();
    let arch = Architecture { layers: 2, hidden: 16 };
    let h = arch.hidden;
    let mut net = RnnMeanField::new(arch, seed).unwrap();
    let start = net.layer_range(0).start;
    net.params_mut()[start..start + 2 * h].iter_mut().for_each(|v| *v = 0.0);

    let probe = SpinConfiguration::all(n, 1);
    let mut traj = vec![vec![0.0; h + 1]; n];
    for i in 0..h {
        let (w, b) = net.readout_mut();
        w.iter_mut().for_each(|v| *v = 0.0);
        b.iter_mut().for_each(|v| *v = 0.0);
        w[i] = 1.0;
        let p = cormf::conditionals(&net, order, &probe).unwrap();
        for t in 0..n {
            traj[t][i] = (p[t] / (1.0 - p[t])).ln();
        }
    }
    for row in &mut traj {
        row[h] = 1.0;
    }
    let target: Vec<f64> = order.as_slice().iter().map(|&i| 2.0 * m[i].atanh()).collect();
    // minimum-norm solution w = T^T (T T^T)^-1 d
    let gram: Vec<Vec<f64>> =
        (0..n).map(|a| (0..n).map(|b| traj[a].iter().zip(&traj[b]).map(|(x, y)| x * y).sum()).collect()).collect();
    let alpha = solve(gram, target);
    let coef: Vec<f64> = (0..=h).map(|i| (0..n).map(|t| alpha[t] * traj[t][i]).sum()).collect();
    let (w, b) = net.readout_mut();
    w.iter_mut().for_each(|v| *v = 0.0);
    w[..h].copy_from_slice(&coef[..h]);
    b[0] = coef[h];
    b[1] = 0.0;
    net
}
