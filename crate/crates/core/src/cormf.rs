//! The recurrent autoregressive mean field `Q(X) = prod_t q(x_{o_t} | x_{o_<t})`:
//! evaluation and sampling in a given spin order, the score-function
//! gradient of the variational free energy, and the training loop.
//!
//! The variational free energy is `F_Q = E_Q[E(X) + ln Q(X) / beta]` and its
//! gradient is estimated from `K` samples as
//!
//! ```text
//! grad F ~ 1/(beta K) sum_k grad ln Q(X_k) (R(X_k) - b),   R = beta E + ln Q,
//! ```
//!
//! with the baseline `b` the batch mean of `R`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{IsingModel, SampleSet, SpinConfiguration};
use crate::optim::{clip_grad_norm, Adam, ReduceOnPlateau};
use crate::ordering::SpinOrder;
use crate::rng;
use crate::rnn::{Drive, RnnMeanField, Rollout};

/// Largest `n` for which the full distribution `Q` is enumerated.
pub const Q_ENUMERATION_LIMIT: usize = 12;

fn check_shapes(order: &SpinOrder, config: &SpinConfiguration) -> Result<()> {
    if order.len() != config.len() {
        return Err(Error::DimensionMismatch { expected: order.len(), got: config.len() });
    }
    Ok(())
}

fn check_model(model: &IsingModel, order: &SpinOrder) -> Result<()> {
    if model.n() != order.len() {
        return Err(Error::DimensionMismatch { expected: model.n(), got: order.len() });
    }
    Ok(())
}

/// Reorder a configuration (spin-index order) into step order.
fn to_steps(order: &SpinOrder, spins: &[i8], out: &mut Vec<i8>) {
    out.extend(order.as_slice().iter().map(|&i| spins[i]));
}

fn from_steps(order: &SpinOrder, steps: &[i8]) -> Vec<i8> {
    let mut x = vec![0i8; steps.len()];
    for (&i, &s) in order.as_slice().iter().zip(steps) {
        x[i] = s;
    }
    x
}

fn teacher(net: &RnnMeanField, order: &SpinOrder, configs: &[&[i8]]) -> Rollout {
    let mut steps = Vec::with_capacity(configs.len() * order.len());
    for c in configs {
        to_steps(order, c, &mut steps);
    }
    net.rollout(order.len(), configs.len(), Drive::Teacher(&steps))
}

/// `q(x_{order[t]} = observed | earlier spins)` for every step `t`.
pub fn conditionals(net: &RnnMeanField, order: &SpinOrder, config: &SpinConfiguration) -> Result<Vec<f64>> {
    check_shapes(order, config)?;
    Ok(teacher(net, order, &[config.spins()]).realised_conditionals(0))
}

pub fn log_prob(net: &RnnMeanField, order: &SpinOrder, config: &SpinConfiguration) -> Result<f64> {
    check_shapes(order, config)?;
    Ok(teacher(net, order, &[config.spins()]).log_probs[0])
}

/// Gradient of `ln Q(X)` with respect to the flat parameter vector.
pub fn log_prob_grad(net: &RnnMeanField, order: &SpinOrder, config: &SpinConfiguration) -> Result<Vec<f64>> {
    check_shapes(order, config)?;
    let r = teacher(net, order, &[config.spins()]);
    Ok(net.backward(&r, &[1.0]))
}

/// `ln Q` of every configuration, indexed as in [`SpinConfiguration::from_index`].
pub fn enumerate_log_probs(net: &RnnMeanField, order: &SpinOrder) -> Result<Vec<f64>> {
    let n = order.len();
    if n > Q_ENUMERATION_LIMIT {
        return Err(Error::TooLarge { what: "enumeration of Q", n, limit: Q_ENUMERATION_LIMIT });
    }
    let configs: Vec<SpinConfiguration> = (0..1u64 << n).map(|s| SpinConfiguration::from_index(n, s)).collect();
    let views: Vec<&[i8]> = configs.iter().map(|c| c.spins()).collect();
    Ok(teacher(net, order, &views).log_probs)
}

/// A batch of ancestral samples together with its forward pass.
pub struct Draw {
    pub rollout: Rollout,
    /// `batch x n` in spin-index order.
    pub configs: Vec<i8>,
}

impl Draw {
    pub fn config(&self, k: usize) -> &[i8] {
        let n = self.rollout.steps;
        &self.configs[k * n..(k + 1) * n]
    }

    pub fn into_sample_set(self) -> SampleSet {
        let n = self.rollout.steps;
        let configurations = self
            .configs
            .chunks(n.max(1))
            .take(self.rollout.batch)
            .map(|c| SpinConfiguration::new(c.to_vec()).expect("sampled spins are +-1"))
            .collect();
        SampleSet { configurations, log_probs: Some(self.rollout.log_probs) }
    }
}

/// Draw `batch` samples; sample `k` consumes its own stream derived from
/// `(seed, stream, k)`.
pub fn draw(net: &RnnMeanField, order: &SpinOrder, batch: usize, seed: u64, stream: u64) -> Draw {
    use rand::Rng as _;
    let n = order.len();
    let mut uniforms = Vec::with_capacity(batch * n);
    for k in 0..batch {
        let mut r = rng::child_rng(seed, &[stream, k as u64]);
        uniforms.extend((0..n).map(|_| r.random::<f64>()));
    }
    let rollout = net.rollout(n, batch, Drive::Sample(&uniforms));
    let mut configs = Vec::with_capacity(batch * n);
    for k in 0..batch {
        configs.extend(from_steps(order, rollout.row(k)));
    }
    Draw { rollout, configs }
}

/// `K` i.i.d. ancestral samples with their log-probabilities.
pub fn sample(net: &RnnMeanField, order: &SpinOrder, k: usize, seed: u64) -> SampleSet {
    draw(net, order, k, seed, 0).into_sample_set()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
}

impl MeanEstimate {
    pub fn from_values(values: &[f64]) -> Self {
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let stderr = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr }
    }
}

/// Monte Carlo estimate of `F_Q` from `k` fresh samples.
pub fn variational_free_energy_estimate(
    net: &RnnMeanField,
    model: &IsingModel,
    order: &SpinOrder,
    k: usize,
    seed: u64,
) -> Result<MeanEstimate> {
    check_model(model, order)?;
    if k == 0 {
        return Err(Error::InvalidConfig("need at least one sample".into()));
    }
    let d = draw(net, order, k, seed, 0);
    let beta = model.beta();
    let f: Vec<f64> = (0..k).map(|i| model.energy_of(d.config(i)) + d.rollout.log_probs[i] / beta).collect();
    Ok(MeanEstimate::from_values(&f))
}

/// `sum_X Q(X) [E(X) + ln Q(X) / beta]` by enumeration (`n <= 12`).
pub fn exact_variational_free_energy(net: &RnnMeanField, model: &IsingModel, order: &SpinOrder) -> Result<f64> {
    check_model(model, order)?;
    let n = model.n();
    let beta = model.beta();
    let lq = enumerate_log_probs(net, order)?;
    Ok(lq
        .iter()
        .enumerate()
        .map(|(s, &l)| {
            let x = SpinConfiguration::from_index(n, s as u64);
            l.exp() * (model.energy_of(x.spins()) + l / beta)
        })
        .sum())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GradientEstimate {
    pub gradient: Vec<f64>,
    pub baseline: f64,
    pub reward_variance: f64,
}

/// Per-batch quantities shared by the gradient and the training history.
#[derive(Clone, Debug)]
pub struct BatchSummary {
    pub estimate: GradientEstimate,
    /// `E + ln Q / beta_report` for every sample.
    pub free_energies: Vec<f64>,
    pub per_spin: Vec<f64>,
}

/// Score-function gradient from one batch with rewards at inverse
/// temperature `beta` and free energies reported at `beta_report`.
pub fn gradient_from_draw(
    net: &RnnMeanField,
    model: &IsingModel,
    d: &Draw,
    beta: f64,
    beta_report: f64,
) -> BatchSummary {
    let k = d.rollout.batch;
    let n = d.rollout.steps;
    let energies: Vec<f64> = (0..k).map(|i| model.energy_of(d.config(i))).collect();
    let lq = &d.rollout.log_probs;
    let rewards: Vec<f64> = energies.iter().zip(lq).map(|(e, l)| beta * e + l).collect();
    let baseline = rewards.iter().sum::<f64>() / k as f64;
    let reward_variance = if k > 1 {
        rewards.iter().map(|r| (r - baseline).powi(2)).sum::<f64>() / (k - 1) as f64
    } else {
        0.0
    };
    let weights: Vec<f64> = rewards.iter().map(|r| (r - baseline) / (beta * k as f64)).collect();
    let gradient = net.backward(&d.rollout, &weights);

    let free_energies = energies.iter().zip(lq).map(|(e, l)| e + l / beta_report).collect();
    let mut per_spin = vec![0.0; n];
    for i in 0..k {
        for (m, &x) in per_spin.iter_mut().zip(d.config(i)) {
            *m += f64::from(x);
        }
    }
    per_spin.iter_mut().for_each(|m| *m /= k as f64);
    BatchSummary { estimate: GradientEstimate { gradient, baseline, reward_variance }, free_energies, per_spin }
}

/// Baseline-corrected gradient estimate of `F_Q` from `k >= 2` samples.
pub fn estimate_gradient(
    net: &RnnMeanField,
    model: &IsingModel,
    order: &SpinOrder,
    k: usize,
    seed: u64,
) -> Result<GradientEstimate> {
    check_model(model, order)?;
    if k < 2 {
        return Err(Error::InvalidConfig("the batch-mean baseline needs at least two samples".into()));
    }
    let d = draw(net, order, k, seed, 0);
    Ok(gradient_from_draw(net, model, &d, model.beta(), model.beta()).estimate)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anneal {
    Off,
    /// `beta(t) = beta * min(1, start + (1 - start) t / ramp)`, with `ramp`
    /// defaulting to a tenth of the run.
    Linear { start: f64, ramp: Option<usize> },
    /// `beta(t) = beta * start^(1 - t / ramp)` until `t = ramp`, so each
    /// decade of temperature gets the same number of iterations.
    Geometric { start: f64, ramp: Option<usize> },
}

impl Default for Anneal {
    fn default() -> Self {
        Anneal::Linear { start: 0.1, ramp: None }
    }
}

impl Anneal {
    pub fn factor(&self, iteration: usize, total: usize) -> f64 {
        match *self {
            Anneal::Off => 1.0,
            Anneal::Linear { start, ramp } => {
                let ramp = ramp.unwrap_or(total / 10).max(1);
                (start + (1.0 - start) * iteration as f64 / ramp as f64).min(1.0)
            }
            Anneal::Geometric { start, ramp } => {
                let ramp = ramp.unwrap_or(total / 10).max(1);
                start.powf((1.0 - iteration as f64 / ramp as f64).max(0.0))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub clip_norm: f64,
    pub scheduler_patience: usize,
    pub scheduler_factor: f64,
    pub scheduler_threshold: f64,
    pub scheduler_window: usize,
    pub anneal: Anneal,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            batch_size: 1000,
            iterations: 10_000,
            clip_norm: 1.0,
            scheduler_patience: 1000,
            scheduler_factor: 0.8,
            scheduler_threshold: 1e-4,
            scheduler_window: 50,
            anneal: Anneal::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.learning_rate, self.adam_beta1, self.adam_beta2, self.clip_norm];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidConfig("rates, betas and clip norm must be positive".into()));
        }
        if self.adam_beta1 >= 1.0 || self.adam_beta2 >= 1.0 {
            return Err(Error::InvalidConfig("Adam betas must be below 1".into()));
        }
        if self.batch_size < 2 || self.iterations == 0 {
            return Err(Error::InvalidConfig("batch_size >= 2 and iterations >= 1 required".into()));
        }
        if !(self.scheduler_factor > 0.0 && self.scheduler_factor < 1.0) {
            return Err(Error::InvalidConfig("scheduler_factor must lie in (0, 1)".into()));
        }
        if let Anneal::Linear { start, .. } | Anneal::Geometric { start, .. } = self.anneal {
            if !(start > 0.0 && start <= 1.0) {
                return Err(Error::InvalidConfig("anneal start must lie in (0, 1]".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub f_mean: f64,
    pub f_stderr: f64,
    pub magnetization: f64,
    pub grad_norm: f64,
    pub lr: f64,
    pub beta: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub history: Vec<IterationRecord>,
    /// Batch estimate of `E_Q[x_i]` per iteration (rows) and spin (columns).
    pub mean_params: Vec<Vec<f64>>,
    pub best_f: f64,
}

impl TrainReport {
    pub fn last(&self) -> Option<&IterationRecord> {
        self.history.last()
    }

    /// Best free energy seen up to and including `iteration`.
    pub fn best_until(&self, iteration: usize) -> f64 {
        self.history
            .iter()
            .take_while(|r| r.iteration <= iteration)
            .map(|r| r.f_mean)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn write_history_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iteration,F_mean,F_stderr,grad_norm,lr,beta")?;
        for r in &self.history {
            writeln!(w, "{},{:e},{:e},{:e},{:e},{:e}", r.iteration, r.f_mean, r.f_stderr, r.grad_norm, r.lr, r.beta)?;
        }
        Ok(())
    }

    pub fn write_mean_params_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let n = self.mean_params.first().map_or(0, Vec::len);
        let header: Vec<String> = std::iter::once("iteration".to_string())
            .chain((0..n).map(|i| format!("x{i}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for (rec, row) in self.history.iter().zip(&self.mean_params) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{},{}", rec.iteration, cells.join(","))?;
        }
        Ok(())
    }
}

/// Stepwise driver of the training loop; [`train`] runs it to completion.
pub struct Trainer {
    model: IsingModel,
    order: SpinOrder,
    net: RnnMeanField,
    cfg: TrainConfig,
    adam: Adam,
    plateau: ReduceOnPlateau,
    lr: f64,
    iteration: usize,
    report: TrainReport,
}

impl Trainer {
    pub fn new(model: &IsingModel, order: &SpinOrder, net: RnnMeanField, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        check_model(model, order)?;
        Ok(Self {
            model: model.clone(),
            order: order.clone(),
            adam: Adam::new(net.num_params(), cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2),
            plateau: ReduceOnPlateau::new(
                cfg.scheduler_patience,
                cfg.scheduler_factor,
                cfg.scheduler_threshold,
                cfg.scheduler_window,
            ),
            lr: cfg.learning_rate,
            net,
            cfg: cfg.clone(),
            iteration: 0,
            report: TrainReport { best_f: f64::INFINITY, ..Default::default() },
        })
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn is_done(&self) -> bool {
        self.iteration >= self.cfg.iterations
    }

    pub fn net(&self) -> &RnnMeanField {
        &self.net
    }

    pub fn report(&self) -> &TrainReport {
        &self.report
    }

    /// One iteration: sample a batch, estimate the gradient, clip, update.
    pub fn step(&mut self) -> Result<&IterationRecord> {
        let t = self.iteration;
        let beta_target = self.model.beta();
        let beta = beta_target * self.cfg.anneal.factor(t, self.cfg.iterations);
        let d = draw(&self.net, &self.order, self.cfg.batch_size, self.cfg.seed, t as u64 + 1);
        let mut batch = gradient_from_draw(&self.net, &self.model, &d, beta, beta_target);
        let f = MeanEstimate::from_values(&batch.free_energies);
        if !f.mean.is_finite() {
            return Err(Error::NonFinite { quantity: "free energy", iteration: t });
        }
        let grad = &mut batch.estimate.gradient;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite { quantity: "gradient", iteration: t });
        }
        let grad_norm = clip_grad_norm(grad, self.cfg.clip_norm);
        self.adam.lr = self.lr;
        self.adam.step(self.net.params_mut(), grad);

        let magnetization = batch.per_spin.iter().sum::<f64>() / batch.per_spin.len() as f64;
        self.report.best_f = self.report.best_f.min(f.mean);
        self.report.history.push(IterationRecord {
            iteration: t,
            f_mean: f.mean,
            f_stderr: f.stderr,
            magnetization,
            grad_norm,
            lr: self.lr,
            beta,
        });
        self.report.mean_params.push(batch.per_spin);
        self.lr = self.plateau.observe(f.mean, self.lr);
        self.iteration += 1;
        Ok(self.report.history.last().unwrap())
    }

    pub fn run(&mut self) -> Result<()> {
        while !self.is_done() {
            self.step()?;
        }
        Ok(())
    }

    pub fn finish(self) -> (RnnMeanField, TrainReport) {
        (self.net, self.report)
    }
}

/// Train `net` on `model` in the given order.
pub fn train(
    model: &IsingModel,
    order: &SpinOrder,
    net: RnnMeanField,
    cfg: &TrainConfig,
) -> Result<(RnnMeanField, TrainReport)> {
    let mut trainer = Trainer::new(model, order, net, cfg)?;
    trainer.run()?;
    Ok(trainer.finish())
}

/// Free energy and magnetisation of a trained model from fresh samples.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Evaluation {
    pub samples: usize,
    pub free_energy: MeanEstimate,
    pub magnetization: MeanEstimate,
    pub per_spin: Vec<f64>,
}

pub fn evaluate(net: &RnnMeanField, model: &IsingModel, order: &SpinOrder, k: usize, seed: u64) -> Result<Evaluation> {
    check_model(model, order)?;
    if k < 2 {
        return Err(Error::InvalidConfig("evaluation needs at least two samples".into()));
    }
    let n = model.n();
    let beta = model.beta();
    let mut f = Vec::with_capacity(k);
    let mut mags = Vec::with_capacity(k);
    let mut per_spin = vec![0.0; n];
    // chunked to bound the activation cache
    let chunk = 2000;
    let mut done = 0;
    while done < k {
        let b = chunk.min(k - done);
        let d = draw(net, order, b, seed, done as u64 / chunk as u64);
        for i in 0..b {
            let x = d.config(i);
            f.push(model.energy_of(x) + d.rollout.log_probs[i] / beta);
            mags.push(x.iter().map(|&s| f64::from(s)).sum::<f64>() / n as f64);
            for (m, &s) in per_spin.iter_mut().zip(x) {
                *m += f64::from(s);
            }
        }
        done += b;
    }
    per_spin.iter_mut().for_each(|m| *m /= k as f64);
    Ok(Evaluation {
        samples: k,
        free_energy: MeanEstimate::from_values(&f),
        magnetization: MeanEstimate::from_values(&mags),
        per_spin,
    })
}

/// Checkpoint file: network, order, configuration and iteration count.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub network: RnnMeanField,
    pub order: SpinOrder,
    pub config: TrainConfig,
    pub iteration: usize,
}

impl Checkpoint {
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rnn::Architecture;
    use std::f64::consts::LN_2;

    fn small_net(seed: u64) -> RnnMeanField {
        let mut net = RnnMeanField::new(Architecture { layers: 2, hidden: 6 }, seed).unwrap();
        let (w, b) = net.readout_mut();
        for (i, v) in w.iter_mut().enumerate() {
            *v = ((i * 7 + seed as usize) % 11) as f64 / 11.0 - 0.5;
        }
        b[0] = 0.3;
        net
    }

    #[test]
    fn zero_init_log_prob() {
        let net = RnnMeanField::new(Architecture::default(), 0).unwrap();
        let order = SpinOrder::identity(5);
        let x = SpinConfiguration::new(vec![1, -1, 1, 1, -1]).unwrap();
        assert!((log_prob(&net, &order, &x).unwrap() + 5.0 * LN_2).abs() < 1e-14);
        assert!(conditionals(&net, &order, &x).unwrap().iter().all(|&c| c == 0.5));
    }

    #[test]
    fn single_spin_conditional_normalises() {
        let net = small_net(1);
        let order = SpinOrder::identity(1);
        let up = conditionals(&net, &order, &SpinConfiguration::all(1, 1)).unwrap()[0];
        let down = conditionals(&net, &order, &SpinConfiguration::all(1, -1)).unwrap()[0];
        assert!(up > 0.0 && up < 1.0);
        assert!((up + down - 1.0).abs() < 1e-15);
    }

    #[test]
    fn conditional_product_matches_log_prob() {
        let net = small_net(2);
        let order = SpinOrder::new(vec![2, 0, 1]).unwrap();
        let x = SpinConfiguration::new(vec![-1, 1, -1]).unwrap();
        let prod: f64 = conditionals(&net, &order, &x).unwrap().iter().product();
        assert!((prod - log_prob(&net, &order, &x).unwrap().exp()).abs() < 1e-12);
    }

    #[test]
    fn shape_errors() {
        let net = small_net(3);
        let order = SpinOrder::identity(3);
        let x = SpinConfiguration::all(2, 1);
        assert!(log_prob(&net, &order, &x).is_err());
        let model = IsingModel::free(3, 1.0).unwrap();
        assert!(estimate_gradient(&net, &model, &order, 1, 0).is_err());
        assert!(enumerate_log_probs(&net, &SpinOrder::identity(13)).unwrap_err().is_guard());
    }

    #[test]
    fn sampled_log_probs_match_recomputation() {
        let net = small_net(4);
        let order = SpinOrder::new(vec![3, 1, 0, 2]).unwrap();
        let s = sample(&net, &order, 50, 9);
        let lp = s.log_probs.as_ref().unwrap();
        for (c, &l) in s.configurations.iter().zip(lp) {
            assert!((log_prob(&net, &order, c).unwrap() - l).abs() < 1e-12);
        }
        assert_eq!(sample(&net, &order, 50, 9), s);
    }

    #[test]
    fn free_model_free_energy_is_exact_at_init() {
        let net = RnnMeanField::new(Architecture::default(), 7).unwrap();
        let model = IsingModel::free(4, 1.0).unwrap();
        let order = SpinOrder::identity(4);
        let est = variational_free_energy_estimate(&net, &model, &order, 64, 1).unwrap();
        assert!((est.mean + 4.0 * LN_2).abs() < 1e-12);
        assert!(est.stderr < 1e-12);
        let exact = exact_variational_free_energy(&net, &model, &order).unwrap();
        assert!((exact + 4.0 * LN_2).abs() < 1e-12);
    }

    #[test]
    fn anneal_schedule() {
        let a = Anneal::default();
        assert!((a.factor(0, 1000) - 0.1).abs() < 1e-15);
        assert!((a.factor(50, 1000) - 0.55).abs() < 1e-12);
        assert_eq!(a.factor(100, 1000), 1.0);
        assert_eq!(a.factor(5000, 1000), 1.0);
        assert_eq!(Anneal::Off.factor(0, 10), 1.0);

        let g = Anneal::Geometric { start: 0.001, ramp: Some(300) };
        assert!((g.factor(0, 1000) - 0.001).abs() < 1e-15);
        assert!((g.factor(100, 1000) - 0.01).abs() < 1e-12);
        assert!((g.factor(200, 1000) - 0.1).abs() < 1e-12);
        assert_eq!(g.factor(300, 1000), 1.0);
        assert_eq!(g.factor(900, 1000), 1.0);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig { scheduler_factor: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = TrainConfig { batch_size: 1, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn history_csv_layout() {
        let model = IsingModel::free(2, 1.0).unwrap();
        let cfg = TrainConfig { iterations: 3, batch_size: 8, ..Default::default() };
        let net = RnnMeanField::new(Architecture { layers: 1, hidden: 4 }, 0).unwrap();
        let (_, report) = train(&model, &SpinOrder::identity(2), net, &cfg).unwrap();
        let mut buf = Vec::new();
        report.write_history_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iteration,F_mean,F_stderr,grad_norm,lr,beta\n0,"));
        assert_eq!(text.lines().count(), 4);
        let mut buf = Vec::new();
        report.write_mean_params_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("iteration,x0,x1\n"));
    }
}
