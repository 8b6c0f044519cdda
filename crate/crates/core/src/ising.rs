//! Ising models, energies and the exact / Monte Carlo references.
//!
//! Energies use the full double sum over stored coupling entries,
//! `E(X) = sum_{i,j} J_ij x_i x_j + sum_i h_i x_i`, and the Boltzmann law is
//! `P(X) = exp(-beta E(X)) / Z`. A symmetric `J` therefore counts every
//! bond twice; a matrix with only one triangle populated counts it once.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Largest spin count the enumeration routines accept by default.
pub const DEFAULT_ENUMERATION_LIMIT: usize = 24;

/// A configuration `X` in `{-1, +1}^n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SpinConfiguration(Vec<i8>);

impl SpinConfiguration {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidConfig(format!("spin value {bad} is not +1 or -1")));
        }
        Ok(Self(spins))
    }

    pub fn all(n: usize, value: i8) -> Self {
        assert!(value == 1 || value == -1);
        Self(vec![value; n])
    }

    /// Spin `i` is `+1` when bit `i` of `index` is clear and `-1` otherwise.
    pub fn from_index(n: usize, index: u64) -> Self {
        Self((0..n).map(|i| if index >> i & 1 == 0 { 1 } else { -1 }).collect())
    }

    pub fn index(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < 0)
            .fold(0, |acc, (i, _)| acc | 1 << i)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn flipped(&self) -> Self {
        Self(self.0.iter().map(|s| -s).collect())
    }
}

impl TryFrom<Vec<i8>> for SpinConfiguration {
    type Error = Error;
    fn try_from(v: Vec<i8>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SpinConfiguration> for Vec<i8> {
    fn from(c: SpinConfiguration) -> Self {
        c.0
    }
}

/// Configurations, optionally with their log-probabilities under the
/// distribution that produced them.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleSet {
    pub configurations: Vec<SpinConfiguration>,
    pub log_probs: Option<Vec<f64>>,
}

impl SampleSet {
    pub fn new(configurations: Vec<SpinConfiguration>, log_probs: Option<Vec<f64>>) -> Result<Self> {
        if let Some(lp) = &log_probs {
            if lp.len() != configurations.len() {
                return Err(Error::DimensionMismatch {
                    expected: configurations.len(),
                    got: lp.len(),
                });
            }
            if lp.iter().any(|&v| v > 0.0 || v.is_nan()) {
                return Err(Error::InvalidConfig("log-probabilities must be <= 0".into()));
            }
        }
        Ok(Self { configurations, log_probs })
    }

    pub fn len(&self) -> usize {
        self.configurations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configurations.is_empty()
    }

    /// Writes one `+1`/`-1` row per configuration under an `x0,...,x{n-1}` header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.configurations.first().map_or(0, |c| c.len());
        let header: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for c in &self.configurations {
            let row: Vec<String> = c.spins().iter().map(|s| s.to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        let n = header.split(',').filter(|s| !s.trim().is_empty()).count();
        let mut configurations = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let spins = line
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<i8>()
                        .map_err(|e| Error::InvalidConfig(format!("bad spin {t:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if spins.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: spins.len() });
            }
            configurations.push(SpinConfiguration::new(spins)?);
        }
        Ok(Self { configurations, log_probs: None })
    }
}

/// On-disk layout of a model file.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    n: usize,
    beta: f64,
    #[serde(rename = "J")]
    j: Vec<Vec<f64>>,
    h: Vec<f64>,
}

/// `n` spins with couplings `J` (row-major), fields `h` and inverse
/// temperature `beta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct IsingModel {
    n: usize,
    j: Vec<f64>,
    h: Vec<f64>,
    beta: f64,
}

impl TryFrom<ModelFile> for IsingModel {
    type Error = Error;
    fn try_from(f: ModelFile) -> Result<Self> {
        if f.j.len() != f.n {
            return Err(Error::DimensionMismatch { expected: f.n, got: f.j.len() });
        }
        Self::from_rows(&f.j, f.h, f.beta)
    }
}

impl From<IsingModel> for ModelFile {
    fn from(m: IsingModel) -> Self {
        ModelFile {
            n: m.n,
            beta: m.beta,
            j: m.j.chunks(m.n.max(1)).take(m.n).map(<[f64]>::to_vec).collect(),
            h: m.h,
        }
    }
}

impl IsingModel {
    /// Build from a flat row-major coupling matrix.
    pub fn new(n: usize, j: Vec<f64>, h: Vec<f64>, beta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidModel("model needs at least one spin".into()));
        }
        if j.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: j.len() });
        }
        if h.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: h.len() });
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidModel(format!("beta must be positive and finite, got {beta}")));
        }
        if j.iter().chain(&h).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite coupling or field".into()));
        }
        if (0..n).any(|i| j[i * n + i] != 0.0) {
            return Err(Error::InvalidModel("diagonal of J must be zero".into()));
        }
        Ok(Self { n, j, h, beta })
    }

    pub fn from_rows(rows: &[Vec<f64>], h: Vec<f64>, beta: f64) -> Result<Self> {
        let n = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: r.len() });
        }
        Self::new(n, rows.concat(), h, beta)
    }

    /// Non-interacting, field-free model.
    pub fn free(n: usize, beta: f64) -> Result<Self> {
        Self::new(n, vec![0.0; n * n], vec![0.0; n], beta)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn couplings(&self) -> &[f64] {
        &self.j
    }

    pub fn fields(&self) -> &[f64] {
        &self.h
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.j[i * self.n + j]
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.n, self.j.clone(), self.h.clone(), beta)
    }

    /// Multiply every coupling and field by `factor`, keeping `beta`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.n,
            self.j.iter().map(|v| v * factor).collect(),
            self.h.iter().map(|v| v * factor).collect(),
            self.beta,
        )
    }

    pub fn has_field(&self) -> bool {
        self.h.iter().any(|&v| v != 0.0)
    }

    pub fn energy(&self, config: &SpinConfiguration) -> Result<f64> {
        if config.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: config.len() });
        }
        Ok(self.energy_of(config.spins()))
    }

    /// Energy of a raw spin slice; the slice must have length `n`.
    pub fn energy_of(&self, x: &[i8]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        let mut e = 0.0;
        for (i, row) in self.j.chunks_exact(self.n).enumerate() {
            let xi = f64::from(x[i]);
            let s: f64 = row.iter().zip(x).map(|(&jij, &xj)| jij * f64::from(xj)).sum();
            e += xi * (s + self.h[i]);
        }
        e
    }

    /// `sum_{j != i} (J_ij + J_ji) x_j + h_i`, so that flipping spin `i`
    /// changes the energy by `-2 x_i` times this value.
    pub fn local_field(&self, i: usize, x: &[i8]) -> f64 {
        let n = self.n;
        let mut s = self.h[i];
        for (k, &xk) in x.iter().enumerate() {
            if k != i {
                s += (self.j[i * n + k] + self.j[k * n + i]) * f64::from(xk);
            }
        }
        s
    }

    /// Symmetrised coupling `J_ij + J_ji`, the strength of bond `{i, j}`.
    pub fn bond(&self, i: usize, j: usize) -> f64 {
        self.j[i * self.n + j] + self.j[j * self.n + i]
    }

    /// Equivalent field-free model on `n + 1` spins: `h` becomes the last
    /// column of the coupling matrix and the last row stays zero.
    /// `ln Z` of the result is `ln Z + ln 2`.
    pub fn absorb_external_field(&self) -> IsingModel {
        let n = self.n;
        let m = n + 1;
        let mut j = vec![0.0; m * m];
        for i in 0..n {
            j[i * m..i * m + n].copy_from_slice(&self.j[i * n..(i + 1) * n]);
            j[i * m + n] = self.h[i];
        }
        IsingModel { n: m, j, h: vec![0.0; m], beta: self.beta }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

fn check_limit(what: &'static str, n: usize, limit: usize) -> Result<()> {
    if n > limit || n >= 63 {
        return Err(Error::TooLarge { what, n, limit });
    }
    Ok(())
}

/// Visit every configuration in Gray-code order, passing the state index
/// (see [`SpinConfiguration::from_index`]), the spins and the energy.
pub fn for_each_state<F>(model: &IsingModel, limit: usize, mut visit: F) -> Result<()>
where
    F: FnMut(u64, &[i8], f64),
{
    let n = model.n();
    check_limit("exact enumeration", n, limit)?;
    let mut x = vec![1i8; n];
    let mut index = 0u64;
    let mut e = model.energy_of(&x);
    visit(index, &x, e);
    for step in 1u64..(1u64 << n) {
        let i = step.trailing_zeros() as usize;
        e -= 2.0 * f64::from(x[i]) * model.local_field(i, &x);
        x[i] = -x[i];
        index ^= 1 << i;
        // resynchronise to keep rounding drift bounded
        if step & 0x3ff == 0 {
            e = model.energy_of(&x);
        }
        visit(index, &x, e);
    }
    Ok(())
}

/// Streaming log-sum-exp accumulator.
#[derive(Clone, Copy, Debug)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self { max: f64::NEG_INFINITY, sum: 0.0 }
    }
}

impl LogSumExp {
    pub fn add(&mut self, v: f64) {
        if v > self.max {
            self.sum = self.sum * (self.max - v).exp() + 1.0;
            self.max = v;
        } else {
            self.sum += (v - self.max).exp();
        }
    }

    pub fn value(&self) -> f64 {
        self.max + self.sum.ln()
    }
}

/// `ln Z` by enumeration, refusing models above [`DEFAULT_ENUMERATION_LIMIT`].
pub fn exact_log_partition(model: &IsingModel) -> Result<f64> {
    exact_log_partition_with_limit(model, DEFAULT_ENUMERATION_LIMIT)
}

pub fn exact_log_partition_with_limit(model: &IsingModel, limit: usize) -> Result<f64> {
    let beta = model.beta();
    let mut acc = LogSumExp::default();
    for_each_state(model, limit, |_, _, e| acc.add(-beta * e))?;
    Ok(acc.value())
}

/// `F = -ln Z / beta`.
pub fn exact_free_energy(model: &IsingModel) -> Result<f64> {
    Ok(-exact_log_partition(model)? / model.beta())
}

/// Exact Boltzmann expectations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExactSummary {
    pub log_z: f64,
    pub free_energy: f64,
    pub mean_energy: f64,
    pub per_spin: Vec<f64>,
    pub magnetization: f64,
}

pub fn exact_summary(model: &IsingModel) -> Result<ExactSummary> {
    let n = model.n();
    let beta = model.beta();
    let log_z = exact_log_partition(model)?;
    let mut mean_energy = 0.0;
    let mut per_spin = vec![0.0; n];
    for_each_state(model, DEFAULT_ENUMERATION_LIMIT, |_, x, e| {
        let p = (-beta * e - log_z).exp();
        mean_energy += p * e;
        for (m, &s) in per_spin.iter_mut().zip(x) {
            *m += p * f64::from(s);
        }
    })?;
    let magnetization = per_spin.iter().sum::<f64>() / n as f64;
    Ok(ExactSummary { log_z, free_energy: -log_z / beta, mean_energy, per_spin, magnetization })
}

/// Boltzmann probability of every state, indexed as in
/// [`SpinConfiguration::from_index`].
pub fn boltzmann_probabilities(model: &IsingModel, limit: usize) -> Result<Vec<f64>> {
    let beta = model.beta();
    let log_z = exact_log_partition_with_limit(model, limit)?;
    let mut probs = vec![0.0; 1usize << model.n()];
    for_each_state(model, limit, |idx, _, e| probs[idx as usize] = (-beta * e - log_z).exp())?;
    Ok(probs)
}

/// Settings for the single-site Gibbs reference chain.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub n_samples: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self { n_samples: 10_000, burn_in: 1000, thin: 1, seed: 0 }
    }
}

/// Systematic-scan Gibbs sampler targeting `exp(-beta E)`.
///
/// Sites are updated in index order `0..n` within a sweep; `burn_in` sweeps
/// are discarded and then one configuration is kept every `thin` sweeps.
pub fn gibbs_sample(model: &IsingModel, cfg: &GibbsConfig) -> Result<SampleSet> {
    if cfg.n_samples == 0 || cfg.thin == 0 {
        return Err(Error::InvalidConfig("n_samples and thin must be positive".into()));
    }
    let n = model.n();
    let beta = model.beta();
    let mut rng = rng::rng_from_seed(cfg.seed);
    let mut x: Vec<i8> = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();

    // bond[i] holds (J_ik + J_ki) for all k, zero on the diagonal
    let bonds: Vec<f64> = (0..n)
        .flat_map(|i| (0..n).map(move |k| (i, k)))
        .map(|(i, k)| if i == k { 0.0 } else { model.bond(i, k) })
        .collect();
    let h = model.fields();

    let sweep = |x: &mut [i8], rng: &mut rng::Rng| {
        for i in 0..n {
            let field: f64 = bonds[i * n..(i + 1) * n]
                .iter()
                .zip(x.iter())
                .map(|(&b, &s)| b * f64::from(s))
                .sum::<f64>()
                + h[i];
            // E(x_i=+1) - E(x_i=-1) = 2 * field
            let p_up = 1.0 / (1.0 + (2.0 * beta * field).exp());
            x[i] = if rng.random::<f64>() < p_up { 1 } else { -1 };
        }
    };

    for _ in 0..cfg.burn_in {
        sweep(&mut x, &mut rng);
    }
    let mut configurations = Vec::with_capacity(cfg.n_samples);
    while configurations.len() < cfg.n_samples {
        for _ in 0..cfg.thin {
            sweep(&mut x, &mut rng);
        }
        configurations.push(SpinConfiguration(x.clone()));
    }
    Ok(SampleSet { configurations, log_probs: None })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Magnetization {
    pub global: f64,
    pub per_spin: Vec<f64>,
    /// Standard error of the per-configuration mean spin.
    pub stderr: f64,
}

pub fn magnetization(samples: &SampleSet) -> Result<Magnetization> {
    let first = samples.configurations.first().ok_or(Error::EmptySamples)?;
    let n = first.len();
    let k = samples.len() as f64;
    let mut per_spin = vec![0.0; n];
    let mut config_means = Vec::with_capacity(samples.len());
    for c in &samples.configurations {
        if c.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: c.len() });
        }
        let mut s = 0.0;
        for (m, &x) in per_spin.iter_mut().zip(c.spins()) {
            *m += f64::from(x);
            s += f64::from(x);
        }
        config_means.push(s / n as f64);
    }
    per_spin.iter_mut().for_each(|m| *m /= k);
    let global = per_spin.iter().sum::<f64>() / n as f64;
    let stderr = if samples.len() > 1 {
        let var = config_means.iter().map(|m| (m - global).powi(2)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    } else {
        0.0
    };
    Ok(Magnetization { global, per_spin, stderr })
}

/// Square root of the sum of squared entries (works for any shape).
pub fn frobenius_norm(entries: &[f64]) -> f64 {
    entries.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `max_{x in {-1,1}^cols} sum_i |sum_j M_ij x_j|` by enumeration of sign
/// vectors; `m` is row-major `rows x cols`.
pub fn inf_to_one_norm(m: &[f64], rows: usize, cols: usize) -> Result<f64> {
    if m.len() != rows * cols {
        return Err(Error::DimensionMismatch { expected: rows * cols, got: m.len() });
    }
    check_limit("infinity-to-one norm", cols, DEFAULT_ENUMERATION_LIMIT)?;
    // fixing x_0 = +1 is enough: the objective is even in x
    let free = cols.saturating_sub(1);
    let mut best: f64 = 0.0;
    let mut y: Vec<f64> = (0..rows).map(|i| m[i * cols..(i + 1) * cols].iter().sum()).collect();
    let mut x = vec![1.0; cols];
    best = best.max(y.iter().map(|v| v.abs()).sum());
    for step in 1u64..(1u64 << free) {
        let j = step.trailing_zeros() as usize + 1;
        x[j] = -x[j];
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += 2.0 * x[j] * m[i * cols + j];
        }
        best = best.max(y.iter().map(|v| v.abs()).sum());
    }
    Ok(best)
}
