//! Stacked tanh recurrent network emitting one binary conditional per step.
//!
//! At step `t` the network reads the spin generated at step `t - 1` as a
//! two-way one-hot vector (`+1 -> [1, 0]`, `-1 -> [0, 1]`; a zero vector at
//! `t = 0`), updates
//!
//! ```text
//! h_l(t) = tanh(W_ih[l] in_l(t) + W_hh[l] h_l(t-1) + b[l])
//! ```
//!
//! for every layer `l` (with `in_0` the one-hot input and `in_l = h_{l-1}(t)`
//! above), and applies a linear read-out plus a two-way softmax to the top
//! hidden state. Everything here works in *step* order; mapping steps to
//! spin indices is the caller's business.
//!
//! All parameters live in one flat vector laid out layer by layer as
//! `W_ih (H x in), W_hh (H x H), b (H)`, followed by `W_out (2 x H)` and
//! `b_out (2)`. Matrices are row-major.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2, ArrayViewMut2, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Width of the one-hot spin encoding.
pub const INPUT_DIM: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub layers: usize,
    pub hidden: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Self { layers: 2, hidden: 50 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct LayerSlots {
    w_ih: usize,
    w_hh: usize,
    bias: usize,
    input: usize,
}

#[derive(Clone, Debug, PartialEq)]
struct Layout {
    layers: Vec<LayerSlots>,
    w_out: usize,
    b_out: usize,
    len: usize,
}

impl Layout {
    fn new(arch: Architecture) -> Self {
        let h = arch.hidden;
        let mut off = 0;
        let layers = (0..arch.layers)
            .map(|l| {
                let input = if l == 0 { INPUT_DIM } else { h };
                let slots = LayerSlots { w_ih: off, w_hh: off + h * input, bias: off + h * input + h * h, input };
                off += h * input + h * h + h;
                slots
            })
            .collect();
        let w_out = off;
        let b_out = off + 2 * h;
        Self { layers, w_out, b_out, len: b_out + 2 }
    }
}

/// Parameters of the recurrent conditional model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRnn", into = "RawRnn")]
pub struct RnnMeanField {
    arch: Architecture,
    params: Vec<f64>,
    layout: Layout,
}

#[derive(Serialize, Deserialize)]
struct RawRnn {
    architecture: Architecture,
    input_encoding: String,
    n_params: usize,
    params: Vec<f64>,
}

const ENCODING: &str = "one-hot previous spin, zero start token";

impl TryFrom<RawRnn> for RnnMeanField {
    type Error = Error;
    fn try_from(raw: RawRnn) -> Result<Self> {
        RnnMeanField::from_params(raw.architecture, raw.params)
    }
}

impl From<RnnMeanField> for RawRnn {
    fn from(r: RnnMeanField) -> Self {
        RawRnn {
            architecture: r.arch,
            input_encoding: ENCODING.to_string(),
            n_params: r.params.len(),
            params: r.params,
        }
    }
}

impl RnnMeanField {
    /// Recurrent weights uniform in `[-1/sqrt(H), 1/sqrt(H)]`; the read-out
    /// starts at zero so every conditional is exactly 1/2.
    pub fn new(arch: Architecture, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(arch)?;
        let bound = 1.0 / (arch.hidden as f64).sqrt();
        let mut r = rng::rng_from_seed(seed);
        let w_out = net.layout().w_out;
        for p in &mut net.params[..w_out] {
            *p = r.random_range(-bound..=bound);
        }
        Ok(net)
    }

    pub fn zeros(arch: Architecture) -> Result<Self> {
        if arch.layers == 0 || arch.hidden == 0 {
            return Err(Error::InvalidConfig("network needs at least one layer and one hidden unit".into()));
        }
        let layout = Layout::new(arch);
        Ok(Self { arch, params: vec![0.0; layout.len], layout })
    }

    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(arch)?;
        if params.len() != net.params.len() {
            return Err(Error::DimensionMismatch { expected: net.params.len(), got: params.len() });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidConfig("non-finite parameter".into()));
        }
        net.params = params;
        Ok(net)
    }

    pub fn architecture(&self) -> Architecture {
        self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn layout(&self) -> &Layout {
        &self.layout
    }

    fn mat(&self, off: usize, rows: usize, cols: usize) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((rows, cols), &self.params[off..off + rows * cols]).unwrap()
    }

    /// Output-layer slices `(W_out, b_out)` as flat row-major storage.
    pub fn readout_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        let (w_out, b_out) = (self.layout.w_out, self.layout.b_out);
        let (head, b) = self.params.split_at_mut(b_out);
        (&mut head[w_out..], b)
    }

    /// Range of the flat vector holding layer `l`'s `(W_ih, W_hh, b)` block.
    pub fn layer_range(&self, l: usize) -> std::ops::Range<usize> {
        let s = self.layout.layers[l];
        s.w_ih..s.bias + self.arch.hidden
    }

    /// Run the network over `steps` steps for a batch.
    ///
    /// With [`Drive::Teacher`] the spins (row-major `batch x steps`, step
    /// order) are given; with [`Drive::Sample`] step `t` of row `k` draws
    /// `+1` when `uniforms[k * steps + t] < q(+1)`.
    pub fn rollout(&self, steps: usize, batch: usize, drive: Drive<'_>) -> Rollout {
        match drive {
            Drive::Teacher(s) => assert_eq!(s.len(), batch * steps),
            Drive::Sample(u) => assert_eq!(u.len(), batch * steps),
        }
        let layout = self.layout();
        let h = self.arch.hidden;
        let nl = self.arch.layers;
        let mut spins = vec![0i8; batch * steps];
        let mut p_plus = vec![0.0; batch * steps];
        let mut log_probs = vec![0.0; batch];
        let mut hidden: Vec<Vec<Array2<f64>>> = Vec::with_capacity(steps);

        let w_out = self.mat(layout.w_out, 2, h);
        let b_out = &self.params[layout.b_out..layout.b_out + 2];
        // difference of the two logits is all the softmax needs
        let w_diff: Vec<f64> = (0..h).map(|i| w_out[[0, i]] - w_out[[1, i]]).collect();
        let b_diff = b_out[0] - b_out[1];

        for t in 0..steps {
            let mut layer_out: Vec<Array2<f64>> = Vec::with_capacity(nl);
            for (l, slots) in layout.layers.iter().enumerate() {
                let bias = &self.params[slots.bias..slots.bias + h];
                let mut a = Array2::<f64>::zeros((batch, h));
                for mut row in a.rows_mut() {
                    row.as_slice_mut().unwrap().copy_from_slice(bias);
                }
                if l == 0 {
                    if t > 0 {
                        let w_ih = self.mat(slots.w_ih, h, INPUT_DIM);
                        for (k, mut row) in a.rows_mut().into_iter().enumerate() {
                            let c = class_of(spins[k * steps + t - 1]);
                            row += &w_ih.column(c);
                        }
                    }
                } else {
                    let w_ih = self.mat(slots.w_ih, h, h);
                    general_mat_mul(1.0, &layer_out[l - 1], &w_ih.t(), 1.0, &mut a);
                }
                if t > 0 {
                    let w_hh = self.mat(slots.w_hh, h, h);
                    general_mat_mul(1.0, &hidden[t - 1][l], &w_hh.t(), 1.0, &mut a);
                }
                a.mapv_inplace(f64::tanh);
                layer_out.push(a);
            }

            let top = &layer_out[nl - 1];
            for k in 0..batch {
                let d = top.row(k).iter().zip(&w_diff).map(|(x, w)| x * w).sum::<f64>() + b_diff;
                let idx = k * steps + t;
                let p = sigmoid(d);
                p_plus[idx] = p;
                let s = match drive {
                    Drive::Teacher(given) => given[idx],
                    Drive::Sample(u) => {
                        if u[idx] < p {
                            1
                        } else {
                            -1
                        }
                    }
                };
                spins[idx] = s;
                // log q(+1) = -softplus(-d), log q(-1) = -softplus(d)
                log_probs[k] -= if s > 0 { softplus(-d) } else { softplus(d) };
            }
            hidden.push(layer_out);
        }
        Rollout { steps, batch, spins, p_plus, log_probs, hidden }
    }

    /// Gradient of `sum_k weights[k] * ln Q(X_k)` with respect to all
    /// parameters, by backpropagation through the unrolled recurrence.
    pub fn backward(&self, rollout: &Rollout, weights: &[f64]) -> Vec<f64> {
        let Rollout { steps, batch, .. } = *rollout;
        assert_eq!(weights.len(), batch);
        let layout = self.layout();
        let h = self.arch.hidden;
        let nl = self.arch.layers;
        let mut grad = vec![0.0; self.params.len()];
        if steps == 0 {
            return grad;
        }

        let w_out = self.mat(layout.w_out, 2, h);
        let mut carry: Vec<Array2<f64>> = (0..nl).map(|_| Array2::zeros((batch, h))).collect();
        let mut d_out = Array2::<f64>::zeros((batch, 2));

        for t in (0..steps).rev() {
            for k in 0..batch {
                let idx = k * steps + t;
                let p = rollout.p_plus[idx];
                let (y0, y1) = if rollout.spins[idx] > 0 { (1.0, 0.0) } else { (0.0, 1.0) };
                d_out[[k, 0]] = weights[k] * (y0 - p);
                d_out[[k, 1]] = weights[k] * (y1 - (1.0 - p));
            }
            let top = &rollout.hidden[t][nl - 1];
            {
                let mut g = grad_view(&mut grad, layout.w_out, 2, h);
                general_mat_mul(1.0, &d_out.t(), top, 1.0, &mut g);
            }
            let sums = d_out.sum_axis(Axis(0));
            grad[layout.b_out] += sums[0];
            grad[layout.b_out + 1] += sums[1];

            let mut dh = d_out.dot(&w_out);
            dh += &carry[nl - 1];

            for l in (0..nl).rev() {
                let slots = layout.layers[l];
                let out = &rollout.hidden[t][l];
                let mut da = dh;
                da.zip_mut_with(out, |g, &y| *g *= 1.0 - y * y);

                if l == 0 {
                    if t > 0 {
                        for k in 0..batch {
                            let c = class_of(rollout.spins[k * steps + t - 1]);
                            for (i, &v) in da.row(k).iter().enumerate() {
                                grad[slots.w_ih + i * INPUT_DIM + c] += v;
                            }
                        }
                    }
                } else {
                    let mut g = grad_view(&mut grad, slots.w_ih, h, h);
                    general_mat_mul(1.0, &da.t(), &rollout.hidden[t][l - 1], 1.0, &mut g);
                }
                if t > 0 {
                    let mut g = grad_view(&mut grad, slots.w_hh, h, h);
                    general_mat_mul(1.0, &da.t(), &rollout.hidden[t - 1][l], 1.0, &mut g);
                }
                for (g, v) in grad[slots.bias..slots.bias + h].iter_mut().zip(da.sum_axis(Axis(0))) {
                    *g += v;
                }

                dh = if l > 0 {
                    let w_ih = self.mat(slots.w_ih, h, h);
                    let mut below = da.dot(&w_ih);
                    below += &carry[l - 1];
                    below
                } else {
                    Array2::zeros((0, 0))
                };
                if t > 0 {
                    let w_hh = self.mat(slots.w_hh, h, h);
                    general_mat_mul(1.0, &da, &w_hh, 0.0, &mut carry[l]);
                }
            }
        }
        grad
    }
}

fn grad_view(grad: &mut [f64], off: usize, rows: usize, cols: usize) -> ArrayViewMut2<'_, f64> {
    ArrayViewMut2::from_shape((rows, cols), &mut grad[off..off + rows * cols]).unwrap()
}

/// Step-ordered input for [`RnnMeanField::rollout`].
#[derive(Clone, Copy, Debug)]
pub enum Drive<'a> {
    Teacher(&'a [i8]),
    Sample(&'a [f64]),
}

/// Forward-pass record: spins, conditionals and cached activations.
#[derive(Clone, Debug)]
pub struct Rollout {
    pub steps: usize,
    pub batch: usize,
    /// `batch x steps`, step order.
    pub spins: Vec<i8>,
    /// `q(+1 | previous steps)` at every step, `batch x steps`.
    pub p_plus: Vec<f64>,
    /// `ln Q(X_k)` per row.
    pub log_probs: Vec<f64>,
    hidden: Vec<Vec<Array2<f64>>>,
}

impl Rollout {
    pub fn row(&self, k: usize) -> &[i8] {
        &self.spins[k * self.steps..(k + 1) * self.steps]
    }

    /// Probability of the realised value at each step for row `k`.
    pub fn realised_conditionals(&self, k: usize) -> Vec<f64> {
        (0..self.steps)
            .map(|t| {
                let idx = k * self.steps + t;
                if self.spins[idx] > 0 {
                    self.p_plus[idx]
                } else {
                    1.0 - self.p_plus[idx]
                }
            })
            .collect()
    }
}

fn class_of(spin: i8) -> usize {
    if spin > 0 {
        0
    } else {
        1
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}
