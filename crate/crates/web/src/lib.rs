//! Browser bindings: inspect a catalog dataset and its criticality tree,
//! compare naive mean field with the exact free energy across
//! temperatures, and watch the recurrent mean field train.
//!
//! Everything crosses the boundary as JSON strings. The plain functions
//! below the bindings carry the logic so they can be tested natively.

use cormf_core::bounds;
use cormf_core::cormf::{TrainConfig, Trainer};
use cormf_core::datasets::DatasetName;
use cormf_core::ising::{self, IsingModel};
use cormf_core::nmf::{self, NmfConfig};
use cormf_core::ordering::{self, TieBreak};
use cormf_core::rnn::{Architecture, RnnMeanField};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest model the page enumerates exactly.
pub const EXACT_LIMIT: usize = 12;

fn model_for(name: &str, seed: Option<u32>) -> Result<IsingModel, String> {
    let d: DatasetName = name.parse().map_err(|e: cormf_core::Error| e.to_string())?;
    Ok(d.generate(seed.map_or(d.default_seed(), u64::from)))
}

#[derive(Serialize)]
pub struct DatasetView {
    pub id: String,
    pub n: usize,
    pub beta: f64,
    pub couplings: Vec<Vec<f64>>,
    pub fields: Vec<f64>,
    pub order: Vec<usize>,
    pub tree_edges: Vec<[usize; 2]>,
    pub tree_weight: f64,
    pub exact_f: Option<f64>,
}

pub fn dataset_view(name: &str, seed: Option<u32>) -> Result<DatasetView, String> {
    let m = model_for(name, seed)?;
    let n = m.n();
    let (order, forest) = ordering::criticality_order(&m, TieBreak::ByIndex);
    let exact_f = if n <= EXACT_LIMIT { ising::exact_free_energy(&m).ok() } else { None };
    Ok(DatasetView {
        id: name.to_string(),
        n,
        beta: m.beta(),
        couplings: m.couplings().chunks(n).map(<[f64]>::to_vec).collect(),
        fields: m.fields().to_vec(),
        order: order.as_slice().to_vec(),
        tree_edges: forest.edges.iter().map(|e| [e.u, e.v]).collect(),
        tree_weight: forest.total_weight(),
        exact_f,
    })
}

#[derive(Serialize)]
pub struct Curve {
    pub beta: Vec<f64>,
    pub exact: Vec<f64>,
    pub nmf: Vec<f64>,
    pub naive_bound: Vec<f64>,
}

/// Exact and naive mean-field free energy for `points` inverse
/// temperatures between 0.1 and 2 times the dataset's own.
pub fn free_energy_curve(name: &str, seed: Option<u32>, points: usize) -> Result<Curve, String> {
    let base = model_for(name, seed)?;
    if base.n() > EXACT_LIMIT {
        return Err(format!("the curve needs n <= {EXACT_LIMIT}, got {}", base.n()));
    }
    let points = points.clamp(2, 60);
    let mut c = Curve { beta: vec![], exact: vec![], nmf: vec![], naive_bound: vec![] };
    let cfg = NmfConfig { restarts: 3, iterations: 3000, ..NmfConfig::default() };
    for k in 0..points {
        let beta = base.beta() * (0.1 + 1.9 * k as f64 / (points - 1) as f64);
        let m = base.with_beta(beta).map_err(|e| e.to_string())?;
        c.beta.push(beta);
        c.exact.push(ising::exact_free_energy(&m).map_err(|e| e.to_string())?);
        c.nmf.push(nmf::nmf_minimize(&m, &cfg).map_err(|e| e.to_string())?.f_star);
        c.naive_bound.push(bounds::naive_bound(&m));
    }
    Ok(c)
}

#[derive(Serialize)]
pub struct StepView {
    pub iteration: usize,
    pub f: f64,
    pub stderr: f64,
    pub magnetization: f64,
    pub lr: f64,
}

/// A training run the page advances a few iterations per frame.
#[wasm_bindgen]
pub struct Training {
    trainer: Trainer,
    exact_f: Option<f64>,
}

impl Training {
    pub fn create(name: &str, seed: u32, batch: usize, iterations: usize, hidden: usize) -> Result<Training, String> {
        let m = model_for(name, None)?;
        let (order, _) = ordering::criticality_order(&m, TieBreak::ByIndex);
        let arch = Architecture { layers: 2, hidden };
        let net = RnnMeanField::new(arch, u64::from(seed)).map_err(|e| e.to_string())?;
        let cfg = TrainConfig { batch_size: batch, iterations, seed: u64::from(seed), ..TrainConfig::default() };
        let trainer = Trainer::new(&m, &order, net, &cfg).map_err(|e| e.to_string())?;
        let exact_f = if m.n() <= EXACT_LIMIT { ising::exact_free_energy(&m).ok() } else { None };
        Ok(Training { trainer, exact_f })
    }

    pub fn advance(&mut self, count: usize) -> Result<Vec<StepView>, String> {
        let mut out = Vec::new();
        for _ in 0..count {
            if self.trainer.is_done() {
                break;
            }
            let r = self.trainer.step().map_err(|e| e.to_string())?;
            out.push(StepView { iteration: r.iteration, f: r.f_mean, stderr: r.f_stderr, magnetization: r.magnetization, lr: r.lr });
        }
        Ok(out)
    }
}

fn js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string())).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn dataset(name: &str, seed: Option<u32>) -> Result<String, JsValue> {
    js(dataset_view(name, seed))
}

#[wasm_bindgen]
pub fn curve(name: &str, seed: Option<u32>, points: usize) -> Result<String, JsValue> {
    js(free_energy_curve(name, seed, points))
}

#[wasm_bindgen]
pub fn catalog() -> String {
    let ids: Vec<(&str, &str)> = DatasetName::ALL.iter().map(|d| (d.id(), d.describe())).collect();
    serde_json::to_string(&ids).unwrap()
}

#[wasm_bindgen]
impl Training {
    #[wasm_bindgen(constructor)]
    pub fn new(name: &str, seed: u32, batch: usize, iterations: usize, hidden: usize) -> Result<Training, JsValue> {
        Training::create(name, seed, batch, iterations, hidden).map_err(|e| JsValue::from_str(&e))
    }

    /// Run up to `count` iterations; returns the new history rows as JSON.
    pub fn step(&mut self, count: usize) -> Result<String, JsValue> {
        js(self.advance(count))
    }

    pub fn done(&self) -> bool {
        self.trainer.is_done()
    }

    #[wasm_bindgen(getter)]
    pub fn exact(&self) -> Option<f64> {
        self.exact_f
    }
}
