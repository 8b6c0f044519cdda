//! All methods on catalog datasets: recurrent mean field in three orders,
//! naive mean field, a Gibbs reference and, when enumerable, the exact
//! answer.

use cormf_core::datasets::DatasetName;
use cormf_core::ising::{self, GibbsConfig};
use cormf_core::nmf::{self, NmfConfig};
use cormf_core::rng::derive_seed;
use rayon::prelude::*;
use serde::Serialize;

use crate::commands::{architecture, compute_order, train_and_evaluate, train_config, EXACT_REPORT_LIMIT};
use crate::manifest::ManifestBuilder;
use crate::output::{sig6, Artifacts, CliError, CliResult};
use crate::{OrderMode, Table1Args, TieBreakArg};

/// Iterations used when `--iterations` is not given.
pub fn default_iterations(d: DatasetName) -> usize {
    match d {
        DatasetName::Chain100 => 2000,
        _ => 10_000,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Run {
    pub seed: u64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "F_stderr")]
    pub f_stderr: f64,
    pub magnetization: f64,
    /// Batch estimate at the last training iteration.
    #[serde(rename = "final_train_F")]
    pub final_train_f: f64,
    /// `F >= F_exact - 3 stderr`, when the exact value is known.
    pub consistent_with_exact: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub method: String,
    #[serde(rename = "F_mean")]
    pub f_mean: Option<f64>,
    #[serde(rename = "F_std")]
    pub f_std: Option<f64>,
    pub mag_mean: f64,
    pub mag_std: f64,
    pub runs: Vec<Run>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DatasetTable {
    pub dataset: String,
    pub n: usize,
    pub beta: f64,
    pub iterations: usize,
    pub rows: Vec<Row>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Table {
    pub datasets: Vec<DatasetTable>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    let std = if v.len() > 1 { (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt() } else { 0.0 };
    (mean, std)
}

fn row_from_runs(method: &str, runs: Vec<Run>) -> Row {
    let (f_mean, f_std) = mean_std(&runs.iter().map(|r| r.f).collect::<Vec<_>>());
    let (mag_mean, mag_std) = mean_std(&runs.iter().map(|r| r.magnetization).collect::<Vec<_>>());
    Row { method: method.to_string(), f_mean: Some(f_mean), f_std: Some(f_std), mag_mean, mag_std, runs }
}

const ORDERS: [(OrderMode, &str); 3] =
    [(OrderMode::Criticality, "CoRMF"), (OrderMode::Random, "RO-CoRMF"), (OrderMode::Identity, "IO-CoRMF")];

pub fn run(a: Table1Args, argv: Vec<String>) -> CliResult<()> {
    let manifest = ManifestBuilder::start("table1", argv);
    let datasets: Vec<DatasetName> = a
        .datasets
        .iter()
        .map(|s| s.parse().map_err(|e: cormf_core::Error| CliError::Usage(e.to_string())))
        .collect::<CliResult<_>>()?;
    if a.repeats == 0 || a.nmf_repeats == 0 {
        return Err(CliError::Usage("--repeats and --nmf-repeats must be positive".into()));
    }
    let orders = if a.skip_ablation { &ORDERS[..1] } else { &ORDERS[..] };
    let arch = architecture(&a.training);

    let mut tables = Vec::new();
    let mut seeds = Vec::new();
    for (di, &d) in datasets.iter().enumerate() {
        let model = d.generate(d.default_seed());
        let iterations = a.training.iterations.unwrap_or(default_iterations(d));
        let exact = if model.n() <= EXACT_REPORT_LIMIT { Some(ising::exact_summary(&model)?) } else { None };

        let jobs: Vec<(usize, u64)> = (0..orders.len())
            .flat_map(|oi| (0..a.repeats).map(move |r| (oi, derive_seed(a.common.seed, &[di as u64, r as u64]))))
            .collect();
        seeds.extend(jobs.iter().take(a.repeats).map(|j| j.1));
        let results: Vec<CliResult<(usize, Run)>> = jobs
            .par_iter()
            .map(|&(oi, seed)| {
                let (order, _) = compute_order(&model, orders[oi].0, TieBreakArg::Index, derive_seed(seed, &[1]));
                let cfg = train_config(&a.training, seed, iterations);
                let label = format!("{d} {} seed {seed}", orders[oi].1);
                let out = train_and_evaluate(&model, &order, arch, &cfg, cfg.batch_size, Some(&label))?;
                let e = &out.evaluation;
                Ok((
                    oi,
                    Run {
                        seed,
                        f: e.free_energy.mean,
                        f_stderr: e.free_energy.stderr,
                        magnetization: e.magnetization.mean,
                        final_train_f: out.report.last().map_or(f64::NAN, |r| r.f_mean),
                        consistent_with_exact: exact
                            .as_ref()
                            .map(|x| e.free_energy.mean >= x.free_energy - 3.0 * e.free_energy.stderr),
                    },
                ))
            })
            .collect();
        let mut per_order: Vec<Vec<Run>> = vec![Vec::new(); orders.len()];
        for r in results {
            let (oi, run) = r?;
            per_order[oi].push(run);
        }
        let mut rows: Vec<Row> =
            per_order.into_iter().zip(orders).map(|(runs, (_, name))| row_from_runs(name, runs)).collect();

        let nmf_cfg = NmfConfig {
            restarts: a.nmf_repeats,
            seed: derive_seed(a.common.seed, &[di as u64, u64::MAX]),
            ..NmfConfig::default()
        };
        let sol = nmf::nmf_minimize(&model, &nmf_cfg)?;
        let nmf_runs = sol
            .restart_results
            .iter()
            .map(|r| Run {
                seed: r.seed,
                f: r.f_star,
                f_stderr: 0.0,
                magnetization: r.magnetization,
                final_train_f: r.f_star,
                consistent_with_exact: exact.as_ref().map(|x| r.f_star >= x.free_energy - 1e-9),
            })
            .collect();
        rows.push(row_from_runs("NMF", nmf_runs));

        let gibbs_seed = derive_seed(a.common.seed, &[di as u64, u64::MAX - 1]);
        let gcfg = GibbsConfig { n_samples: a.gibbs_samples, seed: gibbs_seed, ..GibbsConfig::default() };
        let m = ising::magnetization(&ising::gibbs_sample(&model, &gcfg)?)?;
        rows.push(Row {
            method: "Reference".into(),
            f_mean: None,
            f_std: None,
            mag_mean: m.global,
            mag_std: m.stderr,
            runs: Vec::new(),
        });
        if let Some(x) = &exact {
            rows.push(Row {
                method: "Exact".into(),
                f_mean: Some(x.free_energy),
                f_std: Some(0.0),
                mag_mean: x.magnetization,
                mag_std: 0.0,
                runs: Vec::new(),
            });
        }
        tables.push(DatasetTable { dataset: d.id().into(), n: model.n(), beta: model.beta(), iterations, rows });
    }
    let table = Table { datasets: tables };

    let mut art = Artifacts::new(&a.common.out_dir)?;
    art.json("table1.json", &table)?;
    art.text("table1.csv", &csv(&table))?;
    let md = markdown(&table);
    art.text("table1.md", &md)?;
    print!("{md}");
    manifest.finish(&mut art, &a, seeds)?;
    Ok(())
}

fn csv(t: &Table) -> String {
    let mut s = String::from("dataset,method,F_mean,F_std,mag_mean,mag_std\n");
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
    for d in &t.datasets {
        for r in &d.rows {
            s += &format!(
                "{},{},{},{},{:e},{:e}\n",
                d.dataset,
                r.method,
                opt(r.f_mean),
                opt(r.f_std),
                r.mag_mean,
                r.mag_std
            );
        }
    }
    s
}

fn markdown(t: &Table) -> String {
    let mut s = String::new();
    for d in &t.datasets {
        s += &format!("\n{} (n = {}, beta = {}, {} iterations)\n\n", d.dataset, d.n, d.beta, d.iterations);
        s += "| method | F* | <x> |\n|---|---|---|\n";
        for r in &d.rows {
            let f = match (r.f_mean, r.f_std) {
                (Some(m), Some(sd)) => format!("{} ± {}", sig6(m), sig6(sd)),
                _ => "-".into(),
            };
            s += &format!("| {} | {} | {} ± {} |\n", r.method, f, sig6(r.mag_mean), sig6(r.mag_std));
        }
    }
    s
}
