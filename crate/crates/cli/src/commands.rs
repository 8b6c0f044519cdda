use std::path::Path;

use cormf_core::bounds;
use cormf_core::cormf::{self, Anneal, Checkpoint, Evaluation, IterationRecord, TrainConfig, TrainReport, Trainer};
use cormf_core::datasets::DatasetName;
use cormf_core::ising::{self, GibbsConfig, IsingModel};
use cormf_core::nmf::{self, NmfConfig};
use cormf_core::ordering::{self, OrderFile, SpanningForest, TieBreak};
use cormf_core::rnn::{Architecture, RnnMeanField};
use cormf_core::SpinOrder;
use serde::Serialize;

use crate::manifest::ManifestBuilder;
use crate::output::{Artifacts, CliError, CliResult};
use crate::*;

/// Largest `n` for which `train` and `table1` add the exact free energy.
pub const EXACT_REPORT_LIMIT: usize = 20;

pub fn load_model(path: &Path) -> CliResult<IsingModel> {
    IsingModel::load(path).map_err(|e| match e {
        cormf_core::Error::Io(io) => CliError::Usage(format!("cannot read model {}: {io}", path.display())),
        other => other.into(),
    })
}

pub fn compute_order(
    model: &IsingModel,
    mode: OrderMode,
    tie_break: TieBreakArg,
    seed: u64,
) -> (SpinOrder, Option<SpanningForest>) {
    match mode {
        OrderMode::Criticality => {
            let tb = match tie_break {
                TieBreakArg::Index => TieBreak::ByIndex,
                TieBreakArg::Seeded => TieBreak::Seeded(seed),
            };
            let (o, f) = ordering::criticality_order(model, tb);
            (o, Some(f))
        }
        OrderMode::Random => (ordering::random_order(model.n(), seed), None),
        OrderMode::Identity => (SpinOrder::identity(model.n()), None),
    }
}

pub fn train_config(flags: &TrainingFlags, seed: u64, default_iterations: usize) -> TrainConfig {
    TrainConfig {
        learning_rate: flags.lr,
        batch_size: flags.batch,
        iterations: flags.iterations.unwrap_or(default_iterations),
        anneal: {
            let start = flags.anneal_start.unwrap_or(0.1);
            let ramp = flags.anneal_ramp;
            match flags.anneal {
                AnnealArg::On => Anneal::Linear { start, ramp },
                AnnealArg::Off => Anneal::Off,
                AnnealArg::Geometric => Anneal::Geometric { start, ramp },
            }
        },
        seed,
        ..TrainConfig::default()
    }
}

pub fn architecture(flags: &TrainingFlags) -> Architecture {
    Architecture { layers: flags.layers, hidden: flags.hidden }
}

pub struct TrainOutcome {
    pub net: RnnMeanField,
    pub report: TrainReport,
    pub evaluation: Evaluation,
}

/// Train from a fresh network, then evaluate on `eval_samples` new samples
/// drawn from a stream not used in training.
pub fn train_and_evaluate(
    model: &IsingModel,
    order: &SpinOrder,
    arch: Architecture,
    cfg: &TrainConfig,
    eval_samples: usize,
    label: Option<&str>,
) -> CliResult<TrainOutcome> {
    let net = RnnMeanField::new(arch, cfg.seed)?;
    let mut trainer = Trainer::new(model, order, net, cfg)?;
    let every = (cfg.iterations / 10).max(1);
    while !trainer.is_done() {
        let rec = trainer.step()?;
        if let Some(label) = label {
            if rec.iteration % every == 0 || rec.iteration + 1 == cfg.iterations {
                eprintln!("{label} iter {:>6}  F {:.6} +- {:.2e}  lr {:.2e}", rec.iteration, rec.f_mean, rec.f_stderr, rec.lr);
            }
        }
    }
    let (net, report) = trainer.finish();
    let eval_seed = cormf_core::rng::derive_seed(cfg.seed, &[u64::MAX]);
    let evaluation = cormf::evaluate(&net, model, order, eval_samples, eval_seed)?;
    Ok(TrainOutcome { net, report, evaluation })
}

pub fn gen(a: GenArgs, argv: Vec<String>) -> CliResult<()> {
    if a.list {
        for d in DatasetName::ALL {
            println!("{:<14} seed {:<8} {}", d.id(), d.default_seed(), d.describe());
        }
        return Ok(());
    }
    let manifest = ManifestBuilder::start("gen", argv);
    let name: DatasetName = a.name.as_deref().unwrap_or_default().parse().map_err(|e: cormf_core::Error| CliError::Usage(e.to_string()))?;
    let seed = a.seed.unwrap_or(name.default_seed());
    let model = name.generate(seed);
    let mut art = Artifacts::new(&a.out_dir)?;
    let out = art.path(&a.out.to_string_lossy());
    if let Some(parent) = out.parent() {
        std::fs::create_dir_all(parent)?;
    }
    model.save(&out)?;
    art.written.push(out.clone());
    println!("{} (n = {}, seed {seed}) -> {}", name, model.n(), out.display());
    manifest.finish(&mut art, &a, vec![seed])?;
    Ok(())
}

#[derive(Serialize)]
struct OrderSummary<'a> {
    order: &'a SpinOrder,
    tree_weight: Option<f64>,
}

pub fn order(a: OrderArgs, argv: Vec<String>) -> CliResult<()> {
    let manifest = ManifestBuilder::start("order", argv);
    let model = load_model(&a.model)?;
    let (order, forest) = compute_order(&model, a.mode, a.tie_break, a.common.seed);
    let mut art = Artifacts::new(&a.common.out_dir)?;
    art.json("order.json", &OrderFile::new(order.clone(), forest.as_ref()))?;
    let summary = OrderSummary { order: &order, tree_weight: forest.as_ref().map(SpanningForest::total_weight) };
    println!("{}", serde_json::to_string(&summary)?);
    manifest.finish(&mut art, &a, vec![a.common.seed])?;
    Ok(())
}

#[derive(Serialize)]
pub struct TrainSummary {
    pub n: usize,
    pub iterations: usize,
    pub final_iteration: Option<IterationRecord>,
    pub best_f: f64,
    pub evaluation: Evaluation,
    #[serde(rename = "exact_F")]
    pub exact_f: Option<f64>,
}

pub fn exact_if_small(model: &IsingModel) -> CliResult<Option<f64>> {
    if model.n() > EXACT_REPORT_LIMIT {
        return Ok(None);
    }
    Ok(Some(ising::exact_free_energy(model)?))
}

pub fn train(a: TrainArgs, argv: Vec<String>) -> CliResult<()> {
    let manifest = ManifestBuilder::start("train", argv);
    let model = load_model(&a.model)?;
    let seed = a.common.seed;
    let (order, forest) = match &a.order.order {
        Some(p) => {
            let f: OrderFile = serde_json::from_str(&std::fs::read_to_string(p)?)?;
            (f.order, None)
        }
        None => compute_order(&model, a.order.mode, a.order.tie_break, seed),
    };
    let cfg = train_config(&a.training, seed, TrainConfig::default().iterations);
    let eval_samples = a.eval_samples.unwrap_or(cfg.batch_size);
    let out = train_and_evaluate(&model, &order, architecture(&a.training), &cfg, eval_samples, Some("train"))?;

    let mut art = Artifacts::new(&a.common.out_dir)?;
    art.json("order.json", &OrderFile::new(order.clone(), forest.as_ref()))?;
    art.json(
        "checkpoint.json",
        &Checkpoint { network: out.net, order, config: cfg.clone(), iteration: cfg.iterations },
    )?;
    art.with_writer("history.csv", |w| out.report.write_history_csv(w))?;
    art.with_writer("mean_params.csv", |w| out.report.write_mean_params_csv(w))?;
    let summary = TrainSummary {
        n: model.n(),
        iterations: cfg.iterations,
        final_iteration: out.report.last().cloned(),
        best_f: out.report.best_f,
        evaluation: out.evaluation,
        exact_f: exact_if_small(&model)?,
    };
    art.json("train.json", &summary)?;
    println!(
        "F* = {} +- {:.2e}, <x> = {}",
        summary.evaluation.free_energy.mean, summary.evaluation.free_energy.stderr, summary.evaluation.magnetization.mean
    );
    manifest.finish(&mut art, &a, vec![seed])?;
    Ok(())
}

pub fn eval(a: EvalArgs, argv: Vec<String>) -> CliResult<()> {
    let manifest = ManifestBuilder::start("eval", argv);
    let model = load_model(&a.model)?;
    let ck = Checkpoint::load(&a.checkpoint)?;
    let seed = a.common.seed;
    let e = cormf::evaluate(&ck.network, &model, &ck.order, a.samples, seed)?;
    let mut art = Artifacts::new(&a.common.out_dir)?;
    art.json("eval.json", &e)?;
    if a.write_samples {
        let set = cormf::sample(&ck.network, &ck.order, a.samples, seed);
        art.with_writer("samples.csv", |w| set.write_csv(w))?;
    }
    println!("F* = {} +- {:.2e}, <x> = {}", e.free_energy.mean, e.free_energy.stderr, e.magnetization.mean);
    manifest.finish(&mut art, &a, vec![seed])?;
    Ok(())
}

#[derive(Serialize)]
struct ExactOut {
    #[serde(rename = "log_Z")]
    log_z: f64,
    #[serde(rename = "F")]
    f: f64,
    mean_energy: f64,
    magnetization: f64,
    per_spin: Vec<f64>,
}

pub fn exact(a: ExactArgs, argv: Vec<String>) -> CliResult<()> {
    let manifest = ManifestBuilder::start("exact", argv);
    let model = load_model(&a.model)?;
    let s = ising::exact_summary(&model)?;
    let out = ExactOut {
        log_z: s.log_z,
        f: s.free_energy,
        mean_energy: s.mean_energy,
        magnetization: s.magnetization,
        per_spin: s.per_spin,
    };
    let mut art = Artifacts::new(&a.out_dir)?;
    art.json("exact.json", &out)?;
    println!("{}", serde_json::json!({ "log_Z": out.log_z, "F": out.f }));
    manifest.finish(&mut art, &a, vec![])?;
    Ok(())
}

pub fn bound(a: BoundArgs, argv: Vec<String>) -> CliResult<()> {
    let manifest = ManifestBuilder::start("bound", argv);
    let model = load_model(&a.model)?;
    let r = bounds::bound_report(&model, a.cormf_f, a.nmf_f)?;
    let mut art = Artifacts::new(&a.out_dir)?;
    art.json("bound.json", &r)?;
    println!("{}", serde_json::to_string(&r)?);
    manifest.finish(&mut art, &a, vec![])?;
    Ok(())
}

pub fn gibbs(a: GibbsArgs, argv: Vec<String>) -> CliResult<()> {
    let manifest = ManifestBuilder::start("gibbs", argv);
    let model = load_model(&a.model)?;
    let cfg = GibbsConfig { n_samples: a.samples, burn_in: a.burn_in, thin: a.thin, seed: a.common.seed };
    let set = ising::gibbs_sample(&model, &cfg)?;
    let m = ising::magnetization(&set)?;
    let mut art = Artifacts::new(&a.common.out_dir)?;
    art.json("gibbs.json", &m)?;
    if a.write_samples {
        art.with_writer("samples.csv", |w| set.write_csv(w))?;
    }
    println!("<x> = {} +- {:.2e}", m.global, m.stderr);
    manifest.finish(&mut art, &a, vec![a.common.seed])?;
    Ok(())
}

pub fn nmf(a: NmfArgs, argv: Vec<String>) -> CliResult<()> {
    let manifest = ManifestBuilder::start("nmf", argv);
    let model = load_model(&a.model)?;
    let cfg = NmfConfig {
        learning_rate: a.lr,
        iterations: a.iterations,
        restarts: a.restarts,
        seed: a.common.seed,
        ..NmfConfig::default()
    };
    let sol = nmf::nmf_minimize(&model, &cfg)?;
    let mut art = Artifacts::new(&a.common.out_dir)?;
    art.json("nmf.json", &sol)?;
    let (mean, sd) = sol.restart_spread();
    println!("F* = {} (restarts: {mean} +- {sd}), <x> = {}", sol.f_star, sol.magnetization());
    manifest.finish(&mut art, &a, vec![a.common.seed])?;
    Ok(())
}
