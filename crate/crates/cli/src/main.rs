mod commands;
mod manifest;
mod output;
mod table1;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use output::{CliError, CliResult};

/// Experiments with the criticality-ordered recurrent mean field.
///
/// Every flag can also be set through an environment variable named
/// `CORMF_<FLAG>` (for example `CORMF_SEED`, `CORMF_OUT_DIR`).
#[derive(Parser, Debug)]
#[command(name = "cormf", version, args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a catalog dataset as a model file.
    Gen(GenArgs),
    /// Compute a spin order (criticality, random or identity).
    Order(OrderArgs),
    /// Train the recurrent mean field on a model.
    Train(TrainArgs),
    /// Estimate free energy and magnetisation of a checkpoint.
    Eval(EvalArgs),
    /// Exact log-partition function and free energy by enumeration.
    Exact(ExactArgs),
    /// Naive and main free-energy gap bounds.
    Bound(BoundArgs),
    /// Gibbs-sampling reference magnetisation.
    Gibbs(GibbsArgs),
    /// Naive mean-field minimisation.
    Nmf(NmfArgs),
    /// Run all methods on catalog datasets and tabulate them.
    Table1(Table1Args),
    /// Re-run a command from its manifest.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct Common {
    /// Directory for all outputs; relative output names resolve against it.
    #[arg(long, env = "CORMF_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, env = "CORMF_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct GenArgs {
    /// Dataset id (see --list).
    #[arg(long, env = "CORMF_NAME", required_unless_present = "list")]
    pub name: Option<String>,
    /// Output model file.
    #[arg(long, env = "CORMF_OUT", default_value = "model.json")]
    pub out: PathBuf,
    /// Instance seed; defaults to the dataset's catalog seed.
    #[arg(long, env = "CORMF_SEED")]
    pub seed: Option<u64>,
    #[arg(long, env = "CORMF_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// Print the catalog and exit.
    #[arg(long)]
    pub list: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderMode {
    Criticality,
    Random,
    Identity,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TieBreakArg {
    Index,
    Seeded,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnealArg {
    /// Linear ramp, the default schedule.
    On,
    Off,
    /// Equal iterations per decade of temperature.
    Geometric,
}

#[derive(Args, Debug, Serialize)]
pub struct OrderSelection {
    /// Order file to use instead of computing one.
    #[arg(long, env = "CORMF_ORDER")]
    pub order: Option<PathBuf>,
    #[arg(long, env = "CORMF_MODE", value_enum, default_value_t = OrderMode::Criticality)]
    pub mode: OrderMode,
    #[arg(long, env = "CORMF_TIE_BREAK", value_enum, default_value_t = TieBreakArg::Index)]
    pub tie_break: TieBreakArg,
}

#[derive(Args, Debug, Serialize)]
pub struct OrderArgs {
    #[arg(long, env = "CORMF_MODEL")]
    pub model: PathBuf,
    #[arg(long, env = "CORMF_MODE", value_enum, default_value_t = OrderMode::Criticality)]
    pub mode: OrderMode,
    #[arg(long, env = "CORMF_TIE_BREAK", value_enum, default_value_t = TieBreakArg::Index)]
    pub tie_break: TieBreakArg,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize, Clone)]
pub struct TrainingFlags {
    #[arg(long, env = "CORMF_ITERATIONS")]
    pub iterations: Option<usize>,
    #[arg(long, env = "CORMF_BATCH", default_value_t = 1000)]
    pub batch: usize,
    #[arg(long, env = "CORMF_LR", default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, env = "CORMF_ANNEAL", value_enum, default_value_t = AnnealArg::On)]
    pub anneal: AnnealArg,
    /// Starting fraction of the target beta (default 0.1).
    #[arg(long, env = "CORMF_ANNEAL_START")]
    pub anneal_start: Option<f64>,
    /// Iterations until the target beta is reached (default a tenth of the run).
    #[arg(long, env = "CORMF_ANNEAL_RAMP")]
    pub anneal_ramp: Option<usize>,
    #[arg(long, env = "CORMF_HIDDEN", default_value_t = 50)]
    pub hidden: usize,
    #[arg(long, env = "CORMF_LAYERS", default_value_t = 2)]
    pub layers: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    #[arg(long, env = "CORMF_MODEL")]
    pub model: PathBuf,
    #[command(flatten)]
    pub order: OrderSelection,
    #[command(flatten)]
    pub training: TrainingFlags,
    /// Samples for the closing evaluation; defaults to the batch size.
    #[arg(long, env = "CORMF_EVAL_SAMPLES")]
    pub eval_samples: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    #[arg(long, env = "CORMF_CHECKPOINT")]
    pub checkpoint: PathBuf,
    #[arg(long, env = "CORMF_MODEL")]
    pub model: PathBuf,
    #[arg(long, env = "CORMF_SAMPLES", default_value_t = 10_000)]
    pub samples: usize,
    /// Also write the drawn configurations as CSV.
    #[arg(long)]
    pub write_samples: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct ExactArgs {
    #[arg(long, env = "CORMF_MODEL")]
    pub model: PathBuf,
    #[arg(long, env = "CORMF_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct BoundArgs {
    #[arg(long, env = "CORMF_MODEL")]
    pub model: PathBuf,
    /// Variational free energy reached by the recurrent mean field.
    #[arg(long, allow_hyphen_values = true)]
    pub cormf_f: Option<f64>,
    /// Naive mean-field optimum.
    #[arg(long, allow_hyphen_values = true)]
    pub nmf_f: Option<f64>,
    #[arg(long, env = "CORMF_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct GibbsArgs {
    #[arg(long, env = "CORMF_MODEL")]
    pub model: PathBuf,
    #[arg(long, env = "CORMF_SAMPLES", default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, env = "CORMF_BURN_IN", default_value_t = 1000)]
    pub burn_in: usize,
    #[arg(long, env = "CORMF_THIN", default_value_t = 1)]
    pub thin: usize,
    #[arg(long)]
    pub write_samples: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct NmfArgs {
    #[arg(long, env = "CORMF_MODEL")]
    pub model: PathBuf,
    #[arg(long, env = "CORMF_RESTARTS", default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, env = "CORMF_ITERATIONS", default_value_t = 10_000)]
    pub iterations: usize,
    #[arg(long, env = "CORMF_LR", default_value_t = 1e-3)]
    pub lr: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct Table1Args {
    /// Comma-separated dataset ids.
    #[arg(long, env = "CORMF_DATASETS", value_delimiter = ',', default_value = "n10-beta1")]
    pub datasets: Vec<String>,
    /// Training repeats per order.
    #[arg(long, env = "CORMF_REPEATS", default_value_t = 5)]
    pub repeats: usize,
    /// Naive mean-field restarts.
    #[arg(long, env = "CORMF_NMF_REPEATS", default_value_t = 10)]
    pub nmf_repeats: usize,
    #[arg(long, env = "CORMF_GIBBS_SAMPLES", default_value_t = 100_000)]
    pub gibbs_samples: usize,
    /// Skip the random- and identity-order rows.
    #[arg(long)]
    pub skip_ablation: bool,
    #[command(flatten)]
    pub training: TrainingFlags,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write into this directory instead of the recorded one.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn dispatch(cli: Cli, argv: Vec<String>) -> CliResult<()> {
    match cli.command {
        Command::Gen(a) => commands::gen(a, argv),
        Command::Order(a) => commands::order(a, argv),
        Command::Train(a) => commands::train(a, argv),
        Command::Eval(a) => commands::eval(a, argv),
        Command::Exact(a) => commands::exact(a, argv),
        Command::Bound(a) => commands::bound(a, argv),
        Command::Gibbs(a) => commands::gibbs(a, argv),
        Command::Nmf(a) => commands::nmf(a, argv),
        Command::Table1(a) => table1::run(a, argv),
        Command::Replay(a) => replay(a),
    }
}

/// Restore the recorded environment and directory, then run the recorded
/// arguments again.
fn replay(a: ReplayArgs) -> CliResult<()> {
    let m = manifest::RunManifest::load(&a.manifest)?;
    let out_dir = match a.out_dir {
        Some(d) => Some(std::path::absolute(d)?),
        None => None,
    };
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with(manifest::ENV_PREFIX)) {
        std::env::remove_var(k);
    }
    for (k, v) in &m.env {
        std::env::set_var(k, v);
    }
    std::env::set_current_dir(&m.cwd)?;
    let mut argv = m.argv.clone();
    if let Some(d) = out_dir {
        argv.push("--out-dir".into());
        argv.push(d.display().to_string());
    }
    let cli = Cli::try_parse_from(std::iter::once("cormf".to_string()).chain(argv.iter().cloned()))
        .map_err(|e| CliError::Usage(first_line(&e.to_string())))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(CliError::Usage("a manifest cannot replay another replay".into()));
    }
    dispatch(cli, argv)
}

fn first_line(s: &str) -> String {
    s.lines().next().unwrap_or("").trim_start_matches("error: ").to_string()
}

fn main() {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            let err = CliError::Usage(first_line(&e.to_string()));
            eprintln!("{}", err.line());
            std::process::exit(err.exit_code());
        }
    };
    if let Err(e) = dispatch(cli, argv) {
        eprintln!("{}", e.line());
        std::process::exit(e.exit_code());
    }
}
