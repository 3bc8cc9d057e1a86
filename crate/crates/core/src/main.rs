use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use qbandit::bandit::BanditParams;
use qbandit::experiment::{
    cmd_baseline, cmd_qpe, cmd_reproduce, cmd_train, BaselineRequest, EnvSource, ExperimentConfig, Figure, QpePlan,
    ReportBundle,
};
use qbandit::BackendKind;

/// Quantum two-armed bandit: training, phase-estimation evaluation and classical baselines.
///
/// Flags override the config file, which overrides built-in defaults.
#[derive(Parser)]
#[command(name = "qbandit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the environment angles to a JSONL dataset of pulls.
    Train(TrainArgs),
    /// Estimate policy values by phase estimation.
    Qpe(QpeArgs),
    /// Tabulate phase-estimation versus Monte Carlo sample counts.
    Baseline(BaselineArgs),
    /// Regenerate one figure's data and plots from pinned synthetic inputs.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; falls back to the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> anyhow::Result<ExperimentConfig> {
        match &self.config {
            Some(path) => Ok(ExperimentConfig::load(path)?),
            None => Ok(ExperimentConfig::default()),
        }
    }

    fn out(&self, config: &ExperimentConfig) -> anyhow::Result<PathBuf> {
        self.out
            .clone()
            .or_else(|| config.output_dir.clone())
            .context("no output directory: pass --out or set output_dir in the config")
    }
}

#[derive(Args)]
struct TrainArgs {
    /// JSONL file of pull records.
    #[arg(long)]
    data: PathBuf,
    /// Shots per arm per loss evaluation.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    backend: Option<BackendKind>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct QpeArgs {
    /// Evaluation-register width; repeat for several.
    #[arg(long = "n")]
    n: Vec<usize>,
    #[arg(long)]
    shots: Option<u64>,
    /// Probability of choosing the left arm; repeat for several policies.
    #[arg(long = "policy-left")]
    policy_left: Vec<f64>,
    #[arg(long, requires = "theta_right", conflicts_with = "from")]
    theta_left: Option<f64>,
    #[arg(long, requires = "theta_left", conflicts_with = "from")]
    theta_right: Option<f64>,
    /// Training output directory (or its train_result.json) to take the angles from.
    #[arg(long)]
    from: Option<PathBuf>,
    /// Repeat to run several backends.
    #[arg(long)]
    backend: Vec<BackendKind>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BaselineArgs {
    /// Policy value at which the error bound is evaluated.
    #[arg(long)]
    v: f64,
    /// Inclusive range of register widths, `a..b` or `a..=b`.
    #[arg(long = "n-range", value_parser = parse_range)]
    n_range: NRange,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ReproduceArgs {
    /// One of training-curves, qpe-histograms, scaling.
    #[arg(long)]
    figure: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
struct NRange(Vec<usize>);

fn parse_range(s: &str) -> Result<NRange, String> {
    let (a, b) = s
        .split_once("..=")
        .or_else(|| s.split_once(".."))
        .ok_or_else(|| format!("expected a..b, got `{s}`"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    Ok(NRange((parse(a)?..=parse(b)?).collect()))
}

fn train(args: TrainArgs) -> anyhow::Result<ReportBundle> {
    let mut config = args.common.load()?;
    if let Some(shots) = args.shots {
        config.train.shots = shots;
    }
    if let Some(seed) = args.common.seed {
        config.train.seed = seed;
    }
    if let Some(backend) = args.backend {
        config.backend = backend;
    }
    let out = args.common.out(&config)?;
    if !args.data.is_file() {
        bail!("data file {} does not exist", args.data.display());
    }
    Ok(cmd_train(&config, &args.data, &out)?)
}

fn qpe(args: QpeArgs) -> anyhow::Result<ReportBundle> {
    let mut config = args.common.load()?;
    match (args.theta_left, args.theta_right, &args.from) {
        (Some(l), Some(r), _) => config.env = Some(EnvSource::Params(BanditParams::new(l, r)?)),
        (_, _, Some(path)) => config.env = Some(EnvSource::FromTraining(path.clone())),
        _ => {}
    }
    if let Some(shots) = args.shots {
        config.qpe.shots = shots;
    }
    if let Some(seed) = args.common.seed {
        config.qpe.seed = seed;
    }
    if let [backend] = args.backend[..] {
        config.backend = backend;
    }
    let mut plan = QpePlan::from_config(&config);
    if !args.n.is_empty() {
        plan.n = args.n;
    }
    if !args.policy_left.is_empty() {
        plan.p_left = args.policy_left;
    }
    if !args.backend.is_empty() {
        plan.backends = args.backend;
    }
    let out = args.common.out(&config)?;
    Ok(cmd_qpe(&config, &plan, &out)?)
}

fn run(cli: Cli) -> anyhow::Result<ReportBundle> {
    match cli.command {
        Command::Train(args) => train(args),
        Command::Qpe(args) => qpe(args),
        Command::Baseline(args) => {
            let req = BaselineRequest::symmetric(args.v, args.n_range.0, args.seed)?;
            Ok(cmd_baseline(&req, &args.out)?)
        }
        Command::Reproduce(args) => {
            let figure: Figure = args.figure.parse()?;
            Ok(cmd_reproduce(figure, &args.out, args.seed)?)
        }
    }
}

fn relative<'a>(path: &'a Path, root: &Path) -> &'a Path {
    path.strip_prefix(root).unwrap_or(path)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(bundle) => {
            for file in bundle.files() {
                println!("{}", relative(&file, &bundle.dir).display());
            }
            println!("wrote {} files to {}", bundle.manifest.files.len() + 1, bundle.dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
