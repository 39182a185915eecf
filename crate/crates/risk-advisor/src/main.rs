//! Command-line front end: generate data, train the black box and the risk
//! advisor, score points, evaluate, export decision grids, and run composite
//! experiments from a config file.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use risk_advisor::advisor::{self, RiskWeights};
use risk_advisor::bbox;
use risk_advisor::cli::{
    self, DatasetSpec, ExperimentConfig, GridKind, GridModels, MetricOptions, TrustOptions,
};
use risk_advisor::datagen::{self, GmmShiftConfig};
use risk_advisor::eval::{self, BboxSpec, RetrainOptions, RetrainStrategy};
use risk_advisor::sgbt::SgbtParams;
use risk_advisor::{Error, Result};

#[derive(Parser)]
#[command(name = "risk-advisor", version, about = "Failure-risk auditing for black-box classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic train/test pair as CSV files
    Generate(GenerateArgs),
    /// Train the black-box classifier being audited
    TrainBbox(TrainBboxArgs),
    /// Train the risk advisor on the black box's training errors
    TrainAdvisor(TrainAdvisorArgs),
    /// Score a dataset with a trained advisor (per-point report CSV)
    Score(ScoreArgs),
    /// Failure-prediction and abstention metrics for a scored test set
    Eval(EvalArgs),
    /// Out-of-distribution detection metrics (needs OOD flags in the data)
    OodEval(OodEvalArgs),
    /// Accuracy-rejection curve and prediction-rejection ratios
    AbstainEval(AbstainEvalArgs),
    /// Sample-and-retrain mitigation loop over a held-out pool
    SampleRetrain(SampleRetrainArgs),
    /// Evaluate a model quantity on a 2-D lattice (CSV, optional SVG)
    Grid(GridArgs),
    /// Run a full experiment described by a JSON config file
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorKind {
    Circles,
    Moons,
    GmmShift,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    dataset: GeneratorKind,
    /// Total points for circles/moons (split into train/test)
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 0.08)]
    noise_sd: f64,
    #[arg(long, default_value_t = 0.7)]
    train_fraction: f64,
    /// Training points for gmm-shift
    #[arg(long, default_value_t = 2000)]
    n_train: usize,
    /// Test points for gmm-shift
    #[arg(long, default_value_t = 1000)]
    n_test: usize,
    /// Cluster standard deviation for gmm-shift
    #[arg(long, default_value_t = 1.25)]
    sd: f64,
    /// Uninformative extra features for gmm-shift
    #[arg(long, default_value_t = 8)]
    noise_dims: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_train: PathBuf,
    #[arg(long)]
    out_test: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum BboxKind {
    Logistic,
    Mlp,
}

#[derive(Args)]
struct BboxFlags {
    #[arg(long, value_enum, default_value = "logistic")]
    model: BboxKind,
    /// L2 penalty (logistic)
    #[arg(long, default_value_t = 1e-4)]
    l2: f64,
    #[arg(long, default_value_t = 500)]
    epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    /// Hidden layer sizes for mlp, comma-separated (e.g. 32,16)
    #[arg(long, default_value = "32,16")]
    hidden: String,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
}

impl BboxFlags {
    fn to_spec(&self) -> Result<BboxSpec> {
        Ok(match self.model {
            BboxKind::Logistic => BboxSpec::Logistic {
                l2: self.l2,
                epochs: self.epochs,
                lr: self.lr,
            },
            BboxKind::Mlp => BboxSpec::Mlp {
                hidden: parse_usize_list(&self.hidden, "hidden")?,
                epochs: self.epochs,
                lr: self.lr,
                batch_size: self.batch_size,
            },
        })
    }
}

#[derive(Args)]
struct TrainBboxArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long, default_value = "is_ood")]
    ood_column: String,
    #[command(flatten)]
    bbox: BboxFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AdvisorFlags {
    #[arg(long, default_value_t = 300)]
    n_trees: usize,
    #[arg(long, default_value_t = 4)]
    max_depth: usize,
    #[arg(long, default_value_t = 0.1)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0.5)]
    sample_rate: f64,
    #[arg(long, default_value_t = 5)]
    min_samples_leaf: usize,
    #[arg(long, default_value_t = 10)]
    members: usize,
    #[arg(long, default_value_t = 1.0)]
    w_model: f64,
    #[arg(long, default_value_t = 1.0)]
    w_epistemic: f64,
    #[arg(long, default_value_t = 1.0)]
    w_aleatoric: f64,
}

impl AdvisorFlags {
    fn to_params(&self, seed: u64) -> SgbtParams {
        SgbtParams {
            n_trees: self.n_trees,
            max_depth: self.max_depth,
            learning_rate: self.learning_rate,
            sample_rate: self.sample_rate,
            min_samples_leaf: self.min_samples_leaf,
            seed,
        }
    }

    fn weights(&self) -> RiskWeights {
        RiskWeights {
            model: self.w_model,
            epistemic: self.w_epistemic,
            aleatoric: self.w_aleatoric,
        }
    }
}

#[derive(Args)]
struct TrainAdvisorArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long, default_value = "is_ood")]
    ood_column: String,
    /// Trained black-box model whose errors the advisor learns
    #[arg(long)]
    bbox: PathBuf,
    #[command(flatten)]
    advisor: AdvisorFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cross-validated grid search over max_depth and sample_rate
    #[arg(long)]
    grid: bool,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Optional CSV of grid-search cells (depth, rate, mean log-loss)
    #[arg(long)]
    grid_report: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    advisor: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long, default_value = "is_ood")]
    ood_column: String,
    /// Include per-member probabilities as extra columns
    #[arg(long)]
    include_members: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    bbox: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    /// OOD flag column, consulted when present in the data
    #[arg(long, default_value = "is_ood")]
    ood_column: String,
    /// Training data, enables the Trust Score baseline for OOD metrics
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0625)]
    trust_alpha: f64,
    #[arg(long, default_value_t = 10)]
    trust_k: usize,
    #[arg(long, default_value_t = 0.05)]
    rejection_step: f64,
    /// Metrics JSON path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OodEvalArgs {
    #[command(flatten)]
    eval: EvalArgs,
}

#[derive(Args)]
struct AbstainEvalArgs {
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    bbox: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long, default_value = "is_ood")]
    ood_column: String,
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    /// Accuracy-rejection curve CSV
    #[arg(long)]
    out_curve: PathBuf,
    /// PRR summary JSON; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyKind {
    EpistemicDesc,
    ConfidenceAsc,
    TrustAsc,
    Random,
}

impl From<StrategyKind> for RetrainStrategy {
    fn from(s: StrategyKind) -> Self {
        match s {
            StrategyKind::EpistemicDesc => RetrainStrategy::EpistemicDesc,
            StrategyKind::ConfidenceAsc => RetrainStrategy::ConfidenceAsc,
            StrategyKind::TrustAsc => RetrainStrategy::TrustAsc,
            StrategyKind::Random => RetrainStrategy::Random,
        }
    }
}

#[derive(Args)]
struct SampleRetrainArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    pool: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long, default_value = "is_ood")]
    ood_column: String,
    #[arg(long, value_enum)]
    strategy: StrategyKind,
    #[arg(long, default_value_t = 5.0)]
    k_percent: f64,
    #[arg(long, default_value_t = 8)]
    rounds: usize,
    /// Remove selected points from the pool instead of reusing them
    #[arg(long)]
    without_replacement: bool,
    #[arg(long, default_value_t = 0.0625)]
    trust_alpha: f64,
    #[arg(long, default_value_t = 10)]
    trust_k: usize,
    #[arg(long, default_value_t = 10)]
    ensemble_size: usize,
    #[command(flatten)]
    bbox: BboxFlags,
    #[command(flatten)]
    advisor: AdvisorFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Curve CSV: pool_percent, ood_accuracy
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridKindArg {
    BboxProba,
    ErrorProb,
    Aleatoric,
    Epistemic,
    Risk,
}

impl From<GridKindArg> for GridKind {
    fn from(k: GridKindArg) -> Self {
        match k {
            GridKindArg::BboxProba => GridKind::BboxProba,
            GridKindArg::ErrorProb => GridKind::ErrorProb,
            GridKindArg::Aleatoric => GridKind::Aleatoric,
            GridKindArg::Epistemic => GridKind::Epistemic,
            GridKindArg::Risk => GridKind::Risk,
        }
    }
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, value_enum)]
    kind: GridKindArg,
    #[arg(long)]
    advisor: Option<PathBuf>,
    #[arg(long)]
    bbox: Option<PathBuf>,
    /// 2-D dataset whose padded bounding box sets the lattice bounds
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long, default_value = "is_ood")]
    ood_column: String,
    /// Explicit bounds xmin,xmax,ymin,ymax (overrides --data)
    #[arg(long)]
    bounds: Option<String>,
    #[arg(long, default_value_t = 50)]
    resolution: usize,
    #[arg(long)]
    out: PathBuf,
    /// Optional SVG heatmap path
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config JSON
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn parse_usize_list(s: &str, flag: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidArgument(format!("--{flag}: cannot parse '{p}'")))
        })
        .collect()
}

fn parse_bounds(s: &str) -> Result<(f64, f64, f64, f64)> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("--bounds: cannot parse '{p}'")))
        })
        .collect::<Result<_>>()?;
    if parts.len() != 4 {
        return Err(Error::InvalidArgument(format!(
            "--bounds needs 4 comma-separated numbers, got {}",
            parts.len()
        )));
    }
    Ok((parts[0], parts[1], parts[2], parts[3]))
}

fn write_json(value: &serde_json::Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => cli::write_atomic(p, text.as_bytes()),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let spec = match a.dataset {
        GeneratorKind::Circles => DatasetSpec::Circles {
            n: a.n,
            noise_sd: a.noise_sd,
            train_fraction: a.train_fraction,
        },
        GeneratorKind::Moons => DatasetSpec::Moons {
            n: a.n,
            noise_sd: a.noise_sd,
            train_fraction: a.train_fraction,
        },
        GeneratorKind::GmmShift => DatasetSpec::GmmShift {
            n_train: a.n_train,
            n_test: a.n_test,
            config: GmmShiftConfig {
                sd: a.sd,
                noise_dims: a.noise_dims,
                ..GmmShiftConfig::default()
            },
        },
    };
    let (train, test) = spec.realize(a.seed)?;
    datagen::save_csv(&train, &a.out_train)?;
    datagen::save_csv(&test, &a.out_test)?;
    eprintln!(
        "wrote {} train rows to {} and {} test rows to {}",
        train.len(),
        a.out_train.display(),
        test.len(),
        a.out_test.display()
    );
    Ok(())
}

fn cmd_train_bbox(a: TrainBboxArgs) -> Result<()> {
    let train = load_data(&a.train, &a.label_column, &a.ood_column)?;
    let model = a.bbox.to_spec()?.train(&train, a.seed)?;
    bbox::save_model(&model, &a.out)?;
    let (pred, _) = bbox::predict(&model, &train)?;
    let z = bbox::error_indicator(&train.labels, &pred)?;
    eprintln!(
        "trained on {} rows, train accuracy {:.4}, model written to {}",
        train.len(),
        1.0 - z.positive_rate,
        a.out.display()
    );
    Ok(())
}

fn cmd_train_advisor(a: TrainAdvisorArgs) -> Result<()> {
    let train = load_data(&a.train, &a.label_column, &a.ood_column)?;
    let model = bbox::load_model(&a.bbox)?;
    let (pred, _) = bbox::predict(&model, &train)?;
    let z = bbox::error_indicator(&train.labels, &pred)?;

    let mut params = a.advisor.to_params(a.seed);
    if a.grid {
        let result = cli::grid_search_params(&train.features, &z.z, &params, a.folds)?;
        params = result.best;
        eprintln!(
            "grid search selected max_depth={} sample_rate={}",
            params.max_depth, params.sample_rate
        );
        if let Some(path) = &a.grid_report {
            let mut csv = String::from("max_depth,sample_rate,mean_val_log_loss\n");
            for c in &result.cells {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    c.max_depth, c.sample_rate, c.mean_val_log_loss
                ));
            }
            cli::write_atomic(path, csv.as_bytes())?;
        }
    }

    let advisor_model = advisor::fit_advisor(
        &train.features,
        &z.z,
        &params,
        a.advisor.members,
        a.advisor.weights(),
    )?;
    advisor::save_advisor(&advisor_model, &a.out)?;
    eprintln!(
        "trained {}-member advisor on {} rows ({} black-box errors), written to {}",
        a.advisor.members,
        train.len(),
        z.z.iter().filter(|&&e| e).count(),
        a.out.display()
    );
    Ok(())
}

fn cmd_score(a: ScoreArgs) -> Result<()> {
    let advisor_model = advisor::load_advisor(&a.advisor)?;
    let data = load_data(&a.data, &a.label_column, &a.ood_column)?;
    advisor::score_file(&advisor_model, &data, &a.out, a.include_members)?;
    eprintln!("scored {} rows into {}", data.len(), a.out.display());
    Ok(())
}

fn load_eval_inputs(
    a: &EvalArgs,
) -> Result<(
    datagen::Dataset,
    Option<datagen::Dataset>,
    bbox::BlackBoxModel,
    advisor::UncertaintyReport,
)> {
    let data = load_data(&a.data, &a.label_column, &a.ood_column)?;
    let train = a
        .train
        .as_ref()
        .map(|p| load_data(p, &a.label_column, &a.ood_column))
        .transpose()?;
    let model = bbox::load_model(&a.bbox)?;
    let report = advisor::read_report(&a.report)?;
    Ok((data, train, model, report))
}

fn csv_has_column(path: &Path, column: &str) -> Result<bool> {
    let mut reader = csv::Reader::from_path(path)?;
    Ok(reader.headers()?.iter().any(|h| h == column))
}

/// Loads a dataset CSV, treating `ood_column` as OOD flags when present and
/// as absent otherwise, so the same file works with or without the column.
fn load_data(path: &Path, label_column: &str, ood_column: &str) -> Result<datagen::Dataset> {
    let ood = csv_has_column(path, ood_column)?.then_some(ood_column);
    datagen::load_csv(path, label_column, ood)
}

fn cmd_eval(a: EvalArgs, ood_only: bool) -> Result<()> {
    let (data, train, model, report) = load_eval_inputs(&a)?;
    let opts = MetricOptions {
        confidence_baseline: true,
        trust: train.as_ref().map(|_| TrustOptions {
            alpha: a.trust_alpha,
            k: a.trust_k,
        }),
        rejection_step: a.rejection_step,
    };
    let mut metrics = cli::compute_metrics(train.as_ref(), &data, &model, &report, &opts)?;
    if ood_only {
        metrics.retain(|k, _| k.starts_with("ood_"));
        if metrics.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "no OOD metrics: column '{}' absent or single-valued in {}",
                a.ood_column,
                a.data.display()
            )));
        }
    }
    write_json(&serde_json::to_value(&metrics)?, a.out.as_deref())
}

fn cmd_abstain_eval(a: AbstainEvalArgs) -> Result<()> {
    let data = load_data(&a.data, &a.label_column, &a.ood_column)?;
    let model = bbox::load_model(&a.bbox)?;
    let report = advisor::read_report(&a.report)?;
    let (pred, probs) = bbox::predict(&model, &data)?;
    let errors = bbox::error_indicator(&data.labels, &pred)?;

    let ar = eval::accuracy_rejection_curve(&report.risk_score, &errors.z, a.step)?;
    let mut csv = String::from("rejection_fraction,accuracy\n");
    for (rho, acc) in ar.rejection_fractions.iter().zip(&ar.accuracies) {
        csv.push_str(&format!("{rho},{acc}\n"));
    }
    cli::write_atomic(&a.out_curve, csv.as_bytes())?;

    let mut summary = serde_json::json!({ "prr_risk_score": ar.prr });
    if let Some(p) = &probs {
        let conf = risk_advisor::baselines::mcp_confidence(p)?;
        let neg: Vec<f64> = conf.iter().map(|c| -c).collect();
        summary["prr_neg_confidence"] = serde_json::json!(eval::prr(&neg, &errors.z)?);
    }
    write_json(&summary, a.out.as_deref())
}

fn cmd_sample_retrain(a: SampleRetrainArgs) -> Result<()> {
    let train = load_data(&a.train, &a.label_column, &a.ood_column)?;
    let pool = load_data(&a.pool, &a.label_column, &a.ood_column)?;
    let test = load_data(&a.test, &a.label_column, &a.ood_column)?;

    let opts = RetrainOptions {
        k_percent: a.k_percent,
        rounds: a.rounds,
        seed: a.seed,
        with_replacement: !a.without_replacement,
        trust_alpha: a.trust_alpha,
        trust_k: a.trust_k,
        ensemble_size: a.ensemble_size,
    };
    let curve = eval::sample_retrain(
        &train,
        &pool,
        &test,
        a.strategy.into(),
        &opts,
        &a.bbox.to_spec()?,
        &a.advisor.to_params(a.seed),
    )?;
    let mut csv = String::from("pool_percent,ood_accuracy\n");
    for p in &curve {
        csv.push_str(&format!("{},{}\n", p.pool_percent, p.ood_accuracy));
    }
    cli::write_atomic(&a.out, csv.as_bytes())?;
    eprintln!("wrote {} curve points to {}", curve.len(), a.out.display());
    Ok(())
}

fn cmd_grid(a: GridArgs) -> Result<()> {
    let advisor_model = a.advisor.as_ref().map(advisor::load_advisor).transpose()?;
    let bbox_model = a.bbox.as_ref().map(bbox::load_model).transpose()?;
    let bounds = match (&a.bounds, &a.data) {
        (Some(s), _) => parse_bounds(s)?,
        (None, Some(path)) => {
            let d = load_data(path, &a.label_column, &a.ood_column)?;
            cli::data_bounds_padded(&d)?
        }
        (None, None) => {
            return Err(Error::InvalidArgument(
                "grid needs --bounds or --data to set lattice bounds".into(),
            ))
        }
    };
    let models = GridModels {
        advisor: advisor_model.as_ref(),
        bbox: bbox_model.as_ref(),
    };
    let rows = cli::emit_grid(a.kind.into(), &models, bounds, a.resolution)?;
    cli::write_grid_csv(&rows, &a.out)?;
    if let Some(svg) = &a.svg {
        cli::write_grid_svg(&rows, a.resolution, svg)?;
    }
    eprintln!("wrote {} lattice values to {}", rows.len(), a.out.display());
    Ok(())
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.config).map_err(|e| {
        Error::InvalidArgument(format!("config {}: {e}", a.config.display()))
    })?;
    let mut config: ExperimentConfig = serde_json::from_str(&text).map_err(|e| {
        Error::InvalidArgument(format!("config {}: {e}", a.config.display()))
    })?;
    if let Some(r) = a.repeats {
        config.repeats = r;
    }
    if let Some(dir) = &a.output_dir {
        config.output_dir = dir.display().to_string();
    }
    let manifest = cli::run_scenario(&config)?;
    eprintln!(
        "experiment complete: {} artifacts under {}",
        manifest.artifact_paths.len(),
        config.output_dir
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::TrainBbox(a) => cmd_train_bbox(a),
        Command::TrainAdvisor(a) => cmd_train_advisor(a),
        Command::Score(a) => cmd_score(a),
        Command::Eval(a) => cmd_eval(a, false),
        Command::OodEval(a) => cmd_eval(a.eval, true),
        Command::AbstainEval(a) => cmd_abstain_eval(a),
        Command::SampleRetrain(a) => cmd_sample_retrain(a),
        Command::Grid(a) => cmd_grid(a),
        Command::Run(a) => cmd_run(a),
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidArgument(_) => "invalid_argument",
        Error::DimensionMismatch(_) => "dimension_mismatch",
        Error::Csv { .. } => "csv",
        Error::MissingColumn { .. } => "missing_column",
        Error::EmptyDataset(_) => "empty_dataset",
        Error::Numeric(_) => "numeric",
        Error::Io(_) => "io",
        Error::Serde(_) => "serde",
    }
}

/// 0 success, 2 config error, 3 data error, 4 numeric failure.
fn exit_status(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => 2,
        Error::Numeric(_) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_status(&e);
            let payload = serde_json::json!({
                "error": {
                    "kind": error_kind(&e),
                    "message": e.to_string(),
                    "exit_code": code,
                }
            });
            eprintln!("{payload}");
            ExitCode::from(code)
        }
    }
}
