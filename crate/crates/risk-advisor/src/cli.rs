//! Experiment orchestration shared by the command-line binary: resolved
//! experiment configurations, the composite scenario runner, advisor
//! hyper-parameter grid search, and decision-surface grid export.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::advisor::{self, AdvisorModel, RiskWeights};
use crate::baselines;
use crate::bbox::{self, BlackBoxModel};
use crate::datagen::{self, Dataset, GmmShiftConfig, SplitSpec};
use crate::eval::{self, BboxSpec, Orientation, RankedScores};
use crate::sgbt::{self, SgbtParams};
use crate::{Error, Result};

/// How an experiment obtains its train/test pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    Circles {
        n: usize,
        noise_sd: f64,
        train_fraction: f64,
    },
    Moons {
        n: usize,
        noise_sd: f64,
        train_fraction: f64,
    },
    GmmShift {
        n_train: usize,
        n_test: usize,
        #[serde(default)]
        config: GmmShiftConfig,
    },
    Csv {
        train_path: String,
        test_path: String,
        label_column: String,
        #[serde(default)]
        ood_column: Option<String>,
    },
}

impl DatasetSpec {
    /// Produces the train/test pair for one repeat seed.
    pub fn realize(&self, seed: u64) -> Result<(Dataset, Dataset)> {
        match self {
            DatasetSpec::Circles {
                n,
                noise_sd,
                train_fraction,
            } => {
                let d = datagen::gen_circles(*n, *noise_sd, seed)?;
                datagen::stratified_split(
                    &d,
                    &SplitSpec {
                        train_fraction: *train_fraction,
                        stratified: true,
                        seed,
                    },
                )
            }
            DatasetSpec::Moons {
                n,
                noise_sd,
                train_fraction,
            } => {
                let d = datagen::gen_moons(*n, *noise_sd, seed)?;
                datagen::stratified_split(
                    &d,
                    &SplitSpec {
                        train_fraction: *train_fraction,
                        stratified: true,
                        seed,
                    },
                )
            }
            DatasetSpec::GmmShift {
                n_train,
                n_test,
                config,
            } => datagen::gen_gmm_shift(*n_train, *n_test, seed, config),
            DatasetSpec::Csv {
                train_path,
                test_path,
                label_column,
                ood_column,
            } => {
                let train = datagen::load_csv(train_path, label_column, ood_column.as_deref())?;
                let test = datagen::load_csv(test_path, label_column, ood_column.as_deref())?;
                Ok((train, test))
            }
        }
    }
}

fn default_members() -> usize {
    10
}
fn default_true() -> bool {
    true
}
fn default_trust_alpha() -> f64 {
    0.0625
}
fn default_trust_k() -> usize {
    10
}
fn default_rejection_step() -> f64 {
    0.05
}
fn default_repeats() -> usize {
    1
}

/// Fully-resolved experiment description; serializing it captures every
/// default so a persisted config re-runs to identical outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub bbox: BboxSpec,
    #[serde(default)]
    pub advisor: SgbtParams,
    #[serde(default = "default_members")]
    pub members: usize,
    #[serde(default)]
    pub weights: RiskWeights,
    #[serde(default = "default_true")]
    pub confidence_baseline: bool,
    #[serde(default = "default_true")]
    pub trust_baseline: bool,
    #[serde(default = "default_trust_alpha")]
    pub trust_alpha: f64,
    #[serde(default = "default_trust_k")]
    pub trust_k: usize,
    #[serde(default = "default_rejection_step")]
    pub rejection_step: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    pub output_dir: String,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.members == 0 {
            return Err(Error::InvalidArgument("members must be >= 1".into()));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidArgument("repeats must be >= 1".into()));
        }
        if !(self.rejection_step > 0.0 && self.rejection_step <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "rejection_step must be in (0,1], got {}",
                self.rejection_step
            )));
        }
        if !(0.0..1.0).contains(&self.trust_alpha) {
            return Err(Error::InvalidArgument(format!(
                "trust_alpha must be in [0,1), got {}",
                self.trust_alpha
            )));
        }
        if self.trust_k == 0 {
            return Err(Error::InvalidArgument("trust_k must be >= 1".into()));
        }
        self.advisor.validate()?;
        Ok(())
    }
}

/// Run manifest written next to every experiment bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub seed_list: Vec<u64>,
    pub artifact_paths: Vec<String>,
    pub tool_version: String,
}

/// Writes `content` atomically: to a sibling temp file, then renamed over the
/// final path.
pub fn write_atomic(path: &Path, content: &[u8]) -> Result<()> {
    let tmp = path.with_extension(match path.extension() {
        Some(e) => format!("{}.tmp", e.to_string_lossy()),
        None => "tmp".to_string(),
    });
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(content)?;
        f.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn ranked(scores: &[f64], positives: &[bool], orientation: Orientation) -> Result<RankedScores> {
    RankedScores::new(scores.to_vec(), positives.to_vec(), orientation)
}

/// Named scalar metrics keyed for stable JSON output.
pub type Metrics = BTreeMap<String, f64>;

/// Trust Score baseline settings for [`compute_metrics`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustOptions {
    pub alpha: f64,
    pub k: usize,
}

/// Which baselines and curves [`compute_metrics`] should include.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricOptions {
    pub confidence_baseline: bool,
    /// Trust baseline for OOD metrics; needs training data, so it only runs
    /// when both this and `train` are provided.
    pub trust: Option<TrustOptions>,
    pub rejection_step: f64,
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions {
            confidence_baseline: true,
            trust: None,
            rejection_step: default_rejection_step(),
        }
    }
}

/// Failure-prediction, abstention and (when OOD flags are present) OOD
/// metrics for one scored test set.
pub fn compute_metrics(
    train: Option<&Dataset>,
    test: &Dataset,
    model: &BlackBoxModel,
    report: &advisor::UncertaintyReport,
    opts: &MetricOptions,
) -> Result<Metrics> {
    let mut m = Metrics::new();
    let (pred, probs) = bbox::predict(model, test)?;
    let errors = bbox::error_indicator(&test.labels, &pred)?;
    m.insert("test_accuracy".into(), 1.0 - errors.positive_rate);

    m.insert(
        "auroc_error_prob".into(),
        eval::auroc(&ranked(&report.error_prob, &errors.z, Orientation::HigherIsPositive)?)?,
    );
    m.insert(
        "auroc_risk_score".into(),
        eval::auroc(&ranked(&report.risk_score, &errors.z, Orientation::HigherIsPositive)?)?,
    );
    m.insert(
        "ap_risk_score".into(),
        eval::average_precision(&ranked(
            &report.risk_score,
            &errors.z,
            Orientation::HigherIsPositive,
        )?)?,
    );
    m.insert("prr_risk_score".into(), eval::prr(&report.risk_score, &errors.z)?);

    let confidence = match (&probs, opts.confidence_baseline) {
        (Some(p), true) => Some(baselines::mcp_confidence(p)?),
        _ => None,
    };
    if let Some(conf) = &confidence {
        m.insert(
            "auroc_confidence".into(),
            eval::auroc(&ranked(conf, &errors.z, Orientation::LowerIsPositive)?)?,
        );
        let neg: Vec<f64> = conf.iter().map(|c| -c).collect();
        m.insert("prr_neg_confidence".into(), eval::prr(&neg, &errors.z)?);
    }

    if let Some(flags) = &test.is_ood {
        if flags.iter().any(|&f| f) && flags.iter().any(|&f| !f) {
            m.insert(
                "ood_auroc_epistemic".into(),
                eval::ood_auroc(&report.epistemic, flags, Orientation::HigherIsPositive)?,
            );
            if let Some(conf) = &confidence {
                m.insert(
                    "ood_auroc_confidence".into(),
                    eval::ood_auroc(conf, flags, Orientation::LowerIsPositive)?,
                );
            }
            if let (Some(trust), Some(train)) = (opts.trust, train) {
                let (std_train, mut rest) = datagen::standardize(train, &[test])?;
                let std_test = rest.pop().expect("one standardized dataset");
                let tm = baselines::fit_trust(&std_train, trust.alpha, trust.k)?;
                let ts = baselines::trust_scores(&tm, &std_test, &pred)?;
                m.insert(
                    "ood_auroc_trust".into(),
                    eval::ood_auroc(&ts, flags, Orientation::LowerIsPositive)?,
                );
            }
        }
    }

    let ar = eval::accuracy_rejection_curve(&report.risk_score, &errors.z, opts.rejection_step)?;
    m.insert("ar_prr_risk_score".into(), ar.prr);
    m.insert(
        "ar_accuracy_at_zero_rejection".into(),
        *ar.accuracies.first().expect("non-empty curve"),
    );
    Ok(m)
}

fn mean_sd(per_repeat: &[Metrics]) -> (Metrics, Metrics) {
    let mut mean = Metrics::new();
    let mut sd = Metrics::new();
    if per_repeat.is_empty() {
        return (mean, sd);
    }
    for key in per_repeat[0].keys() {
        let values: Vec<f64> = per_repeat.iter().filter_map(|m| m.get(key).copied()).collect();
        let n = values.len() as f64;
        let mu = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        mean.insert(key.clone(), mu);
        sd.insert(key.clone(), var.sqrt());
    }
    (mean, sd)
}

/// Runs the full pipeline described by `config`: datasets, black box, advisor,
/// per-point report, metrics with mean/sd over repeats, and a manifest.
/// Partially-written outputs are removed when any step fails.
pub fn run_scenario(config: &ExperimentConfig) -> Result<Manifest> {
    config.validate()?;
    let out_dir = PathBuf::from(&config.output_dir);
    std::fs::create_dir_all(&out_dir)?;

    let mut written: Vec<PathBuf> = Vec::new();
    let result = run_scenario_inner(config, &out_dir, &mut written);
    if result.is_err() {
        for p in &written {
            let _ = std::fs::remove_file(p);
        }
    }
    result
}

fn run_scenario_inner(
    config: &ExperimentConfig,
    out_dir: &Path,
    written: &mut Vec<PathBuf>,
) -> Result<Manifest> {
    let mut seed_list = Vec::with_capacity(config.repeats);
    let mut artifact_paths: Vec<String> = Vec::new();
    let mut per_repeat: Vec<Metrics> = Vec::new();

    let track = |written: &mut Vec<PathBuf>, artifacts: &mut Vec<String>, p: PathBuf| {
        artifacts.push(p.display().to_string());
        written.push(p);
    };

    for r in 0..config.repeats {
        let seed = config.seed.wrapping_add(r as u64);
        seed_list.push(seed);
        let dir = if config.repeats == 1 {
            out_dir.to_path_buf()
        } else {
            let d = out_dir.join(format!("repeat_{r}"));
            std::fs::create_dir_all(&d)?;
            d
        };

        let (train, test) = config.dataset.realize(seed)?;
        let train_path = dir.join("train.csv");
        let test_path = dir.join("test.csv");
        datagen::save_csv(&train, &train_path)?;
        track(written, &mut artifact_paths, train_path);
        datagen::save_csv(&test, &test_path)?;
        track(written, &mut artifact_paths, test_path);

        let model = config.bbox.train(&train, seed)?;
        let bbox_path = dir.join("bbox.json");
        bbox::save_model(&model, &bbox_path)?;
        track(written, &mut artifact_paths, bbox_path);

        let (pred_train, _) = bbox::predict(&model, &train)?;
        let z = bbox::error_indicator(&train.labels, &pred_train)?;
        let params = SgbtParams {
            seed,
            ..config.advisor
        };
        let advisor_model = advisor::fit_advisor(
            &train.features,
            &z.z,
            &params,
            config.members,
            config.weights,
        )?;
        let advisor_path = dir.join("advisor.json");
        advisor::save_advisor(&advisor_model, &advisor_path)?;
        track(written, &mut artifact_paths, advisor_path);

        let report_path = dir.join("report.csv");
        let report = advisor::score_file(&advisor_model, &test, &report_path, false)?;
        track(written, &mut artifact_paths, report_path);

        let opts = MetricOptions {
            confidence_baseline: config.confidence_baseline,
            trust: config.trust_baseline.then_some(TrustOptions {
                alpha: config.trust_alpha,
                k: config.trust_k,
            }),
            rejection_step: config.rejection_step,
        };
        per_repeat.push(compute_metrics(Some(&train), &test, &model, &report, &opts)?);
    }

    let (mean, sd) = mean_sd(&per_repeat);
    let metrics = serde_json::json!({
        "repeats": per_repeat
            .iter()
            .zip(&seed_list)
            .map(|(m, &s)| serde_json::json!({ "seed": s, "metrics": m }))
            .collect::<Vec<_>>(),
        "mean": mean,
        "sd": sd,
    });
    let metrics_path = out_dir.join("metrics.json");
    write_atomic(&metrics_path, serde_json::to_string_pretty(&metrics)?.as_bytes())?;
    artifact_paths.push(metrics_path.display().to_string());
    written.push(metrics_path);

    let manifest = Manifest {
        config: config.clone(),
        seed_list,
        artifact_paths: {
            let mut a = artifact_paths.clone();
            a.push(out_dir.join("manifest.json").display().to_string());
            a
        },
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let manifest_path = out_dir.join("manifest.json");
    write_atomic(
        &manifest_path,
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;
    written.push(manifest_path);
    Ok(manifest)
}

/// Depths explored by advisor grid search.
pub const GRID_DEPTHS: [usize; 4] = [3, 4, 5, 6];
/// Sample rates explored by advisor grid search.
pub const GRID_RATES: [f64; 3] = [0.25, 0.5, 0.75];

/// One cross-validation cell of the advisor grid search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub max_depth: usize,
    pub sample_rate: f64,
    pub mean_val_log_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: SgbtParams,
    pub cells: Vec<GridCell>,
}

/// K-fold grid search over max_depth x sample_rate for the error predictor;
/// selection metric is mean validation log-loss, ties broken toward the
/// smaller depth, then the smaller sample rate.
pub fn grid_search_params(
    features: &[Vec<f64>],
    targets: &[bool],
    base: &SgbtParams,
    folds: usize,
) -> Result<GridSearchResult> {
    if folds < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid search needs >= 2 folds, got {folds}"
        )));
    }
    let n = features.len();
    if n < folds {
        return Err(Error::InvalidArgument(format!(
            "grid search needs >= {folds} rows, got {n}"
        )));
    }
    // deterministic fold assignment from a seeded shuffle
    let mut order: Vec<usize> = (0..n).collect();
    use rand::seq::SliceRandom;
    let mut rng = datagen::seeded_rng(base.seed, 7);
    order.shuffle(&mut rng);
    let fold_of: Vec<usize> = {
        let mut f = vec![0usize; n];
        for (pos, &i) in order.iter().enumerate() {
            f[i] = pos % folds;
        }
        f
    };

    let mut cells = Vec::new();
    let mut best: Option<GridCell> = None;
    for &depth in &GRID_DEPTHS {
        for &rate in &GRID_RATES {
            let params = SgbtParams {
                max_depth: depth,
                sample_rate: rate,
                ..*base
            };
            let mut losses = Vec::with_capacity(folds);
            for fold in 0..folds {
                let (mut tr_x, mut tr_z, mut va_x, mut va_z) =
                    (Vec::new(), Vec::new(), Vec::new(), Vec::new());
                for i in 0..n {
                    if fold_of[i] == fold {
                        va_x.push(features[i].clone());
                        va_z.push(targets[i]);
                    } else {
                        tr_x.push(features[i].clone());
                        tr_z.push(targets[i]);
                    }
                }
                let model = sgbt::fit_sgbt(&tr_x, &tr_z, &params)?;
                let probs = sgbt::predict_proba(&model, &va_x)?;
                losses.push(sgbt::log_loss(&probs, &va_z));
            }
            let mean = losses.iter().sum::<f64>() / losses.len() as f64;
            let cell = GridCell {
                max_depth: depth,
                sample_rate: rate,
                mean_val_log_loss: mean,
            };
            cells.push(cell);
            if best.map_or(true, |b| mean < b.mean_val_log_loss) {
                best = Some(cell);
            }
        }
    }
    let chosen = best.expect("non-empty grid");
    Ok(GridSearchResult {
        best: SgbtParams {
            max_depth: chosen.max_depth,
            sample_rate: chosen.sample_rate,
            ..*base
        },
        cells,
    })
}

/// Quantity rendered onto a decision-surface lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    BboxProba,
    ErrorProb,
    Aleatoric,
    Epistemic,
    Risk,
}

/// Models available to [`emit_grid`]; only the one needed by the kind has to
/// be present.
#[derive(Default)]
pub struct GridModels<'a> {
    pub advisor: Option<&'a AdvisorModel>,
    pub bbox: Option<&'a BlackBoxModel>,
}

fn bbox_feature_count(m: &BlackBoxModel) -> Option<usize> {
    match m {
        BlackBoxModel::Logistic { weights, .. } => weights.first().map(Vec::len),
        BlackBoxModel::Mlp { layers, .. } => {
            layers.first().and_then(|l| l.weights.first().map(Vec::len))
        }
        BlackBoxModel::External { .. } => None,
    }
}

/// Data bounding box padded by 20% on each axis; requires 2-D features.
pub fn data_bounds_padded(d: &Dataset) -> Result<(f64, f64, f64, f64)> {
    if d.feature_count() != 2 {
        return Err(Error::InvalidArgument(format!(
            "grid export needs 2-D data, got {} features",
            d.feature_count()
        )));
    }
    if d.is_empty() {
        return Err(Error::EmptyDataset("grid bounds".into()));
    }
    let mut bounds = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for row in &d.features {
        bounds.0 = bounds.0.min(row[0]);
        bounds.1 = bounds.1.max(row[0]);
        bounds.2 = bounds.2.min(row[1]);
        bounds.3 = bounds.3.max(row[1]);
    }
    let pad_x = 0.2 * (bounds.1 - bounds.0);
    let pad_y = 0.2 * (bounds.3 - bounds.2);
    Ok((bounds.0 - pad_x, bounds.1 + pad_x, bounds.2 - pad_y, bounds.3 + pad_y))
}

/// Evaluates `kind` on a resolution x resolution lattice over `bounds`
/// (xmin, xmax, ymin, ymax); rows are (x, y, value) in row-major y-then-x
/// order. Lattice values match [`advisor::decompose`] exactly.
pub fn emit_grid(
    kind: GridKind,
    models: &GridModels,
    bounds: (f64, f64, f64, f64),
    resolution: usize,
) -> Result<Vec<(f64, f64, f64)>> {
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be >= 1".into()));
    }
    let (xmin, xmax, ymin, ymax) = bounds;
    if !(xmin < xmax && ymin < ymax) {
        return Err(Error::InvalidArgument(format!(
            "invalid bounds ({xmin}, {xmax}, {ymin}, {ymax})"
        )));
    }
    let coord = |lo: f64, hi: f64, i: usize| {
        if resolution == 1 {
            (lo + hi) / 2.0
        } else {
            lo + (hi - lo) * i as f64 / (resolution - 1) as f64
        }
    };
    let mut points = Vec::with_capacity(resolution * resolution);
    for iy in 0..resolution {
        for ix in 0..resolution {
            points.push(vec![coord(xmin, xmax, ix), coord(ymin, ymax, iy)]);
        }
    }

    let values: Vec<f64> = match kind {
        GridKind::BboxProba => {
            let m = models
                .bbox
                .ok_or_else(|| Error::InvalidArgument("bbox_proba grid needs a bbox model".into()))?;
            match bbox_feature_count(m) {
                Some(2) => {}
                Some(d) => {
                    return Err(Error::InvalidArgument(format!(
                        "grid export needs a 2-D model, got {d} features"
                    )))
                }
                None => {
                    return Err(Error::InvalidArgument(
                        "external prediction files cannot be evaluated on a grid".into(),
                    ))
                }
            }
            points
                .iter()
                .map(|p| {
                    let probs = m.predict_proba_row(p)?.ok_or_else(|| {
                        Error::InvalidArgument("model provides no probabilities".into())
                    })?;
                    Ok(if probs.len() == 2 {
                        probs[1]
                    } else {
                        probs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                    })
                })
                .collect::<Result<_>>()?
        }
        GridKind::ErrorProb | GridKind::Aleatoric | GridKind::Epistemic | GridKind::Risk => {
            let a = models
                .advisor
                .ok_or_else(|| Error::InvalidArgument("this grid kind needs an advisor".into()))?;
            if let Some(member) = a.members.first() {
                if member.feature_count != 2 {
                    return Err(Error::InvalidArgument(format!(
                        "grid export needs a 2-D model, got {} features",
                        member.feature_count
                    )));
                }
            }
            let report = advisor::decompose(a, &points)?;
            match kind {
                GridKind::ErrorProb => report.error_prob,
                GridKind::Aleatoric => report.aleatoric,
                GridKind::Epistemic => report.epistemic,
                GridKind::Risk => report.risk_score,
                GridKind::BboxProba => unreachable!(),
            }
        }
    };

    Ok(points
        .into_iter()
        .zip(values)
        .map(|(p, v)| (p[0], p[1], v))
        .collect())
}

/// Writes grid rows as `x,y,value` CSV.
pub fn write_grid_csv(rows: &[(f64, f64, f64)], path: &Path) -> Result<()> {
    let mut out = String::from("x,y,value\n");
    for (x, y, v) in rows {
        out.push_str(&format!("{x},{y},{v}\n"));
    }
    write_atomic(path, out.as_bytes())
}

/// Renders the lattice as a single-channel SVG heatmap with an embedded
/// linear scale bar.
pub fn write_grid_svg(rows: &[(f64, f64, f64)], resolution: usize, path: &Path) -> Result<()> {
    if rows.len() != resolution * resolution {
        return Err(Error::DimensionMismatch(format!(
            "{} rows for resolution {resolution}",
            rows.len()
        )));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, _, v) in rows {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    let cell = 10usize;
    let legend_w = 60usize;
    let width = resolution * cell + legend_w;
    let height = resolution * cell;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\">\n"
    );
    for (i, (_, _, v)) in rows.iter().enumerate() {
        let ix = i % resolution;
        let iy = i / resolution;
        let shade = (255.0 * (v - lo) / span).round() as u8;
        // lattice row 0 is ymin; SVG y grows downward, so flip vertically
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{cell}\" height=\"{cell}\" fill=\"rgb({shade},{shade},{shade})\"/>\n",
            ix * cell,
            (resolution - 1 - iy) * cell,
        ));
    }
    for step in 0..=10usize {
        let shade = (255.0 * step as f64 / 10.0).round() as u8;
        let y = height.saturating_sub((step + 1) * height / 11);
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{y}\" width=\"12\" height=\"{}\" fill=\"rgb({shade},{shade},{shade})\"/>\n",
            resolution * cell + 8,
            height / 11 + 1,
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"12\" font-size=\"9\">{hi:.4}</text>\n",
        resolution * cell + 24
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"9\">{lo:.4}</text>\n",
        resolution * cell + 24,
        height - 2
    ));
    svg.push_str("</svg>\n");
    write_atomic(path, svg.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advisor::fit_advisor;

    fn tiny_advisor(members: usize) -> AdvisorModel {
        let features: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i % 8) as f64, (i / 8) as f64])
            .collect();
        let targets: Vec<bool> = (0..40).map(|i| i % 3 == 0).collect();
        let params = SgbtParams {
            n_trees: 20,
            seed: 3,
            ..SgbtParams::default()
        };
        fit_advisor(&features, &targets, &params, members, RiskWeights::default()).unwrap()
    }

    #[test]
    fn grid_row_count_matches_resolution() {
        let a = tiny_advisor(2);
        let models = GridModels {
            advisor: Some(&a),
            bbox: None,
        };
        let rows = emit_grid(GridKind::Epistemic, &models, (0.0, 1.0, 0.0, 1.0), 3).unwrap();
        assert_eq!(rows.len(), 9);
    }

    #[test]
    fn single_member_grid_has_zero_epistemic() {
        let a = tiny_advisor(1);
        let models = GridModels {
            advisor: Some(&a),
            bbox: None,
        };
        let rows = emit_grid(GridKind::Epistemic, &models, (0.0, 7.0, 0.0, 4.0), 4).unwrap();
        assert!(rows.iter().all(|(_, _, v)| *v == 0.0));
    }

    #[test]
    fn grid_value_matches_single_point_decompose() {
        let a = tiny_advisor(3);
        let models = GridModels {
            advisor: Some(&a),
            bbox: None,
        };
        let rows = emit_grid(GridKind::Risk, &models, (0.0, 7.0, 0.0, 4.0), 3).unwrap();
        for (x, y, v) in rows {
            let single = advisor::decompose(&a, &[vec![x, y]]).unwrap();
            assert_eq!(v, single.risk_score[0]);
        }
    }

    #[test]
    fn bounds_pad_by_twenty_percent() {
        let d = Dataset {
            features: vec![vec![0.0, -1.0], vec![10.0, 1.0]],
            labels: vec![0, 1],
            class_count: 2,
            feature_names: vec!["x".into(), "y".into()],
            is_ood: None,
            seed: None,
        };
        let (xmin, xmax, ymin, ymax) = data_bounds_padded(&d).unwrap();
        assert_eq!((xmin, xmax), (-2.0, 12.0));
        assert_eq!((ymin, ymax), (-1.4, 1.4));
    }

    #[test]
    fn grid_search_prefers_lower_depth_on_ties() {
        // all-false targets make every cell identical, so tie-breaking picks
        // the first (smallest) depth and rate
        let features: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64]).collect();
        let targets = vec![false; 30];
        let base = SgbtParams {
            n_trees: 5,
            seed: 1,
            ..SgbtParams::default()
        };
        let result = grid_search_params(&features, &targets, &base, 5).unwrap();
        assert_eq!(result.best.max_depth, 3);
        assert_eq!(result.best.sample_rate, 0.25);
        assert_eq!(result.cells.len(), 12);
    }

    #[test]
    fn config_round_trips_with_defaults_materialized() {
        let json = r#"{
            "dataset": {"kind": "circles", "n": 100, "noise_sd": 0.05, "train_fraction": 0.7},
            "output_dir": "/tmp/x"
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.members, 10);
        assert_eq!(cfg.repeats, 1);
        let full = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&full).unwrap();
        assert_eq!(cfg, back);
    }
}
