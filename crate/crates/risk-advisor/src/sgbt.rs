//! Stochastic gradient boosted regression trees for a binary target: the
//! meta-learner trained on the black-box classifier's error indicator.
//!
//! Each boosting round draws a row subsample without replacement (the sample
//! rate), fits a regression tree to the negative log-loss gradients, sets
//! leaf values by a single Newton step and updates scores with shrinkage.
//! Everything is a pure function of (features, targets, params).

use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const PROB_CLAMP: f64 = 1e-6;
const LEAF_CLAMP: f64 = 4.0;
const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgbtParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub sample_rate: f64,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for SgbtParams {
    fn default() -> Self {
        SgbtParams {
            n_trees: 1000,
            max_depth: 4,
            learning_rate: 0.1,
            sample_rate: 0.5,
            min_samples_leaf: 5,
            seed: 0,
        }
    }
}

impl SgbtParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidArgument("n_trees must be >= 1".into()));
        }
        if self.max_depth == 0 {
            return Err(Error::InvalidArgument("max_depth must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "learning_rate must be in (0,1], got {}",
                self.learning_rate
            )));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "sample_rate must be in (0,1], got {}",
                self.sample_rate
            )));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidArgument("min_samples_leaf must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature_index: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: f64,
    },
}

impl TreeNode {
    pub fn evaluate(&self, row: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature_index,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature_index] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub root: TreeNode,
    pub max_depth: usize,
}

impl RegressionTree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.root.evaluate(row)
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgbtModel {
    pub base_score: f64,
    pub trees: Vec<RegressionTree>,
    pub params: SgbtParams,
    pub feature_count: usize,
}

/// Winning split candidate from [`find_best_split`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature_index: usize,
    pub threshold: f64,
    pub gain: f64,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Best variance-reduction split over all (feature, midpoint) candidates.
/// Gain is the per-sample variance reduction; ties go to the lower feature
/// index, then the lower threshold. Returns `None` when no candidate has
/// positive gain or a side would fall below `min_samples_leaf`.
pub fn find_best_split(
    features: &[Vec<f64>],
    residuals: &[f64],
    rows: &[usize],
    min_samples_leaf: usize,
) -> Option<Split> {
    let n = rows.len();
    if n < 2 * min_samples_leaf {
        return None;
    }
    let total_sum: f64 = rows.iter().map(|&i| residuals[i]).sum();
    let n_f = n as f64;
    let parent_term = total_sum * total_sum / n_f;
    let width = features[rows[0]].len();

    let mut best: Option<Split> = None;
    let mut sortable: Vec<(f64, f64)> = Vec::with_capacity(n);
    for feature_index in 0..width {
        sortable.clear();
        sortable.extend(rows.iter().map(|&i| (features[i][feature_index], residuals[i])));
        sortable.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        let mut left_sum = 0.0;
        for k in 0..n - 1 {
            left_sum += sortable[k].1;
            let (v, next) = (sortable[k].0, sortable[k + 1].0);
            if v == next {
                continue;
            }
            let n_left = k + 1;
            let n_right = n - n_left;
            if n_left < min_samples_leaf || n_right < min_samples_leaf {
                continue;
            }
            let right_sum = total_sum - left_sum;
            let gain = (left_sum * left_sum / n_left as f64
                + right_sum * right_sum / n_right as f64
                - parent_term)
                / n_f;
            if gain <= 0.0 {
                continue;
            }
            // midpoint, unless rounding pushed it onto the right neighbor;
            // the threshold must keep every left value <= it and every right
            // value > it so routing matches the fitted partition exactly
            let mut threshold = v + (next - v) / 2.0;
            if threshold >= next {
                threshold = v;
            }
            let better = match &best {
                None => true,
                Some(b) => gain > b.gain,
            };
            if better {
                best = Some(Split {
                    feature_index,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}

struct TreeBuilder<'a> {
    features: &'a [Vec<f64>],
    residuals: &'a [f64],
    hessians: &'a [f64],
    max_depth: usize,
    min_samples_leaf: usize,
}

impl TreeBuilder<'_> {
    fn leaf(&self, rows: &[usize]) -> TreeNode {
        // one Newton step: sum(residual) / sum(p(1-p)), 0/0 -> 0
        let num: f64 = rows.iter().map(|&i| self.residuals[i]).sum();
        let den: f64 = rows.iter().map(|&i| self.hessians[i]).sum();
        let value = if den == 0.0 { 0.0 } else { num / den };
        TreeNode::Leaf {
            value: value.clamp(-LEAF_CLAMP, LEAF_CLAMP),
        }
    }

    fn build(&self, rows: &[usize], depth: usize) -> TreeNode {
        if depth >= self.max_depth {
            return self.leaf(rows);
        }
        let split = match find_best_split(
            self.features,
            self.residuals,
            rows,
            self.min_samples_leaf,
        ) {
            Some(s) => s,
            None => return self.leaf(rows),
        };
        let (mut left_rows, mut right_rows) = (Vec::new(), Vec::new());
        for &i in rows {
            if self.features[i][split.feature_index] <= split.threshold {
                left_rows.push(i);
            } else {
                right_rows.push(i);
            }
        }
        TreeNode::Split {
            feature_index: split.feature_index,
            threshold: split.threshold,
            left: Box::new(self.build(&left_rows, depth + 1)),
            right: Box::new(self.build(&right_rows, depth + 1)),
        }
    }
}

fn round_rng(seed: u64, round: usize) -> ChaCha8Rng {
    let mut z = seed
        .wrapping_add((round as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

/// Trains one SGBT on the boolean error targets with binomial log-loss.
pub fn fit_sgbt(features: &[Vec<f64>], targets: &[bool], params: &SgbtParams) -> Result<SgbtModel> {
    params.validate()?;
    let n = features.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 rows, got {n}"
        )));
    }
    if targets.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} feature rows vs {} targets",
            targets.len()
        )));
    }
    let width = features[0].len();
    for (i, row) in features.iter().enumerate() {
        if row.len() != width {
            return Err(Error::DimensionMismatch(format!(
                "row {i} has {} features, expected {width}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite feature in row {i}")));
        }
    }

    let positives = targets.iter().filter(|&&t| t).count();
    let base_rate = clamp_prob(positives as f64 / n as f64);
    let base_score = (base_rate / (1.0 - base_rate)).ln();

    let z: Vec<f64> = targets.iter().map(|&t| f64::from(u8::from(t))).collect();
    let mut scores = vec![base_score; n];
    let mut trees = Vec::with_capacity(params.n_trees);
    let subsample_size = ((params.sample_rate * n as f64).ceil() as usize).clamp(1, n);

    let mut residuals = vec![0.0; n];
    let mut hessians = vec![0.0; n];
    for round in 0..params.n_trees {
        for i in 0..n {
            let p = sigmoid(scores[i]);
            residuals[i] = z[i] - p;
            hessians[i] = p * (1.0 - p);
        }
        let mut rng = round_rng(params.seed, round);
        let rows: Vec<usize> = if subsample_size == n {
            (0..n).collect()
        } else {
            let mut picked =
                rand::seq::index::sample(&mut rng, n, subsample_size).into_vec();
            picked.sort_unstable();
            picked
        };
        let builder = TreeBuilder {
            features,
            residuals: &residuals,
            hessians: &hessians,
            max_depth: params.max_depth,
            min_samples_leaf: params.min_samples_leaf,
        };
        let tree = RegressionTree {
            root: builder.build(&rows, 0),
            max_depth: params.max_depth,
        };
        for (score, row) in scores.iter_mut().zip(features) {
            *score += params.learning_rate * tree.predict_row(row);
        }
        trees.push(tree);
    }

    Ok(SgbtModel {
        base_score,
        trees,
        params: *params,
        feature_count: width,
    })
}

/// Predicted error probabilities, clamped to `[1e-6, 1 - 1e-6]`.
pub fn predict_proba(m: &SgbtModel, features: &[Vec<f64>]) -> Result<Vec<f64>> {
    features
        .iter()
        .map(|row| {
            if row.len() != m.feature_count {
                return Err(Error::DimensionMismatch(format!(
                    "model expects {} features, got {}",
                    m.feature_count,
                    row.len()
                )));
            }
            let sum: f64 = m.trees.iter().map(|t| t.predict_row(row)).sum();
            Ok(clamp_prob(sigmoid(
                m.base_score + m.params.learning_rate * sum,
            )))
        })
        .collect()
}

/// Mean binomial log-loss of the model on (features, targets).
pub fn log_loss(probabilities: &[f64], targets: &[bool]) -> f64 {
    let n = probabilities.len() as f64;
    probabilities
        .iter()
        .zip(targets)
        .map(|(&p, &t)| {
            let p = clamp_prob(p);
            if t {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum::<f64>()
        / n
}

/// Per-round training log-loss trace, recomputed by replaying the staged
/// score updates. Entry 0 is the loss of the base score alone.
pub fn training_loss_trace(m: &SgbtModel, features: &[Vec<f64>], targets: &[bool]) -> Vec<f64> {
    let mut scores = vec![m.base_score; features.len()];
    let mut trace = Vec::with_capacity(m.trees.len() + 1);
    let loss = |scores: &[f64]| {
        let probs: Vec<f64> = scores.iter().map(|&s| clamp_prob(sigmoid(s))).collect();
        log_loss(&probs, targets)
    };
    trace.push(loss(&scores));
    for tree in &m.trees {
        for (score, row) in scores.iter_mut().zip(features) {
            *score += m.params.learning_rate * tree.predict_row(row);
        }
        trace.push(loss(&scores));
    }
    trace
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    version: u32,
    params: SgbtParams,
    base_score: f64,
    feature_count: usize,
    trees: Vec<RegressionTree>,
}

pub fn to_json(m: &SgbtModel) -> Result<String> {
    let doc = ModelDocument {
        version: MODEL_FORMAT_VERSION,
        params: m.params,
        base_score: m.base_score,
        feature_count: m.feature_count,
        trees: m.trees.clone(),
    };
    Ok(serde_json::to_string(&doc)?)
}

pub fn from_json(json: &str) -> Result<SgbtModel> {
    let doc: ModelDocument = serde_json::from_str(json)?;
    if doc.version != MODEL_FORMAT_VERSION {
        return Err(Error::InvalidArgument(format!(
            "unsupported model format version {}",
            doc.version
        )));
    }
    Ok(SgbtModel {
        base_score: doc.base_score,
        trees: doc.trees,
        params: doc.params,
        feature_count: doc.feature_count,
    })
}

pub fn save_model(m: &SgbtModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_json(m)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SgbtModel> {
    from_json(&std::fs::read_to_string(path)?)
}
