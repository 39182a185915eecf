//! Comparison scorers: max-class-probability confidence and the Trust Score
//! (ratio of distances to the nearest filtered high-density set of a
//! different vs. the same predicted class).

use crate::datagen::Dataset;
use crate::{Error, Result};

/// Cap applied to the distance ratio so degenerate same-class distances do
/// not produce infinities in rankings.
pub const TRUST_SCORE_CAP: f64 = 1e12;
const DISTANCE_FLOOR: f64 = 1e-12;

/// Per-class alpha-high-density point sets for trust scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustModel {
    /// One filtered point matrix per class.
    pub sets: Vec<Vec<Vec<f64>>>,
    pub alpha: f64,
    pub k_density: usize,
}

/// Rowwise maximum of a class-probability matrix.
pub fn mcp_confidence(probabilities: &[Vec<f64>]) -> Result<Vec<f64>> {
    probabilities
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidArgument(format!(
                    "probability row {i} sums to {sum}, expected 1"
                )));
            }
            Ok(row.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        })
        .collect()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Filters each class to its alpha-high-density subset: drop the
/// floor(alpha * n_c) points with the largest distance to their k-th nearest
/// same-class neighbor.
pub fn fit_trust(train: &Dataset, alpha: f64, k_density: usize) -> Result<TrustModel> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be in [0,1), got {alpha}"
        )));
    }
    if k_density == 0 {
        return Err(Error::InvalidArgument("k_density must be >= 1".into()));
    }
    let mut sets = Vec::with_capacity(train.class_count);
    for c in 0..train.class_count {
        let points: Vec<&Vec<f64>> = train
            .features
            .iter()
            .zip(&train.labels)
            .filter(|(_, &y)| y == c)
            .map(|(p, _)| p)
            .collect();
        if points.len() < k_density + 1 {
            return Err(Error::InvalidArgument(format!(
                "class {c} has {} point(s); need at least k_density + 1 = {}",
                points.len(),
                k_density + 1
            )));
        }
        // k-th nearest same-class neighbor radius per point (self excluded)
        let mut radii: Vec<(usize, f64)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut dists: Vec<f64> = points
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, q)| squared_distance(p, q))
                    .collect();
                dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
                (i, dists[k_density - 1])
            })
            .collect();
        let drop_count = (alpha * points.len() as f64).floor() as usize;
        // largest radii out; ties resolved by original index for determinism
        radii.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let mut kept: Vec<usize> = radii[drop_count..].iter().map(|(i, _)| *i).collect();
        kept.sort_unstable();
        sets.push(kept.into_iter().map(|i| points[i].clone()).collect());
    }
    Ok(TrustModel {
        sets,
        alpha,
        k_density,
    })
}

/// Distance ratio d_other / d_same for one query, capped at
/// [`TRUST_SCORE_CAP`].
pub fn trust_score(tm: &TrustModel, x: &[f64], predicted_label: usize) -> Result<f64> {
    if predicted_label >= tm.sets.len() {
        return Err(Error::InvalidArgument(format!(
            "predicted label {predicted_label} outside [0, {})",
            tm.sets.len()
        )));
    }
    let nearest = |set: &[Vec<f64>]| -> Option<f64> {
        set.iter()
            .map(|p| squared_distance(x, p))
            .min_by(|a, b| a.partial_cmp(b).unwrap())
            .map(f64::sqrt)
    };
    let d_same = nearest(&tm.sets[predicted_label]).ok_or_else(|| {
        Error::InvalidArgument(format!("empty filtered set for class {predicted_label}"))
    })?;
    let mut d_other = f64::INFINITY;
    for (c, set) in tm.sets.iter().enumerate() {
        if c == predicted_label {
            continue;
        }
        let d = nearest(set)
            .ok_or_else(|| Error::InvalidArgument(format!("empty filtered set for class {c}")))?;
        d_other = d_other.min(d);
    }
    Ok((d_other / d_same.max(DISTANCE_FLOOR)).min(TRUST_SCORE_CAP))
}

/// Trust scores for every row of a dataset given its predicted labels.
pub fn trust_scores(tm: &TrustModel, d: &Dataset, predicted: &[usize]) -> Result<Vec<f64>> {
    if predicted.len() != d.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions vs {} rows",
            predicted.len(),
            d.len()
        )));
    }
    d.features
        .iter()
        .zip(predicted)
        .map(|(row, &label)| trust_score(tm, row, label))
        .collect()
}
