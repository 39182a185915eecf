//! Metrics and experiment drivers: AUROC / average precision for failure
//! prediction, accuracy-rejection curves and the prediction rejection ratio
//! for abstention, OOD-detection AUROC, and the sample-and-retrain loop.
//!
//! AUROC and PRR are computed with integer pair / area counting so that the
//! documented identities (oracle PRR = 1, pairwise-oracle equivalence) hold
//! exactly, not just to tolerance.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::advisor::{self, RiskWeights};
use crate::baselines;
use crate::bbox::{self, BlackBoxModel};
use crate::datagen::{Dataset, Standardizer};
use crate::sgbt::SgbtParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    HigherIsPositive,
    LowerIsPositive,
}

/// Scores paired with the positive-class flags they are meant to rank.
#[derive(Debug, Clone)]
pub struct RankedScores {
    pub scores: Vec<f64>,
    pub positives: Vec<bool>,
    pub orientation: Orientation,
}

impl RankedScores {
    pub fn new(scores: Vec<f64>, positives: Vec<bool>, orientation: Orientation) -> Result<Self> {
        if scores.len() != positives.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} scores vs {} flags",
                scores.len(),
                positives.len()
            )));
        }
        Ok(RankedScores {
            scores,
            positives,
            orientation,
        })
    }

    fn oriented(&self) -> Vec<f64> {
        match self.orientation {
            Orientation::HigherIsPositive => self.scores.clone(),
            Orientation::LowerIsPositive => self.scores.iter().map(|s| -s).collect(),
        }
    }
}

/// Accuracy-rejection curve plus its prediction rejection ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ARCurve {
    pub rejection_fractions: Vec<f64>,
    pub accuracies: Vec<f64>,
    pub prr: f64,
}

fn check_both_classes(positives: &[bool]) -> Result<(usize, usize)> {
    let pos = positives.iter().filter(|&&p| p).count();
    let neg = positives.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::InvalidArgument(format!(
            "need both classes, got {pos} positives and {neg} negatives"
        )));
    }
    Ok((pos, neg))
}

/// Mann-Whitney AUROC: P(score_pos > score_neg) + 0.5 P(tie), computed by
/// exact pair counting over sorted tie groups.
pub fn auroc(r: &RankedScores) -> Result<f64> {
    let (pos, neg) = check_both_classes(&r.positives)?;
    let scores = r.oriented();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    // wins counted in halves so ties stay in integer arithmetic
    let mut half_wins: u64 = 0;
    let mut negatives_below: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let mut group_pos: u64 = 0;
        let mut group_neg: u64 = 0;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if r.positives[order[j]] {
                group_pos += 1;
            } else {
                group_neg += 1;
            }
            j += 1;
        }
        half_wins += group_pos * (2 * negatives_below + group_neg);
        negatives_below += group_neg;
        i = j;
    }
    Ok(half_wins as f64 / (2 * pos as u64 * neg as u64) as f64)
}

/// Average precision over descending-score prefixes with equal-score points
/// processed as one group (no interpolation).
pub fn average_precision(r: &RankedScores) -> Result<f64> {
    let (pos, _) = check_both_classes(&r.positives)?;
    let scores = r.oriented();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut ap = 0.0;
    let mut tp: u64 = 0;
    let mut seen: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let mut group_tp: u64 = 0;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if r.positives[order[j]] {
                group_tp += 1;
            }
            j += 1;
        }
        let prev_recall = tp as f64 / pos as f64;
        tp += group_tp;
        seen += (j - i) as u64;
        let recall = tp as f64 / pos as f64;
        let precision = tp as f64 / seen as f64;
        ap += (recall - prev_recall) * precision;
        i = j;
    }
    Ok(ap)
}

/// Risk-descending rejection order: ties broken by ascending original index.
fn rejection_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    order
}

/// Accuracy-rejection curve: at rejection fraction rho the ceil(rho N)
/// riskiest points are answered by the oracle, the rest keep their error
/// flags.
pub fn accuracy_rejection_curve(
    scores: &[f64],
    errors: &[bool],
    grid_step: f64,
) -> Result<ARCurve> {
    if scores.len() != errors.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores vs {} error flags",
            scores.len(),
            errors.len()
        )));
    }
    let steps = 1.0 / grid_step;
    if grid_step <= 0.0 || (steps - steps.round()).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "grid_step {grid_step} does not divide 1 evenly"
        )));
    }
    let steps = steps.round() as usize;
    let n = scores.len();
    let order = rejection_order(scores);
    // errors_remaining[k] = errors among all but the k riskiest
    let total_errors = errors.iter().filter(|&&e| e).count();
    let mut errors_remaining = vec![0usize; n + 1];
    errors_remaining[0] = total_errors;
    for (k, &idx) in order.iter().enumerate() {
        errors_remaining[k + 1] = errors_remaining[k] - usize::from(errors[idx]);
    }
    let mut rejection_fractions = Vec::with_capacity(steps + 1);
    let mut accuracies = Vec::with_capacity(steps + 1);
    for s in 0..=steps {
        let rho = s as f64 * grid_step;
        let rejected = ((rho * n as f64).ceil() as usize).min(n);
        rejection_fractions.push(rho);
        accuracies.push((n - errors_remaining[rejected]) as f64 / n as f64);
    }
    let prr = prr(scores, errors)?;
    Ok(ARCurve {
        rejection_fractions,
        accuracies,
        prr,
    })
}

/// Prediction rejection ratio: the area between the random diagonal and the
/// method's residual-error curve, normalized by the oracle's area. 1 is a
/// perfect ordering, 0 random; anti-oracle orderings go negative.
pub fn prr(scores: &[f64], errors: &[bool]) -> Result<f64> {
    if scores.len() != errors.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores vs {} error flags",
            scores.len(),
            errors.len()
        )));
    }
    let n = scores.len();
    let total_errors = errors.iter().filter(|&&e| e).count();
    if total_errors == 0 || total_errors == n {
        return Err(Error::InvalidArgument(format!(
            "prr needs both errors and non-errors, got {total_errors} of {n}"
        )));
    }
    let order = rejection_order(scores);
    let mut residual = vec![0i64; n + 1];
    residual[0] = total_errors as i64;
    for (k, &idx) in order.iter().enumerate() {
        residual[k + 1] = residual[k] - i64::from(errors[idx]);
    }
    // All curves evaluated on the exact breakpoint grid j/N and scaled by N
    // so the trapezoid sums stay in integer arithmetic; the common scale
    // cancels in the ratio.
    let e0 = total_errors as i64;
    let n_i = n as i64;
    let diag = |j: i64| e0 * (n_i - j); // N * e0 * (1 - j/N)
    let area = |e: &dyn Fn(i64) -> i64| -> i64 {
        (0..n_i)
            .map(|j| (diag(j) - n_i * e(j)) + (diag(j + 1) - n_i * e(j + 1)))
            .sum()
    };
    let method_area = area(&|j| residual[j as usize]);
    let oracle_area = area(&|j| (e0 - j).max(0));
    Ok(method_area as f64 / oracle_area as f64)
}

/// AUROC with OOD membership as the positive class.
pub fn ood_auroc(scores: &[f64], is_ood: &[bool], orientation: Orientation) -> Result<f64> {
    auroc(&RankedScores::new(
        scores.to_vec(),
        is_ood.to_vec(),
        orientation,
    )?)
}

/// How the black-box model is (re)trained inside experiment drivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BboxSpec {
    Logistic {
        l2: f64,
        epochs: usize,
        lr: f64,
    },
    Mlp {
        hidden: Vec<usize>,
        epochs: usize,
        lr: f64,
        batch_size: usize,
    },
}

impl Default for BboxSpec {
    fn default() -> Self {
        BboxSpec::Logistic {
            l2: 1e-4,
            epochs: 500,
            lr: 0.1,
        }
    }
}

impl BboxSpec {
    pub fn train(&self, d: &Dataset, seed: u64) -> Result<BlackBoxModel> {
        match self {
            BboxSpec::Logistic { l2, epochs, lr } => {
                bbox::train_logistic(d, *l2, *epochs, *lr, seed)
            }
            BboxSpec::Mlp {
                hidden,
                epochs,
                lr,
                batch_size,
            } => bbox::train_mlp(d, hidden, *epochs, *lr, *batch_size, seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetrainStrategy {
    EpistemicDesc,
    ConfidenceAsc,
    TrustAsc,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrainOptions {
    pub k_percent: f64,
    pub rounds: usize,
    pub seed: u64,
    /// Pool points may be selected again in later rounds when true.
    pub with_replacement: bool,
    pub trust_alpha: f64,
    pub trust_k: usize,
    pub ensemble_size: usize,
}

impl Default for RetrainOptions {
    fn default() -> Self {
        RetrainOptions {
            k_percent: 5.0,
            rounds: 8,
            seed: 0,
            with_replacement: true,
            trust_alpha: 0.0625,
            trust_k: 10,
            ensemble_size: 10,
        }
    }
}

fn ood_accuracy(model: &BlackBoxModel, test: &Dataset) -> Result<f64> {
    let flags = test
        .is_ood
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("test set has no is_ood flags".into()))?;
    let (labels, _) = bbox::predict(model, test)?;
    let mut correct = 0usize;
    let mut total = 0usize;
    for ((&pred, &truth), &ood) in labels.iter().zip(&test.labels).zip(flags) {
        if ood {
            total += 1;
            correct += usize::from(pred == truth);
        }
    }
    if total == 0 {
        return Err(Error::InvalidArgument("test set has no OOD points".into()));
    }
    Ok(correct as f64 / total as f64)
}

/// One point of the sample-and-retrain curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrainPoint {
    /// Cumulative selections as a percentage of the pool size.
    pub pool_percent: f64,
    pub ood_accuracy: f64,
}

/// Sample-and-retrain loop: each round scores the held-out pool with the
/// strategy's current model, moves the top k% into the training multiset and
/// retrains the black box, recording accuracy on the OOD test points.
pub fn sample_retrain(
    train: &Dataset,
    pool: &Dataset,
    test: &Dataset,
    strategy: RetrainStrategy,
    opts: &RetrainOptions,
    bbox_spec: &BboxSpec,
    advisor_params: &SgbtParams,
) -> Result<Vec<RetrainPoint>> {
    if pool.is_empty() {
        return Err(Error::EmptyDataset("retrain pool".into()));
    }
    if !(opts.k_percent > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "k_percent must be > 0, got {}",
            opts.k_percent
        )));
    }
    let mut current = train.clone();
    let mut model = bbox_spec.train(&current, opts.seed)?;
    let mut curve = vec![RetrainPoint {
        pool_percent: 0.0,
        ood_accuracy: ood_accuracy(&model, test)?,
    }];
    let k = (((opts.k_percent / 100.0) * pool.len() as f64).ceil() as usize).max(1);
    let mut available: Vec<usize> = (0..pool.len()).collect();
    let mut selected_total = 0usize;

    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5EED_CAFE);

    for _round in 0..opts.rounds {
        if available.is_empty() {
            break;
        }
        let chosen: Vec<usize> = match strategy {
            RetrainStrategy::Random => {
                use rand::seq::SliceRandom;
                let mut shuffled = available.clone();
                shuffled.shuffle(&mut rng);
                shuffled.into_iter().take(k).collect()
            }
            RetrainStrategy::ConfidenceAsc => {
                let candidates = pool.subset(&available);
                let (_, probs) = bbox::predict(&model, &candidates)?;
                let probs = probs.ok_or_else(|| {
                    Error::InvalidArgument("confidence strategy needs probabilities".into())
                })?;
                let scores = baselines::mcp_confidence(&probs)?;
                pick_lowest(&available, &scores, k)
            }
            RetrainStrategy::TrustAsc => {
                let standardizer = Standardizer::fit(&current)?;
                let std_train = standardizer.transform(&current);
                let tm = baselines::fit_trust(&std_train, opts.trust_alpha, opts.trust_k)?;
                let candidates = pool.subset(&available);
                let std_pool = standardizer.transform(&candidates);
                let (labels, _) = bbox::predict(&model, &candidates)?;
                let scores = baselines::trust_scores(&tm, &std_pool, &labels)?;
                pick_lowest(&available, &scores, k)
            }
            RetrainStrategy::EpistemicDesc => {
                let (labels, _) = bbox::predict(&model, &current)?;
                let indicator = bbox::error_indicator(&current.labels, &labels)?;
                let a = advisor::fit_advisor(
                    &current.features,
                    &indicator.z,
                    advisor_params,
                    opts.ensemble_size,
                    RiskWeights::default(),
                )?;
                let candidates = pool.subset(&available);
                let report = advisor::decompose(&a, &candidates.features)?;
                let negated: Vec<f64> = report.epistemic.iter().map(|e| -e).collect();
                pick_lowest(&available, &negated, k)
            }
        };
        current.extend_from(pool, &chosen);
        if !opts.with_replacement {
            available.retain(|i| !chosen.contains(i));
        }
        selected_total += chosen.len();
        model = bbox_spec.train(&current, opts.seed)?;
        curve.push(RetrainPoint {
            pool_percent: 100.0 * selected_total as f64 / pool.len() as f64,
            ood_accuracy: ood_accuracy(&model, test)?,
        });
    }
    Ok(curve)
}

/// The k pool indices with the lowest scores, ties by ascending pool index.
fn pick_lowest(available: &[usize], scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..available.len()).collect();
    order.sort_by(|&a, &b| {
        scores[a]
            .partial_cmp(&scores[b])
            .unwrap()
            .then(available[a].cmp(&available[b]))
    });
    order.into_iter().take(k).map(|i| available[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ranked(scores: Vec<f64>, positives: Vec<bool>) -> RankedScores {
        RankedScores::new(scores, positives, Orientation::HigherIsPositive).unwrap()
    }

    /// O(n^2) pairwise AUROC, the independent oracle.
    fn pairwise_auroc(scores: &[f64], positives: &[bool]) -> f64 {
        let mut half_wins: u64 = 0;
        let mut pairs: u64 = 0;
        for (i, &pi) in positives.iter().enumerate() {
            if !pi {
                continue;
            }
            for (j, &pj) in positives.iter().enumerate() {
                if pj {
                    continue;
                }
                pairs += 1;
                if scores[i] > scores[j] {
                    half_wins += 2;
                } else if scores[i] == scores[j] {
                    half_wins += 1;
                }
            }
        }
        half_wins as f64 / (2 * pairs) as f64
    }

    #[test]
    fn auroc_known_values() {
        let perfect = ranked(vec![0.9, 0.8, 0.2, 0.1], vec![true, true, false, false]);
        assert_eq!(auroc(&perfect).unwrap(), 1.0);
        let ties = ranked(vec![0.5; 4], vec![true, true, false, false]);
        assert_eq!(auroc(&ties).unwrap(), 0.5);
        let mixed = ranked(vec![0.3, 0.7, 0.7, 0.1], vec![true, true, false, false]);
        assert_eq!(auroc(&mixed).unwrap(), 0.625);
        assert!(auroc(&ranked(vec![1.0, 2.0], vec![true, true])).is_err());
    }

    #[test]
    fn auroc_orientation_flip() {
        let scores = vec![0.1, 0.2, 0.8, 0.9];
        let positives = vec![true, true, false, false];
        let low = RankedScores::new(scores.clone(), positives.clone(), Orientation::LowerIsPositive)
            .unwrap();
        assert_eq!(auroc(&low).unwrap(), 1.0);
        let high = ranked(scores, positives);
        assert_eq!(auroc(&high).unwrap(), 0.0);
    }

    #[test]
    fn ap_known_values() {
        let perfect = ranked(vec![0.9, 0.8, 0.2, 0.1], vec![true, true, false, false]);
        assert_eq!(average_precision(&perfect).unwrap(), 1.0);
        let ties = ranked(vec![0.5; 4], vec![true, false, false, false]);
        assert_eq!(average_precision(&ties).unwrap(), 0.25);
        let case = ranked(vec![0.9, 0.8, 0.7], vec![true, false, true]);
        assert!((average_precision(&case).unwrap() - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn ar_curve_endpoints() {
        let scores = vec![0.9, 0.1, 0.2, 0.8];
        let errors = vec![true, false, false, true];
        let curve = accuracy_rejection_curve(&scores, &errors, 0.25).unwrap();
        assert_eq!(curve.rejection_fractions.len(), 5);
        assert_eq!(curve.accuracies[0], 0.5);
        assert_eq!(*curve.accuracies.last().unwrap(), 1.0);
        // the two errors carry the highest risk: fully correct at rho = 0.5
        assert_eq!(curve.accuracies[2], 1.0);
        // monotone when errors are ranked first
        for w in curve.accuracies.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn ar_curve_rejects_bad_grid() {
        assert!(accuracy_rejection_curve(&[0.1], &[true], 0.3).is_err());
    }

    #[test]
    fn prr_oracle_is_exactly_one() {
        let errors = vec![true, true, false, false, false, false];
        let scores: Vec<f64> = errors.iter().map(|&e| if e { 1.0 } else { 0.0 }).collect();
        assert_eq!(prr(&scores, &errors).unwrap(), 1.0);
    }

    #[test]
    fn prr_anti_oracle_is_minus_one() {
        let errors = vec![true, true, false, false, false, false, false, false];
        let scores: Vec<f64> = errors.iter().map(|&e| if e { 0.0 } else { 1.0 }).collect();
        assert!((prr(&scores, &errors).unwrap() + 1.0).abs() < 1e-9);
    }

    #[test]
    fn prr_random_orderings_center_on_zero() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 200;
        let mut errors = vec![false; n];
        for e in errors.iter_mut().take(50) {
            *e = true;
        }
        let mut sum = 0.0;
        for _ in 0..100 {
            let mut order: Vec<f64> = (0..n).map(|i| i as f64).collect();
            order.shuffle(&mut rng);
            sum += prr(&order, &errors).unwrap();
        }
        let mean = sum / 100.0;
        assert!(mean.abs() < 0.05, "mean prr over random orderings {mean}");
    }

    #[test]
    fn ood_auroc_orientations() {
        let epistemic = vec![0.9, 0.8, 0.1, 0.2];
        let flags = vec![true, true, false, false];
        assert_eq!(
            ood_auroc(&epistemic, &flags, Orientation::HigherIsPositive).unwrap(),
            1.0
        );
        let constant = vec![0.5; 4];
        assert_eq!(
            ood_auroc(&constant, &flags, Orientation::HigherIsPositive).unwrap(),
            0.5
        );
        // confidence pathologically higher on OOD points: worse than random
        let confidence = vec![0.99, 0.98, 0.6, 0.7];
        let a = ood_auroc(&confidence, &flags, Orientation::LowerIsPositive).unwrap();
        assert!(a < 0.5);
    }

    #[test]
    fn retrain_zero_rounds_and_determinism() {
        let (pool_and_train, test) = crate::datagen::gen_gmm_shift(
            200,
            200,
            3,
            &crate::datagen::GmmShiftConfig::default(),
        )
        .unwrap();
        let split = crate::datagen::SplitSpec {
            train_fraction: 0.5,
            stratified: true,
            seed: 1,
        };
        let (train, pool) = crate::datagen::stratified_split(&pool_and_train, &split).unwrap();
        let spec = BboxSpec::Logistic {
            l2: 1e-4,
            epochs: 100,
            lr: 0.1,
        };
        let params = SgbtParams {
            n_trees: 20,
            ..SgbtParams::default()
        };
        let opts = RetrainOptions {
            rounds: 0,
            ..RetrainOptions::default()
        };
        let curve = sample_retrain(
            &train,
            &pool,
            &test,
            RetrainStrategy::Random,
            &opts,
            &spec,
            &params,
        )
        .unwrap();
        assert_eq!(curve.len(), 1);
        assert_eq!(curve[0].pool_percent, 0.0);

        let opts2 = RetrainOptions {
            rounds: 2,
            k_percent: 10.0,
            ..RetrainOptions::default()
        };
        let a = sample_retrain(
            &train,
            &pool,
            &test,
            RetrainStrategy::Random,
            &opts2,
            &spec,
            &params,
        )
        .unwrap();
        let b = sample_retrain(
            &train,
            &pool,
            &test,
            RetrainStrategy::Random,
            &opts2,
            &spec,
            &params,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn auroc_matches_pairwise_oracle(
            scores in proptest::collection::vec(0u8..10, 2..200),
            flags in proptest::collection::vec(any::<bool>(), 2..200),
        ) {
            let n = scores.len().min(flags.len());
            let scores: Vec<f64> = scores[..n].iter().map(|&s| s as f64 / 10.0).collect();
            let flags = flags[..n].to_vec();
            prop_assume!(flags.iter().any(|&f| f) && flags.iter().any(|&f| !f));
            let fast = auroc(&ranked(scores.clone(), flags.clone())).unwrap();
            let slow = pairwise_auroc(&scores, &flags);
            prop_assert_eq!(fast, slow);
        }

        #[test]
        fn auroc_invariant_under_monotone_transform(
            scores in proptest::collection::vec(-5.0f64..5.0, 2..100),
            flags in proptest::collection::vec(any::<bool>(), 2..100),
        ) {
            let n = scores.len().min(flags.len());
            let scores = scores[..n].to_vec();
            let flags = flags[..n].to_vec();
            prop_assume!(flags.iter().any(|&f| f) && flags.iter().any(|&f| !f));
            let base = auroc(&ranked(scores.clone(), flags.clone())).unwrap();
            let exp: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
            let affine: Vec<f64> = scores.iter().map(|s| 3.0 * s + 11.0).collect();
            prop_assert_eq!(base, auroc(&ranked(exp, flags.clone())).unwrap());
            prop_assert_eq!(base, auroc(&ranked(affine, flags)).unwrap());
        }

        #[test]
        fn auroc_flip_complement_without_ties(
            seeds in proptest::collection::vec(0u64..1_000_000, 4..60),
            flags in proptest::collection::vec(any::<bool>(), 4..60),
        ) {
            let n = seeds.len().min(flags.len());
            // distinct scores: derive from unique ranks
            let mut ranks: Vec<usize> = (0..n).collect();
            ranks.sort_by_key(|&i| seeds[i]);
            let scores: Vec<f64> = {
                let mut s = vec![0.0; n];
                for (rank, &i) in ranks.iter().enumerate() {
                    s[i] = rank as f64;
                }
                s
            };
            let flags = flags[..n].to_vec();
            prop_assume!(flags.iter().any(|&f| f) && flags.iter().any(|&f| !f));
            let high = auroc(&ranked(scores.clone(), flags.clone())).unwrap();
            let low = auroc(
                &RankedScores::new(scores, flags, Orientation::LowerIsPositive).unwrap()
            ).unwrap();
            prop_assert!((high + low - 1.0).abs() < 1e-12);
        }

        #[test]
        fn prr_invariant_under_monotone_transform(
            scores in proptest::collection::vec(-5.0f64..5.0, 4..100),
            flags in proptest::collection::vec(any::<bool>(), 4..100),
        ) {
            let n = scores.len().min(flags.len());
            let scores = scores[..n].to_vec();
            let flags = flags[..n].to_vec();
            prop_assume!(flags.iter().any(|&f| f) && flags.iter().any(|&f| !f));
            let base = prr(&scores, &flags).unwrap();
            let exp: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
            prop_assert_eq!(base, prr(&exp, &flags).unwrap());
        }
    }
}
