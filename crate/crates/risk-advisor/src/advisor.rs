//! The E-SGBT ensemble and the uncertainty decomposition.
//!
//! An advisor holds M independently seeded SGBTs trained on the black-box
//! classifier's error indicator. The decomposition turns their per-point
//! probabilities into error probability (ensemble mean), total uncertainty
//! (entropy of the mean), aleatoric uncertainty (mean of the entropies) and
//! epistemic uncertainty (their difference), plus the weighted risk score.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::Dataset;
use crate::sgbt::{self, SgbtModel, SgbtParams};
use crate::{Error, Result};

const ADVISOR_FORMAT_VERSION: u32 = 1;

/// Weights of the three risk-score components; default all ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskWeights {
    pub model: f64,
    pub epistemic: f64,
    pub aleatoric: f64,
}

impl Default for RiskWeights {
    fn default() -> Self {
        RiskWeights {
            model: 1.0,
            epistemic: 1.0,
            aleatoric: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdvisorModel {
    pub members: Vec<SgbtModel>,
    pub weights: RiskWeights,
}

/// Per-point decomposition outputs, row-aligned with the scored features.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyReport {
    /// N x M member probabilities.
    pub member_probs: Vec<Vec<f64>>,
    pub error_prob: Vec<f64>,
    pub total: Vec<f64>,
    pub aleatoric: Vec<f64>,
    pub epistemic: Vec<f64>,
    pub risk_score: Vec<f64>,
}

/// Shannon entropy of a Bernoulli(p), in bits, with 0 log 0 = 0.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "probability outside [0,1]: {p}"
        )));
    }
    let term = |q: f64| if q == 0.0 { 0.0 } else { -q * q.log2() };
    Ok(term(p) + term(1.0 - p))
}

/// Trains M members with seeds `params.seed + m`, otherwise identical.
pub fn fit_advisor(
    features: &[Vec<f64>],
    targets: &[bool],
    params: &SgbtParams,
    ensemble_size: usize,
    weights: RiskWeights,
) -> Result<AdvisorModel> {
    if ensemble_size == 0 {
        return Err(Error::InvalidArgument("ensemble size must be >= 1".into()));
    }
    let members = (0..ensemble_size)
        .map(|m| {
            let member_params = SgbtParams {
                seed: params.seed.wrapping_add(m as u64),
                ..*params
            };
            sgbt::fit_sgbt(features, targets, &member_params)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AdvisorModel { members, weights })
}

/// Decomposition of an N x M member-probability matrix.
pub fn decompose_rows(member_probs: Vec<Vec<f64>>, weights: RiskWeights) -> Result<UncertaintyReport> {
    let n = member_probs.len();
    let mut error_prob = Vec::with_capacity(n);
    let mut total = Vec::with_capacity(n);
    let mut aleatoric = Vec::with_capacity(n);
    let mut epistemic = Vec::with_capacity(n);
    let mut risk_score = Vec::with_capacity(n);
    for row in &member_probs {
        if row.is_empty() {
            return Err(Error::InvalidArgument("empty member-probability row".into()));
        }
        let m = row.len() as f64;
        let mean = row.iter().sum::<f64>() / m;
        let t = binary_entropy(mean)?;
        let a = row
            .iter()
            .map(|&p| binary_entropy(p))
            .sum::<Result<f64>>()?
            / m;
        let e = (t - a).max(0.0);
        error_prob.push(mean);
        total.push(t);
        aleatoric.push(a);
        epistemic.push(e);
        risk_score.push(weights.model * mean + weights.epistemic * e + weights.aleatoric * a);
    }
    Ok(UncertaintyReport {
        member_probs,
        error_prob,
        total,
        aleatoric,
        epistemic,
        risk_score,
    })
}

/// Scores every feature row with each member and decomposes.
pub fn decompose(a: &AdvisorModel, features: &[Vec<f64>]) -> Result<UncertaintyReport> {
    let per_member: Vec<Vec<f64>> = a
        .members
        .iter()
        .map(|m| sgbt::predict_proba(m, features))
        .collect::<Result<_>>()?;
    let member_probs: Vec<Vec<f64>> = (0..features.len())
        .map(|i| per_member.iter().map(|col| col[i]).collect())
        .collect();
    decompose_rows(member_probs, a.weights)
}

/// Writes one CSV row per point: error_prob,total,aleatoric,epistemic,
/// risk_score, plus member columns when requested.
pub fn score_file(
    a: &AdvisorModel,
    d: &Dataset,
    path: impl AsRef<Path>,
    include_members: bool,
) -> Result<UncertaintyReport> {
    let report = decompose(a, &d.features)?;
    write_report(&report, path, include_members)?;
    Ok(report)
}

pub fn write_report(
    report: &UncertaintyReport,
    path: impl AsRef<Path>,
    include_members: bool,
) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut header = vec![
        "error_prob".to_string(),
        "total".to_string(),
        "aleatoric".to_string(),
        "epistemic".to_string(),
        "risk_score".to_string(),
    ];
    if include_members {
        let m = report.member_probs.first().map_or(0, Vec::len);
        header.extend((0..m).map(|j| format!("member_{j}")));
    }
    writeln!(file, "{}", header.join(","))?;
    for i in 0..report.error_prob.len() {
        let mut fields = vec![
            format!("{}", report.error_prob[i]),
            format!("{}", report.total[i]),
            format!("{}", report.aleatoric[i]),
            format!("{}", report.epistemic[i]),
            format!("{}", report.risk_score[i]),
        ];
        if include_members {
            fields.extend(report.member_probs[i].iter().map(|p| format!("{p}")));
        }
        writeln!(file, "{}", fields.join(","))?;
    }
    file.flush()?;
    Ok(())
}

pub fn read_report(path: impl AsRef<Path>) -> Result<UncertaintyReport> {
    let path_str = path.as_ref().display().to_string();
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                path: path_str.clone(),
                column: name.into(),
            })
    };
    let cols = [
        col("error_prob")?,
        col("total")?,
        col("aleatoric")?,
        col("epistemic")?,
        col("risk_score")?,
    ];
    let member_cols: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("member_"))
        .map(|(i, _)| i)
        .collect();
    let mut report = UncertaintyReport {
        member_probs: Vec::new(),
        error_prob: Vec::new(),
        total: Vec::new(),
        aleatoric: Vec::new(),
        epistemic: Vec::new(),
        risk_score: Vec::new(),
    };
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let parse = |idx: usize| -> Result<f64> {
            record
                .get(idx)
                .unwrap_or("")
                .parse()
                .map_err(|_| Error::Csv {
                    path: path_str.clone(),
                    row: i + 1,
                    column: headers[idx].clone(),
                    message: "unparseable value".into(),
                })
        };
        report.error_prob.push(parse(cols[0])?);
        report.total.push(parse(cols[1])?);
        report.aleatoric.push(parse(cols[2])?);
        report.epistemic.push(parse(cols[3])?);
        report.risk_score.push(parse(cols[4])?);
        report
            .member_probs
            .push(member_cols.iter().map(|&c| parse(c)).collect::<Result<_>>()?);
    }
    Ok(report)
}

#[derive(Serialize, Deserialize)]
struct AdvisorDocument {
    version: u32,
    weights: RiskWeights,
    members: Vec<serde_json::Value>,
}

pub fn save_advisor(a: &AdvisorModel, path: impl AsRef<Path>) -> Result<()> {
    let members = a
        .members
        .iter()
        .map(|m| Ok(serde_json::from_str(&sgbt::to_json(m)?)?))
        .collect::<Result<Vec<serde_json::Value>>>()?;
    let doc = AdvisorDocument {
        version: ADVISOR_FORMAT_VERSION,
        weights: a.weights,
        members,
    };
    std::fs::write(path, serde_json::to_string(&doc)?)?;
    Ok(())
}

pub fn load_advisor(path: impl AsRef<Path>) -> Result<AdvisorModel> {
    let doc: AdvisorDocument = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if doc.version != ADVISOR_FORMAT_VERSION {
        return Err(Error::InvalidArgument(format!(
            "unsupported advisor format version {}",
            doc.version
        )));
    }
    let members = doc
        .members
        .iter()
        .map(|v| sgbt::from_json(&v.to_string()))
        .collect::<Result<Vec<_>>>()?;
    if members.is_empty() {
        return Err(Error::InvalidArgument("advisor has no members".into()));
    }
    Ok(AdvisorModel {
        members,
        weights: doc.weights,
    })
}
