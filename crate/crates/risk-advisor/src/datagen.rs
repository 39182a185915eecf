//! Synthetic failure-scenario datasets, CSV ingestion, splitting and
//! standardization.
//!
//! All generators are pure functions of their arguments: same arguments,
//! bit-identical datasets. Noise is drawn from a separate RNG stream so the
//! noiseless base geometry of a seed is recoverable by regenerating with
//! `noise_sd = 0`.

use std::f64::consts::PI;
use std::path::Path;

use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// Feature matrix plus labels, the common currency of all modules.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// N rows of D features each.
    pub features: Vec<Vec<f64>>,
    /// Class index per row, each in `[0, class_count)`.
    pub labels: Vec<usize>,
    pub class_count: usize,
    pub feature_names: Vec<String>,
    /// Out-of-distribution flag per row, when known.
    pub is_ood: Option<Vec<bool>>,
    /// Generator seed; absent for ingested data.
    pub seed: Option<u64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }

    /// Checks the structural invariants shared by every dataset.
    pub fn validate(&self) -> Result<()> {
        if self.features.len() != self.labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} feature rows vs {} labels",
                self.features.len(),
                self.labels.len()
            )));
        }
        let width = self.feature_names.len();
        for (i, row) in self.features.iter().enumerate() {
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
        if self.class_count < 2 {
            return Err(Error::InvalidArgument(format!(
                "class_count must be >= 2, got {}",
                self.class_count
            )));
        }
        for (i, &y) in self.labels.iter().enumerate() {
            if y >= self.class_count {
                return Err(Error::InvalidArgument(format!(
                    "label {y} at row {i} outside [0, {})",
                    self.class_count
                )));
            }
        }
        if let Some(ood) = &self.is_ood {
            if ood.len() != self.labels.len() {
                return Err(Error::DimensionMismatch(format!(
                    "is_ood length {} vs {} rows",
                    ood.len(),
                    self.labels.len()
                )));
            }
        }
        Ok(())
    }

    /// New dataset holding the given rows of `self`, in order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_count: self.class_count,
            feature_names: self.feature_names.clone(),
            is_ood: self
                .is_ood
                .as_ref()
                .map(|o| indices.iter().map(|&i| o[i]).collect()),
            seed: self.seed,
        }
    }

    /// Appends the rows of `other` (duplicates allowed).
    pub fn extend_from(&mut self, other: &Dataset, indices: &[usize]) {
        for &i in indices {
            self.features.push(other.features[i].clone());
            self.labels.push(other.labels[i]);
            if let Some(ood) = self.is_ood.as_mut() {
                ood.push(other.is_ood.as_ref().map(|o| o[i]).unwrap_or(false));
            }
        }
    }
}

/// Train/test partition parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
}

/// Deterministic RNG for a `(seed, stream)` pair; distinct streams from the
/// same seed are decorrelated.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    // splitmix64-style mixing keeps streams decorrelated per (seed, stream).
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

fn check_gen_args(n: usize, noise_sd: f64) -> Result<()> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "n must be even and >= 4, got {n}"
        )));
    }
    if !(noise_sd >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise_sd must be >= 0, got {noise_sd}"
        )));
    }
    Ok(())
}

/// Two concentric circles: outer radius 1.0 (label 0), inner radius 0.5
/// (label 1), n/2 points per class, uniform angles, isotropic Gaussian noise.
pub fn gen_circles(n: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    check_gen_args(n, noise_sd)?;
    let mut base_rng = seeded_rng(seed, 0);
    let mut noise_rng = seeded_rng(seed, 1);
    let angle = Uniform::new(0.0, 2.0 * PI);
    let half = n / 2;
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let (radius, label) = if i < half { (1.0, 0) } else { (0.5, 1) };
        let t = angle.sample(&mut base_rng);
        let nx: f64 = noise_rng.sample(StandardNormal);
        let ny: f64 = noise_rng.sample(StandardNormal);
        features.push(vec![
            radius * t.cos() + noise_sd * nx,
            radius * t.sin() + noise_sd * ny,
        ]);
        labels.push(label);
    }
    Ok(Dataset {
        features,
        labels,
        class_count: 2,
        feature_names: vec!["x".into(), "y".into()],
        is_ood: None,
        seed: Some(seed),
    })
}

/// Two interleaving half circles: upper arc centered at the origin with
/// radius 1 (label 0), lower arc shifted by (+1.0, -0.5) (label 1).
pub fn gen_moons(n: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    check_gen_args(n, noise_sd)?;
    let mut base_rng = seeded_rng(seed, 0);
    let mut noise_rng = seeded_rng(seed, 1);
    let arc = Uniform::new(0.0, PI);
    let half = n / 2;
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let t = arc.sample(&mut base_rng);
        let (x, y, label) = if i < half {
            (t.cos(), t.sin(), 0)
        } else {
            (1.0 - t.cos(), 0.5 - t.sin(), 1)
        };
        let nx: f64 = noise_rng.sample(StandardNormal);
        let ny: f64 = noise_rng.sample(StandardNormal);
        features.push(vec![x + noise_sd * nx, y + noise_sd * ny]);
        labels.push(label);
    }
    Ok(Dataset {
        features,
        labels,
        class_count: 2,
        feature_names: vec!["x".into(), "y".into()],
        is_ood: None,
        seed: Some(seed),
    })
}

/// Cluster layout for [`gen_gmm_shift`]. Component B appears only at test
/// time and carries the `is_ood` flag.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GmmShiftConfig {
    pub mean_a0: [f64; 2],
    pub mean_a1: [f64; 2],
    pub mean_b: [f64; 2],
    pub sd: f64,
    /// Extra zero-mean unit-variance features shared by every cluster. They
    /// carry no class or shift signal; they make the scenario moderately
    /// high-dimensional, where nearest-neighbour distance ratios lose their
    /// discriminative power.
    pub noise_dims: usize,
}

impl Default for GmmShiftConfig {
    fn default() -> Self {
        GmmShiftConfig {
            mean_a0: [-2.0, 0.0],
            mean_a1: [2.0, 0.0],
            mean_b: [1.0, -4.0],
            sd: 1.25,
            noise_dims: 8,
        }
    }
}

/// Gaussian-mixture distribution shift. Class 0 is a mixture of clusters A0
/// and B; class 1 is cluster A1. The B component's mixture weight is zero at
/// training time, so training covers only A0/A1 (half each). Test rows mix
/// A0:A1:B at 2:1:1; B rows keep their true class-0 label and are flagged
/// `is_ood` — a classifier fit on A0/A1 alone typically misclassifies them.
pub fn gen_gmm_shift(
    n_train: usize,
    n_test: usize,
    seed: u64,
    cfg: &GmmShiftConfig,
) -> Result<(Dataset, Dataset)> {
    if n_train < 4 || n_test < 4 {
        return Err(Error::InvalidArgument(format!(
            "counts must be >= 4, got n_train={n_train}, n_test={n_test}"
        )));
    }
    let mut rng = seeded_rng(seed, 0);
    let sample = |mean: [f64; 2], rng: &mut ChaCha8Rng| {
        let nx: f64 = rng.sample(StandardNormal);
        let ny: f64 = rng.sample(StandardNormal);
        let mut p = vec![mean[0] + cfg.sd * nx, mean[1] + cfg.sd * ny];
        for _ in 0..cfg.noise_dims {
            let n: f64 = rng.sample(StandardNormal);
            p.push(n);
        }
        p
    };
    let n0 = n_train - n_train / 2;
    let mut train_features = Vec::with_capacity(n_train);
    let mut train_labels = Vec::with_capacity(n_train);
    for i in 0..n_train {
        let (mean, y) = if i < n0 {
            (cfg.mean_a0, 0)
        } else {
            (cfg.mean_a1, 1)
        };
        let p = sample(mean, &mut rng);
        train_features.push(p);
        train_labels.push(y);
    }

    // Deterministic 2:1:1 allocation; remainders go to A0 first, then A1.
    let quarter = n_test / 4;
    let n_b = quarter;
    let n_a1 = quarter;
    let n_a0 = n_test - n_a1 - n_b;
    let mut test_features = Vec::with_capacity(n_test);
    let mut test_labels = Vec::with_capacity(n_test);
    let mut test_ood = Vec::with_capacity(n_test);
    for i in 0..n_test {
        // labels follow the source component: A0 and B are class 0, A1 class 1
        let (mean, y, ood) = if i < n_a0 {
            (cfg.mean_a0, 0, false)
        } else if i < n_a0 + n_a1 {
            (cfg.mean_a1, 1, false)
        } else {
            (cfg.mean_b, 0, true)
        };
        test_features.push(sample(mean, &mut rng));
        test_labels.push(y);
        test_ood.push(ood);
    }

    let mut names = vec!["x".to_string(), "y".to_string()];
    names.extend((0..cfg.noise_dims).map(|i| format!("noise{i}")));
    let train = Dataset {
        features: train_features,
        labels: train_labels,
        class_count: 2,
        feature_names: names.clone(),
        is_ood: Some(vec![false; n_train]),
        seed: Some(seed),
    };
    let test = Dataset {
        features: test_features,
        labels: test_labels,
        class_count: 2,
        feature_names: names,
        is_ood: Some(test_ood),
        seed: Some(seed),
    };
    Ok((train, test))
}

/// Loads a dataset from CSV. Numeric columns pass through; non-numeric
/// columns are one-hot encoded in first-appearance category order; labels map
/// to dense indices by first appearance.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &str,
    ood_column: Option<&str>,
) -> Result<Dataset> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => {
                Error::InvalidArgument(format!("cannot open {path_str}: {e}"))
            }
            _ => Error::Csv {
                path: path_str.clone(),
                row: 0,
                column: String::new(),
                message: e.to_string(),
            },
        })?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Csv {
            path: path_str.clone(),
            row: 0,
            column: String::new(),
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingColumn {
            path: path_str.clone(),
            column: label_column.to_string(),
        })?;
    let ood_idx = match ood_column {
        Some(name) => Some(headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::MissingColumn {
                path: path_str.clone(),
                column: name.to_string(),
            }
        })?),
        None => None,
    };

    let mut rows: Vec<Vec<String>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv {
            path: path_str.clone(),
            row: i + 1,
            column: String::new(),
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(Error::Csv {
                path: path_str.clone(),
                row: i + 1,
                column: String::new(),
                message: format!("expected {} fields, got {}", headers.len(), record.len()),
            });
        }
        rows.push(record.iter().map(str::to_string).collect());
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset(path_str));
    }

    // Label mapping by first appearance.
    let mut classes: Vec<String> = Vec::new();
    let mut labels = Vec::with_capacity(rows.len());
    for row in &rows {
        let raw = &row[label_idx];
        let idx = match classes.iter().position(|c| c == raw) {
            Some(i) => i,
            None => {
                classes.push(raw.clone());
                classes.len() - 1
            }
        };
        labels.push(idx);
    }
    if classes.len() < 2 {
        return Err(Error::EmptyDataset(format!(
            "{path_str}: only one class present in column {label_column:?}"
        )));
    }

    let mut is_ood = None;
    if let Some(oi) = ood_idx {
        let mut flags = Vec::with_capacity(rows.len());
        for (r, row) in rows.iter().enumerate() {
            match row[oi].trim() {
                "0" => flags.push(false),
                "1" => flags.push(true),
                other => {
                    return Err(Error::Csv {
                        path: path_str.clone(),
                        row: r + 1,
                        column: headers[oi].clone(),
                        message: format!("is_ood value must be 0 or 1, got {other:?}"),
                    })
                }
            }
        }
        is_ood = Some(flags);
    }

    // Column typing: numeric if every cell parses, categorical if none does,
    // mixed content is an error naming the first offending cell.
    enum Column {
        Numeric(Vec<f64>),
        Categorical(Vec<String>),
    }
    let mut columns: Vec<(String, Column)> = Vec::new();
    for (c, name) in headers.iter().enumerate() {
        if c == label_idx || Some(c) == ood_idx {
            continue;
        }
        let parsed: Vec<Option<f64>> = rows.iter().map(|r| r[c].trim().parse().ok()).collect();
        let numeric = parsed.iter().filter(|p| p.is_some()).count();
        let column = if numeric == rows.len() {
            Column::Numeric(parsed.into_iter().map(Option::unwrap).collect())
        } else if numeric == 0 {
            Column::Categorical(rows.iter().map(|r| r[c].clone()).collect())
        } else {
            let bad = parsed.iter().position(Option::is_none).unwrap();
            return Err(Error::Csv {
                path: path_str.clone(),
                row: bad + 1,
                column: name.clone(),
                message: format!("unparseable numeric cell {:?}", rows[bad][c]),
            });
        };
        columns.push((name.clone(), column));
    }

    let mut feature_names = Vec::new();
    let mut feature_columns: Vec<Vec<f64>> = Vec::new();
    for (name, column) in columns {
        match column {
            Column::Numeric(values) => {
                feature_names.push(name);
                feature_columns.push(values);
            }
            Column::Categorical(values) => {
                let mut categories: Vec<String> = Vec::new();
                for v in &values {
                    if !categories.contains(v) {
                        categories.push(v.clone());
                    }
                }
                for cat in &categories {
                    feature_names.push(format!("{name}={cat}"));
                    feature_columns
                        .push(values.iter().map(|v| f64::from(u8::from(v == cat))).collect());
                }
            }
        }
    }

    let features: Vec<Vec<f64>> = (0..rows.len())
        .map(|r| feature_columns.iter().map(|col| col[r]).collect())
        .collect();
    let dataset = Dataset {
        features,
        labels,
        class_count: classes.len(),
        feature_names,
        is_ood,
        seed: None,
    };
    dataset.validate()?;
    Ok(dataset)
}

/// Writes a dataset as CSV with round-trip-exact float formatting.
pub fn save_csv(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    let mut header: Vec<String> = d.feature_names.clone();
    header.push("label".into());
    if d.is_ood.is_some() {
        header.push("is_ood".into());
    }
    writer.write_record(&header)?;
    for i in 0..d.len() {
        let mut record: Vec<String> = d.features[i].iter().map(|v| format!("{v}")).collect();
        record.push(d.labels[i].to_string());
        if let Some(ood) = &d.is_ood {
            record.push(u8::from(ood[i]).to_string());
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::InvalidArgument(format!("csv: {other:?}")),
        }
    }
}

/// Splits a dataset into train/test. Per-class train counts use
/// floor(fraction * n_c) with remainders assigned by largest fractional part,
/// ties by class index.
pub fn stratified_split(d: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train_fraction must be in (0,1), got {}",
            spec.train_fraction
        )));
    }
    let n = d.len();
    let mut rng = seeded_rng(spec.seed, 42);
    let mut train_idx: Vec<usize>;
    let mut test_idx: Vec<usize>;
    if spec.stratified {
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); d.class_count];
        for (i, &y) in d.labels.iter().enumerate() {
            by_class[y].push(i);
        }
        for (c, members) in by_class.iter().enumerate() {
            if !members.is_empty() && members.len() < 2 {
                return Err(Error::InvalidArgument(format!(
                    "class {c} has {} member(s); stratified split needs >= 2",
                    members.len()
                )));
            }
        }
        let total_train = (spec.train_fraction * n as f64).floor() as usize;
        let mut counts: Vec<usize> = by_class
            .iter()
            .map(|m| (spec.train_fraction * m.len() as f64).floor() as usize)
            .collect();
        let mut remainder = total_train - counts.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..d.class_count).collect();
        order.sort_by(|&a, &b| {
            let fa = spec.train_fraction * by_class[a].len() as f64 - counts[a] as f64;
            let fb = spec.train_fraction * by_class[b].len() as f64 - counts[b] as f64;
            fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
        });
        for &c in &order {
            if remainder == 0 {
                break;
            }
            if counts[c] < by_class[c].len() {
                counts[c] += 1;
                remainder -= 1;
            }
        }
        train_idx = Vec::new();
        test_idx = Vec::new();
        for (c, members) in by_class.iter().enumerate() {
            let mut shuffled = members.clone();
            shuffle(&mut shuffled, &mut rng);
            train_idx.extend_from_slice(&shuffled[..counts[c]]);
            test_idx.extend_from_slice(&shuffled[counts[c]..]);
        }
    } else {
        let mut indices: Vec<usize> = (0..n).collect();
        shuffle(&mut indices, &mut rng);
        let total_train = (spec.train_fraction * n as f64).floor() as usize;
        train_idx = indices[..total_train].to_vec();
        test_idx = indices[total_train..].to_vec();
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((d.subset(&train_idx), d.subset(&test_idx)))
}

fn shuffle(indices: &mut [usize], rng: &mut ChaCha8Rng) {
    use rand::seq::SliceRandom;
    indices.shuffle(rng);
}

/// Per-feature affine transform fitted on a training set.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    /// Fits mean/population-sd per feature. Zero-sd features are centered
    /// with scale 1.
    pub fn fit(train: &Dataset) -> Result<Standardizer> {
        if train.is_empty() {
            return Err(Error::EmptyDataset("standardize on empty train".into()));
        }
        let n = train.len() as f64;
        let width = train.feature_count();
        let mut means = vec![0.0; width];
        for row in &train.features {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut scales = vec![0.0; width];
        for row in &train.features {
            for ((s, v), m) in scales.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut scales {
            *s = (*s / n).sqrt();
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        Ok(Standardizer { means, scales })
    }

    pub fn transform(&self, d: &Dataset) -> Dataset {
        let mut out = d.clone();
        for row in &mut out.features {
            for ((v, m), s) in row.iter_mut().zip(&self.means).zip(&self.scales) {
                *v = (*v - m) / s;
            }
        }
        out
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.means)
            .zip(&self.scales)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

/// Fits on `train` only and applies the same transform to every dataset.
pub fn standardize(train: &Dataset, others: &[&Dataset]) -> Result<(Dataset, Vec<Dataset>)> {
    let standardizer = Standardizer::fit(train)?;
    let train_out = standardizer.transform(train);
    let others_out = others.iter().map(|d| standardizer.transform(d)).collect();
    Ok((train_out, others_out))
}
