//! Datasets, label encoding, derived tasks and resampling plans.
//!
//! Classification labels are always stored one-hot so that a forest
//! prediction can be written as a weighted sum of label rows, for
//! regression and classification alike.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Learning task; also the kind of a [`LabelMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Classification,
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Task::Regression => "regression",
            Task::Classification => "classification",
        })
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regression" => Ok(Task::Regression),
            "classification" => Ok(Task::Classification),
            other => Err(Error::invalid(format!("unknown task `{other}`"))),
        }
    }
}

/// Row-major n×m label matrix.
///
/// Regression labels have a single column. Classification labels are
/// one-hot with one column per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMatrix {
    kind: Task,
    n_rows: usize,
    width: usize,
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    class_names: Vec<String>,
}

impl LabelMatrix {
    pub fn regression(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteTarget(i));
        }
        Ok(Self {
            kind: Task::Regression,
            n_rows: values.len(),
            width: 1,
            values,
            class_names: Vec::new(),
        })
    }

    /// One-hot encode class indices into `class_names.len()` columns.
    pub fn one_hot(classes: &[usize], class_names: Vec<String>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let k = class_names.len();
        if k == 0 {
            return Err(Error::invalid("classification labels need at least one class"));
        }
        let mut values = vec![0.0; classes.len() * k];
        for (row, &c) in classes.iter().enumerate() {
            if c >= k {
                return Err(Error::invalid(format!(
                    "class index {c} out of range for {k} classes"
                )));
            }
            values[row * k + c] = 1.0;
        }
        Ok(Self {
            kind: Task::Classification,
            n_rows: classes.len(),
            width: k,
            values,
            class_names,
        })
    }

    pub fn kind(&self) -> Task {
        self.kind
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// Number of columns: 1 for regression, k for classification.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.width..(i + 1) * self.width]
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Class index of row `i` (classification only).
    pub fn class_of(&self, i: usize) -> Option<usize> {
        match self.kind {
            Task::Regression => None,
            Task::Classification => Some(argmax(self.row(i))),
        }
    }

    /// The single regression column.
    pub fn targets(&self) -> Option<&[f64]> {
        match self.kind {
            Task::Regression => Some(&self.values),
            Task::Classification => None,
        }
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.width);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self {
            kind: self.kind,
            n_rows: indices.len(),
            width: self.width,
            values,
            class_names: self.class_names.clone(),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.values.len() != self.n_rows * self.width {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows * self.width,
                found: self.values.len(),
            });
        }
        match self.kind {
            Task::Regression => {
                if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFiniteTarget(i));
                }
            }
            Task::Classification => {
                if self.class_names.len() != self.width {
                    return Err(Error::invalid("class name count differs from label width"));
                }
                for i in 0..self.n_rows {
                    let row = self.row(i);
                    let ones = row.iter().filter(|&&v| v == 1.0).count();
                    let zeros = row.iter().filter(|&&v| v == 0.0).count();
                    if ones != 1 || ones + zeros != row.len() {
                        return Err(Error::invalid(format!("label row {i} is not one-hot")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Feature matrix plus labels, with stable per-example identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    n: usize,
    d: usize,
    labels: LabelMatrix,
    feature_names: Option<Vec<String>>,
    example_ids: Vec<String>,
}

impl Dataset {
    /// Build from a row-major feature buffer of `labels.n_rows()` rows.
    pub fn new(features: Vec<f64>, d: usize, labels: LabelMatrix) -> Result<Self> {
        let n = labels.n_rows();
        if n == 0 || d == 0 {
            return Err(Error::EmptyDataset);
        }
        if features.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                found: features.len(),
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("features must be finite"));
        }
        labels.validate()?;
        Ok(Self {
            features,
            n,
            d,
            labels,
            feature_names: None,
            example_ids: (0..n).map(|i| i.to_string()).collect(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: LabelMatrix) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: bad.len(),
            });
        }
        Self::new(rows.concat(), d, labels)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: names.len(),
            });
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn with_example_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: ids.len(),
            });
        }
        self.example_ids = ids;
        Ok(self)
    }

    /// Replace the labels, e.g. with a derived classification task.
    pub fn with_labels(mut self, labels: LabelMatrix) -> Result<Self> {
        if labels.n_rows() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: labels.n_rows(),
            });
        }
        labels.validate()?;
        self.labels = labels;
        Ok(self)
    }

    pub fn n_examples(&self) -> usize {
        self.n
    }

    pub fn n_features(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.d)
    }

    pub fn labels(&self) -> &LabelMatrix {
        &self.labels
    }

    pub fn task(&self) -> Task {
        self.labels.kind()
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn example_ids(&self) -> &[String] {
        &self.example_ids
    }

    /// Names used when exporting; falls back to `x0, x1, ...`.
    pub fn column_names(&self) -> Vec<String> {
        match &self.feature_names {
            Some(names) => names.clone(),
            None => (0..self.d).map(|j| format!("x{j}")).collect(),
        }
    }

    /// Rows at `indices`, keeping their example ids.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Self {
            features,
            n: indices.len(),
            d: self.d,
            labels: self.labels.select(indices),
            feature_names: self.feature_names.clone(),
            example_ids: indices.iter().map(|&i| self.example_ids[i].clone()).collect(),
        }
    }

    /// Keep the first `d` feature columns.
    pub fn truncate_features(&self, d: usize) -> Result<Self> {
        if d == 0 || d > self.d {
            return Err(Error::invalid(format!(
                "feature count {d} outside 1..={}",
                self.d
            )));
        }
        let mut features = Vec::with_capacity(self.n * d);
        for row in self.rows() {
            features.extend_from_slice(&row[..d]);
        }
        Ok(Self {
            features,
            n: self.n,
            d,
            labels: self.labels.clone(),
            feature_names: self.feature_names.as_ref().map(|f| f[..d].to_vec()),
            example_ids: self.example_ids.clone(),
        })
    }

    /// Write as CSV: feature columns followed by `target_column`.
    pub fn write_csv<W: Write>(&self, writer: W, target_column: &str) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header = self.column_names();
        header.push(target_column.to_string());
        out.write_record(&header)?;
        let mut record = Vec::with_capacity(self.d + 1);
        for i in 0..self.n {
            record.clear();
            record.extend(self.row(i).iter().map(f64::to_string));
            record.push(match self.labels.kind() {
                Task::Regression => self.labels.row(i)[0].to_string(),
                Task::Classification => {
                    self.labels.class_names()[argmax(self.labels.row(i))].clone()
                }
            });
            out.write_record(&record)?;
        }
        out.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn export_csv(&self, path: impl AsRef<Path>, target_column: &str) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file), target_column)
    }
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    match cell.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::NonNumericCell {
            row,
            column: column.to_string(),
            value: cell.to_string(),
        }),
    }
}

/// Load a dataset from a CSV file with a header row.
///
/// Every non-target column becomes a feature, in file order. For
/// classification the target cells are class names, one-hot encoded with
/// classes in lexicographic order.
pub fn load_csv(path: impl AsRef<Path>, target_column: &str, task: Task) -> Result<Dataset> {
    let path = path.as_ref();
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::MissingFile(path.to_path_buf()))
        }
        Err(e) => return Err(Error::io(path, e)),
    };
    read_csv(file, target_column, task)
}

/// [`load_csv`] over any reader.
pub fn read_csv<R: Read>(reader: R, target_column: &str, task: Task) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let target_idx = header
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| Error::MissingColumn(target_column.to_string()))?;
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != target_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut features = Vec::new();
    let mut raw_targets = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        for (j, cell) in record.iter().enumerate() {
            if j == target_idx {
                raw_targets.push(cell.trim().to_string());
            } else {
                features.push(parse_cell(cell, row, &header[j])?);
            }
        }
    }
    if raw_targets.is_empty() || feature_names.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let labels = match task {
        Task::Regression => {
            let values = raw_targets
                .iter()
                .enumerate()
                .map(|(row, cell)| parse_cell(cell, row, target_column))
                .collect::<Result<Vec<_>>>()?;
            LabelMatrix::regression(values)?
        }
        Task::Classification => {
            if let Some(row) = raw_targets.iter().position(String::is_empty) {
                return Err(Error::NonNumericCell {
                    row,
                    column: target_column.to_string(),
                    value: String::new(),
                });
            }
            let names: Vec<String> = raw_targets
                .iter()
                .cloned()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let classes: Vec<usize> = raw_targets
                .iter()
                .map(|t| names.binary_search(t).expect("class collected above"))
                .collect();
            LabelMatrix::one_hot(&classes, names)?
        }
    };
    Dataset::new(features, feature_names.len(), labels)?.with_feature_names(feature_names)
}

/// Load feature rows only, picking `feature_names` by header name.
/// Other columns (such as a target) are ignored.
pub fn load_feature_rows(path: impl AsRef<Path>, feature_names: &[String]) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::MissingFile(path.to_path_buf()))
        }
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut rdr = csv::Reader::from_reader(file);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let columns = feature_names
        .iter()
        .map(|name| {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn(name.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let values = columns
            .iter()
            .zip(feature_names)
            .map(|(&j, name)| parse_cell(record.get(j).unwrap_or(""), row, name))
            .collect::<Result<Vec<_>>>()?;
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(rows)
}

/// Two-class labels: class 1 ("at-or-above") iff the target is ≥ the mean.
pub fn binarize_by_mean(targets: &[f64]) -> Result<LabelMatrix> {
    if targets.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some(i) = targets.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteTarget(i));
    }
    let mean = targets.iter().sum::<f64>() / targets.len() as f64;
    let classes: Vec<usize> = targets.iter().map(|&v| usize::from(v >= mean)).collect();
    LabelMatrix::one_hot(&classes, vec!["below".into(), "at-or-above".into()])
}

/// Equal-width binning of `[min, max]` into `bins` classes; the maximum
/// lands in the last bin.
pub fn equal_width_bin(targets: &[f64], bins: usize) -> Result<LabelMatrix> {
    if bins < 2 {
        return Err(Error::invalid("equal-width binning needs at least 2 bins"));
    }
    if targets.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some(i) = targets.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteTarget(i));
    }
    let min = targets.iter().copied().fold(f64::INFINITY, f64::min);
    let max = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Err(Error::DegenerateTargetRange(min));
    }
    let width = (max - min) / bins as f64;
    let classes: Vec<usize> = targets
        .iter()
        .map(|&v| (((v - min) / width).floor() as usize).min(bins - 1))
        .collect();
    let digits = (bins - 1).to_string().len();
    let names = (0..bins).map(|b| format!("bin{b:0digits$}")).collect();
    LabelMatrix::one_hot(&classes, names)
}

/// A partition of `0..n` into folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n: usize,
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn n_folds(&self) -> usize {
        self.folds.len()
    }

    /// Held-out indices of fold `f`, ascending.
    pub fn test_indices(&self, f: usize) -> &[usize] {
        &self.folds[f]
    }

    /// Complement of fold `f`, ascending.
    pub fn train_indices(&self, f: usize) -> Vec<usize> {
        let mut held_out = vec![false; self.n];
        for &i in &self.folds[f] {
            held_out[i] = true;
        }
        (0..self.n).filter(|&i| !held_out[i]).collect()
    }
}

/// Seeded shuffle of `0..n` cut into `f` folds whose sizes differ by at most one.
pub fn kfold_split(n: usize, f: usize, seed: u64) -> Result<FoldPlan> {
    if f < 2 {
        return Err(Error::invalid("need at least 2 folds"));
    }
    if f > n {
        return Err(Error::invalid(format!("{f} folds requested for {n} examples")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / f, n % f);
    let mut folds = Vec::with_capacity(f);
    let mut start = 0;
    for k in 0..f {
        let len = base + usize::from(k < extra);
        let mut fold = order[start..start + len].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += len;
    }
    Ok(FoldPlan { n, folds, seed })
}

/// Nested subsamples: one seeded shuffle, then a prefix per requested
/// size, so every smaller subsample is contained in every larger one.
pub fn nested_subsample(train_indices: &[usize], sizes: &[usize], seed: u64) -> Result<Vec<Vec<usize>>> {
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("subsample sizes must be strictly ascending"));
    }
    if let Some(&max) = sizes.last() {
        if max > train_indices.len() {
            return Err(Error::invalid(format!(
                "subsample size {max} exceeds {} available training examples",
                train_indices.len()
            )));
        }
    }
    let mut shuffled = train_indices.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(sizes.iter().map(|&s| shuffled[..s].to_vec()).collect())
}
