//! Cross-validated sweeps measuring how many training examples back each
//! prediction, alongside the usual task metrics.
//!
//! Every sweep value reuses the same folds, subsamples and forest seeds, so
//! rows of a report differ only in the swept quantity.

use std::borrow::Cow;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{binarize_by_mean, equal_width_bin, kfold_split, load_csv, nested_subsample, Dataset, Task};
use crate::datasets;
use crate::error::{Error, Result};
use crate::explain::{select, Selection};
use crate::forest::{fit, HyperParams, MaxFeatures};
use crate::metrics::{accuracy, auc, pearson_corr, rmse, MetricReport};
use crate::weights::{forest_weights, predict_from_weights};

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Environment variable holding the number of worker threads.
pub const WORKERS_ENV: &str = "RF_EXPLAIN_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        target_column: String,
        task: Task,
    },
    SyntheticRegression {
        n: usize,
        d: usize,
        noise: f64,
        seed: u64,
    },
    Digits,
}

impl DatasetSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSource::Csv {
                path,
                target_column,
                task,
            } => load_csv(path, target_column, *task),
            DatasetSource::SyntheticRegression { n, d, noise, seed } => {
                datasets::synthetic_regression(*n, *d, *noise, *seed)
            }
            DatasetSource::Digits => Ok(datasets::digits()),
        }
    }
}

/// Turns a regression target into a classification task, using statistics
/// of the whole dataset (before any fold split).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Derivation {
    #[default]
    None,
    BinarizeByMean,
    EqualWidthBin {
        bins: usize,
    },
}

impl Derivation {
    pub fn apply(self, dataset: Dataset) -> Result<Dataset> {
        if self == Derivation::None {
            return Ok(dataset);
        }
        let targets = dataset
            .labels()
            .targets()
            .ok_or_else(|| Error::TaskMismatch("derived tasks need a regression target".into()))?
            .to_vec();
        let labels = match self {
            Derivation::None => unreachable!(),
            Derivation::BinarizeByMean => binarize_by_mean(&targets)?,
            Derivation::EqualWidthBin { bins } => equal_width_bin(&targets, bins)?,
        };
        dataset.with_labels(labels)
    }
}

/// The single swept quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    TrainSizes(Vec<usize>),
    FeatureCounts(Vec<usize>),
    TreeCounts(Vec<usize>),
    MinLeafSizes(Vec<usize>),
    TopK(Vec<usize>),
    CumulativeC(Vec<f64>),
}

impl Sweep {
    pub fn axis_name(&self) -> &'static str {
        match self {
            Sweep::TrainSizes(_) => "examples",
            Sweep::FeatureCounts(_) => "features",
            Sweep::TreeCounts(_) => "trees",
            Sweep::MinLeafSizes(_) => "min_leaf",
            Sweep::TopK(_) => "k",
            Sweep::CumulativeC(_) => "c",
        }
    }

    fn values(&self) -> Vec<SweepValue> {
        match self {
            Sweep::TrainSizes(v)
            | Sweep::FeatureCounts(v)
            | Sweep::TreeCounts(v)
            | Sweep::MinLeafSizes(v)
            | Sweep::TopK(v) => v.iter().map(|&x| SweepValue::Count(x)).collect(),
            Sweep::CumulativeC(v) => v.iter().map(|&x| SweepValue::Weight(x)).collect(),
        }
    }

    /// Sweeps over a selection procedure share one forest per fold.
    fn is_selection(&self) -> bool {
        matches!(self, Sweep::TopK(_) | Sweep::CumulativeC(_))
    }

    fn validate(&self) -> Result<()> {
        let ascending = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        let values: Vec<f64> = self.values().iter().map(SweepValue::as_f64).collect();
        if values.is_empty() {
            return Err(Error::invalid("sweep has no values"));
        }
        if values.iter().any(|&v| v.is_nan() || v <= 0.0) || !ascending(&values) {
            return Err(Error::invalid(format!(
                "{} sweep values must be positive and strictly ascending",
                self.axis_name()
            )));
        }
        if let Sweep::CumulativeC(c) = self {
            if c.iter().any(|&c| c > 1.0) {
                return Err(Error::invalid("cumulative weights must lie in (0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Count(usize),
    Weight(f64),
}

impl SweepValue {
    fn as_f64(&self) -> f64 {
        match *self {
            SweepValue::Count(v) => v as f64,
            SweepValue::Weight(v) => v,
        }
    }
}

impl std::fmt::Display for SweepValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepValue::Count(v) => write!(f, "{v}"),
            SweepValue::Weight(v) => write!(f, "{v}"),
        }
    }
}

fn default_folds() -> usize {
    10
}

fn default_trees() -> usize {
    100
}

fn default_min_leaf() -> usize {
    1
}

/// Forest settings shared by every cell of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseParams {
    #[serde(default = "default_trees")]
    pub n_trees: usize,
    #[serde(default = "default_min_leaf")]
    pub min_samples_leaf: usize,
    /// Defaults to all features for regression and sqrt for classification.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_features: Option<MaxFeatures>,
}

impl Default for BaseParams {
    fn default() -> Self {
        Self {
            n_trees: default_trees(),
            min_samples_leaf: default_min_leaf(),
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    #[serde(default)]
    pub derivation: Derivation,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
    pub sweep: Sweep,
    #[serde(default)]
    pub params: BaseParams,
}

impl ExperimentConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(json)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
            _ => Error::io(path, e),
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::invalid("need at least 2 folds"));
        }
        if let Derivation::EqualWidthBin { bins } = self.derivation {
            if bins < 2 {
                return Err(Error::invalid("equal-width binning needs at least 2 bins"));
            }
        }
        self.sweep.validate()
    }

    fn hyper_params(&self, task: Task, seed: u64) -> HyperParams {
        HyperParams {
            n_trees: self.params.n_trees,
            min_samples_leaf: self.params.min_samples_leaf,
            max_features: self.params.max_features.unwrap_or(MaxFeatures::default_for(task)),
            seed,
            task,
        }
    }
}

/// Measurements on one held-out fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    /// Mean number of training examples with non-zero weight per prediction.
    pub effective_count: f64,
    /// Mean selected weight (selection sweeps only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cumulative_weight: Option<f64>,
    pub metrics: MetricReport,
}

/// Fold-averaged results for one sweep value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub value: SweepValue,
    pub effective_count: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cumulative_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auc: Option<f64>,
    pub folds: Vec<FoldResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub format_version: u32,
    pub config: ExperimentConfig,
    pub task: Task,
    pub axis: String,
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn csv_header(&self) -> Vec<&'static str> {
        let mut header = vec![self.config.sweep.axis_name(), "N"];
        if self.config.sweep.is_selection() {
            header.push("W");
        }
        match self.task {
            Task::Regression => header.extend(["RMSE", "Corr"]),
            Task::Classification => header.extend(["Acc", "AUC"]),
        }
        header
    }

    /// Table with one line per sweep value; numbers rounded to 3 decimals.
    pub fn to_csv(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.3}"));
        let mut out = self.csv_header().join(",");
        out.push('\n');
        for row in &self.rows {
            let mut cells = vec![row.value.to_string(), fmt(Some(row.effective_count))];
            if self.config.sweep.is_selection() {
                cells.push(fmt(row.cumulative_weight));
            }
            match self.task {
                Task::Regression => cells.extend([fmt(row.rmse), fmt(row.corr)]),
                Task::Classification => cells.extend([fmt(row.acc), fmt(row.auc)]),
            }
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    /// Write `report.json` and `table.csv` into `dir` (created if needed).
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json_path = dir.join("report.json");
        std::fs::write(&json_path, self.to_json()?).map_err(|e| Error::io(&json_path, e))?;
        let csv_path = dir.join("table.csv");
        std::fs::write(&csv_path, self.to_csv()).map_err(|e| Error::io(&csv_path, e))?;
        Ok(())
    }
}

/// Keep the first `d` feature columns.
pub fn feature_truncate(dataset: &Dataset, d: usize) -> Result<Dataset> {
    dataset.truncate_features(d)
}

/// Forest seed used for `fold`; identical for every sweep value.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed ^ (fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn subsample_seed(seed: u64, fold: usize) -> u64 {
    fold_seed(seed, fold).rotate_left(17) ^ 0xD1B5_4A32_D192_ED03
}

/// Run the experiment with the worker count from [`WORKERS_ENV`] if set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let workers = match std::env::var(WORKERS_ENV) {
        Ok(v) => Some(
            v.parse::<usize>()
                .map_err(|_| Error::invalid(format!("{WORKERS_ENV}={v} is not a count")))?,
        ),
        Err(_) => None,
    };
    run_experiment_with_workers(config, workers)
}

pub fn run_experiment_with_workers(config: &ExperimentConfig, workers: Option<usize>) -> Result<ExperimentReport> {
    match workers {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid(e.to_string()))?;
            pool.install(|| run(config))
        }
        _ => run(config),
    }
}

struct Prepared<'a> {
    dataset: Cow<'a, Dataset>,
    train: Vec<usize>,
    test: Vec<usize>,
}

fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let dataset = config.derivation.apply(config.dataset.load()?)?;
    let task = dataset.task();
    let plan = kfold_split(dataset.n_examples(), config.folds, config.seed)?;
    let values = config.sweep.values();

    let results: Vec<Vec<FoldResult>> = if config.sweep.is_selection() {
        let per_fold: Vec<Vec<FoldResult>> = (0..plan.n_folds())
            .into_par_iter()
            .map(|fold| {
                let cell = Prepared {
                    dataset: Cow::Borrowed(&dataset),
                    train: plan.train_indices(fold),
                    test: plan.test_indices(fold).to_vec(),
                };
                let params = config.hyper_params(task, fold_seed(config.seed, fold));
                let selections = values
                    .iter()
                    .map(|v| match *v {
                        SweepValue::Count(k) => Some(Selection::TopK { k }),
                        SweepValue::Weight(c) => Some(Selection::Cumulative { c }),
                    })
                    .collect::<Vec<_>>();
                evaluate(&cell, &params, &selections, fold)
            })
            .collect::<Result<_>>()?;
        // transpose fold-major into value-major
        (0..values.len())
            .map(|v| per_fold.iter().map(|f| f[v].clone()).collect())
            .collect()
    } else {
        let subsamples: Vec<Option<Vec<Vec<usize>>>> = (0..plan.n_folds())
            .map(|fold| match &config.sweep {
                Sweep::TrainSizes(sizes) => {
                    nested_subsample(&plan.train_indices(fold), sizes, subsample_seed(config.seed, fold)).map(Some)
                }
                _ => Ok(None),
            })
            .collect::<Result<_>>()?;
        let cells: Vec<(usize, usize)> = (0..values.len())
            .flat_map(|v| (0..plan.n_folds()).map(move |f| (v, f)))
            .collect();
        let flat: Vec<FoldResult> = cells
            .par_iter()
            .map(|&(v, fold)| {
                let mut params = config.hyper_params(task, fold_seed(config.seed, fold));
                let mut cell = Prepared {
                    dataset: Cow::Borrowed(&dataset),
                    train: plan.train_indices(fold),
                    test: plan.test_indices(fold).to_vec(),
                };
                let value = match values[v] {
                    SweepValue::Count(x) => x,
                    SweepValue::Weight(_) => unreachable!("only selection sweeps carry weights"),
                };
                match &config.sweep {
                    Sweep::TrainSizes(_) => {
                        cell.train = subsamples[fold].as_ref().expect("computed above")[v].clone();
                    }
                    Sweep::FeatureCounts(_) => cell.dataset = Cow::Owned(feature_truncate(&dataset, value)?),
                    Sweep::TreeCounts(_) => params.n_trees = value,
                    Sweep::MinLeafSizes(_) => params.min_samples_leaf = value,
                    Sweep::TopK(_) | Sweep::CumulativeC(_) => unreachable!(),
                }
                let mut out = evaluate(&cell, &params, &[None], fold)?;
                Ok(out.remove(0))
            })
            .collect::<Result<_>>()
            .map_err(|e: Error| e.context(format!("{} sweep", config.sweep.axis_name())))?;
        flat.chunks(plan.n_folds()).map(<[FoldResult]>::to_vec).collect()
    };

    let rows = values
        .iter()
        .zip(results)
        .map(|(&value, folds)| aggregate(value, folds))
        .collect();
    Ok(ExperimentReport {
        format_version: REPORT_FORMAT_VERSION,
        config: config.clone(),
        task,
        axis: config.sweep.axis_name().to_string(),
        rows,
    })
}

/// Fit on the training rows and score every test row, once per selection
/// (`None` meaning the full weight vector).
fn evaluate(cell: &Prepared, params: &HyperParams, selections: &[Option<Selection>], fold: usize) -> Result<Vec<FoldResult>> {
    let train = cell.dataset.subset(&cell.train);
    let forest = fit(&train, params).map_err(|e| e.context(format!("fold {fold}")))?;
    let weights: Vec<_> = cell
        .test
        .iter()
        .map(|&i| forest_weights(&forest, cell.dataset.row(i)))
        .collect();
    let actual: Vec<Vec<f64>> = cell.test.iter().map(|&i| cell.dataset.labels().row(i).to_vec()).collect();

    selections
        .iter()
        .map(|selection| {
            let mut predictions = Vec::with_capacity(weights.len());
            let mut support = 0usize;
            let mut mass = 0.0;
            for w in &weights {
                match selection {
                    None => {
                        predictions.push(predict_from_weights(w, train.labels())?.values);
                        support += w.support_len();
                    }
                    Some(sel) => {
                        let (pred, expl) = select(w, train.labels(), *sel)?;
                        predictions.push(pred.values);
                        support += expl.len();
                        mass += expl.achieved_weight;
                    }
                }
            }
            let n_test = weights.len() as f64;
            Ok(FoldResult {
                fold,
                n_train: train.n_examples(),
                effective_count: support as f64 / n_test,
                cumulative_weight: selection.map(|_| mass / n_test),
                metrics: score(train.task(), &predictions, &actual),
            })
        })
        .collect()
}

/// Task metrics; a metric that is undefined on this fold (constant
/// predictions, a class missing from the fold) is left empty.
pub fn score(task: Task, predictions: &[Vec<f64>], actual: &[Vec<f64>]) -> MetricReport {
    let mut report = MetricReport {
        task,
        n_eval: actual.len(),
        rmse: None,
        corr: None,
        acc: None,
        auc: None,
    };
    match task {
        Task::Regression => {
            let p: Vec<f64> = predictions.iter().map(|v| v[0]).collect();
            let a: Vec<f64> = actual.iter().map(|v| v[0]).collect();
            report.rmse = rmse(&p, &a).ok();
            report.corr = pearson_corr(&p, &a).ok();
        }
        Task::Classification => {
            report.acc = accuracy(predictions, actual).ok();
            report.auc = auc(predictions, actual).ok();
        }
    }
    report
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v?;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

fn aggregate(value: SweepValue, folds: Vec<FoldResult>) -> ReportRow {
    ReportRow {
        value,
        effective_count: mean(folds.iter().map(|f| Some(f.effective_count))).unwrap_or(0.0),
        cumulative_weight: mean(folds.iter().map(|f| f.cumulative_weight)),
        rmse: mean(folds.iter().map(|f| f.metrics.rmse)),
        corr: mean(folds.iter().map(|f| f.metrics.corr)),
        acc: mean(folds.iter().map(|f| f.metrics.acc)),
        auc: mean(folds.iter().map(|f| f.metrics.auc)),
        folds,
    }
}
