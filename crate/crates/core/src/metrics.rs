//! Evaluation metrics: RMSE and Pearson correlation for regression,
//! accuracy and ROC AUC for classification.

use serde::{Deserialize, Serialize};

use crate::data::{argmax, Task};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub task: Task,
    pub n_eval: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rmse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub corr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub acc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub auc: Option<f64>,
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, found: b });
    }
    Ok(())
}

pub fn rmse(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_lengths(pred.len(), actual.len())?;
    if pred.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let sse: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)).sum();
    Ok((sse / pred.len() as f64).sqrt())
}

/// Product-moment correlation, clamped to [-1, 1].
pub fn pearson_corr(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_lengths(pred.len(), actual.len())?;
    if pred.len() < 2 {
        return Err(Error::invalid("correlation needs at least two points"));
    }
    let n = pred.len() as f64;
    let mp = pred.iter().sum::<f64>() / n;
    let ma = actual.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (p, a) in pred.iter().zip(actual) {
        let (dp, da) = (p - mp, a - ma);
        sxy += dp * da;
        sxx += dp * dp;
        syy += da * da;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn check_rows(pred: &[Vec<f64>], actual: &[Vec<f64>]) -> Result<usize> {
    check_lengths(actual.len(), pred.len())?;
    let k = actual.first().map_or(0, Vec::len);
    for row in pred.iter().chain(actual) {
        check_lengths(k, row.len())?;
    }
    Ok(k)
}

/// Fraction of rows whose predicted argmax equals the true class
/// (argmax ties go to the lowest class index).
pub fn accuracy(pred_dist: &[Vec<f64>], actual: &[Vec<f64>]) -> Result<f64> {
    check_rows(pred_dist, actual)?;
    if actual.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let hits = pred_dist
        .iter()
        .zip(actual)
        .filter(|(p, a)| argmax(p) == argmax(a))
        .count();
    Ok(hits as f64 / actual.len() as f64)
}

/// Rank-based AUC of `scores` for the positives, tied pairs counting ½.
///
/// Ranks are kept doubled so the statistic is an exact integer count of
/// (positive > negative) pairs times two, plus one per tie.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    check_lengths(scores.len(), positive.len())?;
    let n_pos = positive.iter().filter(|&&p| p).count() as u64;
    let n_neg = positive.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedAuc("both classes must be present".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut doubled_rank_sum: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks start+1..=end share the midrank (start + 1 + end) / 2
        let doubled_midrank = (start + 1 + end) as u64;
        let pos_in_group = order[start..end].iter().filter(|&&i| positive[i]).count() as u64;
        doubled_rank_sum += pos_in_group * doubled_midrank;
        start = end;
    }
    let doubled_u = doubled_rank_sum - n_pos * (n_pos + 1);
    Ok(doubled_u as f64 / (2 * n_pos * n_neg) as f64)
}

/// Binary: AUC of the class-1 column. Multiclass: unweighted mean of the
/// one-vs-rest AUCs; every class must occur in `actual`.
pub fn auc(pred_dist: &[Vec<f64>], actual: &[Vec<f64>]) -> Result<f64> {
    let k = check_rows(pred_dist, actual)?;
    if actual.len() < 2 {
        return Err(Error::UndefinedAuc("need at least two rows".into()));
    }
    if k < 2 {
        return Err(Error::UndefinedAuc("need at least two classes".into()));
    }
    let truth: Vec<usize> = actual.iter().map(|a| argmax(a)).collect();
    let one_vs_rest = |class: usize| {
        let scores: Vec<f64> = pred_dist.iter().map(|p| p[class]).collect();
        let positive: Vec<bool> = truth.iter().map(|&t| t == class).collect();
        binary_auc(&scores, &positive)
    };
    if k == 2 {
        return one_vs_rest(1);
    }
    let mut total = 0.0;
    for class in 0..k {
        total += one_vs_rest(class).map_err(|_| Error::UndefinedAuc(format!("class {class} absent from actual labels")))?;
    }
    Ok(total / k as f64)
}
