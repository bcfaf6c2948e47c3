//! Predictions restricted to the highest-weighted training examples.
//!
//! Both procedures sort the forest weights in decreasing order, keep a
//! prefix (of fixed length `k`, or the shortest one whose mass reaches
//! `c`), renormalize it and take the weighted sum of the kept labels. The
//! kept examples are returned as an [`Explanation`] that reproduces the
//! prediction exactly.

use serde::{Deserialize, Serialize};

use crate::data::{argmax, LabelMatrix, Task};
use crate::error::{Error, Result};
use crate::forest::Prediction;
use crate::weights::{weighted_label_sum, WeightVector};

pub const EXPLANATION_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Selection {
    TopK { k: usize },
    Cumulative { c: f64 },
}

impl Selection {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Selection::TopK { k: 0 } => Err(Error::invalid("k must be at least 1")),
            Selection::Cumulative { c } if !(c > 0.0 && c <= 1.0) => {
                Err(Error::invalid(format!("cumulative weight {c} outside (0, 1]")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationEntry {
    pub training_index: usize,
    pub raw_weight: f64,
    pub normalized_weight: f64,
    pub label: Vec<f64>,
}

/// The training examples behind one prediction, by decreasing weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub entries: Vec<ExplanationEntry>,
    /// Total raw weight of the selected examples.
    pub achieved_weight: f64,
    pub selection: Selection,
}

impl Explanation {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Prediction implied by the entries alone. This is the exact code path
    /// used to produce the prediction returned alongside the explanation.
    pub fn recompute_prediction(&self) -> Prediction {
        let mut refs: Vec<&ExplanationEntry> = self.entries.iter().collect();
        refs.sort_unstable_by_key(|e| e.training_index);
        let width = refs.first().map_or(0, |e| e.label.len());
        let mut values = vec![0.0; width];
        for e in refs {
            for (v, &y) in values.iter_mut().zip(&e.label) {
                *v += e.normalized_weight * y;
            }
        }
        Prediction { values }
    }

    /// JSON-ready payload; `example_ids` are indexed by training index.
    pub fn payload(
        &self,
        prediction: &Prediction,
        labels: &LabelMatrix,
        example_ids: &[String],
    ) -> ExplanationPayload {
        let label_value = |row: &[f64]| match labels.kind() {
            Task::Regression => LabelValue::Value(row[0]),
            Task::Classification => LabelValue::Class(labels.class_names()[argmax(row)].clone()),
        };
        ExplanationPayload {
            format_version: EXPLANATION_FORMAT_VERSION,
            selection: self.selection,
            achieved_weight: self.achieved_weight,
            prediction: prediction.values.clone(),
            predicted: label_value(&prediction.values),
            entries: self
                .entries
                .iter()
                .map(|e| PayloadEntry {
                    index: e.training_index,
                    example_id: example_ids
                        .get(e.training_index)
                        .cloned()
                        .unwrap_or_else(|| e.training_index.to_string()),
                    raw_weight: e.raw_weight,
                    normalized_weight: e.normalized_weight,
                    label: label_value(&e.label),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelValue {
    Value(f64),
    Class(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayloadEntry {
    pub index: usize,
    pub example_id: String,
    pub raw_weight: f64,
    pub normalized_weight: f64,
    pub label: LabelValue,
}

/// Serialized form of an [`Explanation`] plus the prediction it backs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationPayload {
    pub format_version: u32,
    pub selection: Selection,
    pub achieved_weight: f64,
    pub prediction: Vec<f64>,
    /// Regression value, or the most probable class name.
    pub predicted: LabelValue,
    pub entries: Vec<PayloadEntry>,
}

/// `(index, weight)` pairs by descending weight, ties by ascending index.
pub(crate) fn sorted_order(weights: &WeightVector) -> Vec<(usize, f64)> {
    let mut order = weights.entries().to_vec();
    order.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    order
}

/// Support indices by descending weight, ties by ascending index.
pub fn sorted_index(weights: &WeightVector) -> Result<Vec<usize>> {
    if weights.is_empty() {
        return Err(Error::EmptySupport);
    }
    Ok(sorted_order(weights).into_iter().map(|(i, _)| i).collect())
}

/// Keep the `k` highest-weighted examples (fewer if the support is smaller).
pub fn predict_top_k(weights: &WeightVector, labels: &LabelMatrix, k: usize) -> Result<(Prediction, Explanation)> {
    select(weights, labels, Selection::TopK { k })
}

/// Keep the shortest weight-sorted prefix whose cumulative weight is ≥ `c`.
pub fn predict_cumulative(weights: &WeightVector, labels: &LabelMatrix, c: f64) -> Result<(Prediction, Explanation)> {
    select(weights, labels, Selection::Cumulative { c })
}

/// Run either selection procedure.
///
/// When the whole support is kept, the selected mass is the complete
/// weight vector (1 by construction), so weights are not rescaled and
/// `achieved_weight` is exactly 1; the prediction then coincides with
/// [`crate::weights::predict_from_weights`].
pub fn select(weights: &WeightVector, labels: &LabelMatrix, selection: Selection) -> Result<(Prediction, Explanation)> {
    selection.validate()?;
    if weights.n_train() != labels.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: labels.n_rows(),
            found: weights.n_train(),
        });
    }
    let order = sorted_order(weights);
    if order.is_empty() {
        return Err(Error::EmptySupport);
    }

    let (kept, prefix_mass) = match selection {
        Selection::TopK { k } => {
            let kept = k.min(order.len());
            (kept, order[..kept].iter().map(|&(_, w)| w).sum::<f64>())
        }
        Selection::Cumulative { c } => {
            let mut z = 0.0;
            let mut kept = order.len();
            for (j, &(_, w)) in order.iter().enumerate() {
                z += w;
                if z >= c {
                    kept = j + 1;
                    break;
                }
            }
            (kept, z)
        }
    };
    let whole = kept == order.len();
    let (norm, achieved_weight) = if whole {
        (1.0, 1.0)
    } else {
        (prefix_mass, prefix_mass.min(1.0))
    };

    let entries = order[..kept]
        .iter()
        .map(|&(i, w)| ExplanationEntry {
            training_index: i,
            raw_weight: w,
            normalized_weight: w / norm,
            label: labels.row(i).to_vec(),
        })
        .collect();
    let explanation = Explanation {
        entries,
        achieved_weight,
        selection,
    };
    let prediction = explanation.recompute_prediction();
    debug_assert!(!whole || prediction == weighted_label_sum(weights.entries().iter().copied(), labels));
    Ok((prediction, explanation))
}
