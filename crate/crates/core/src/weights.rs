//! Per-prediction weights over training examples.
//!
//! For a test object `x`, tree `t` gives training example `i` the weight
//! `b(i) / Σ_j b(j)`, where `b` are the bootstrap counts stored in the leaf
//! reached by `x`. The forest weight is the mean over trees, and the forest
//! prediction equals the weighted sum of training label rows.

use serde::Serialize;

use crate::data::LabelMatrix;
use crate::error::{Error, Result};
use crate::forest::{Forest, Prediction, TreeNode};

/// Sparse distribution over training indices. Only strictly positive
/// weights are stored, ascending by index.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    n_train: usize,
    entries: Vec<(usize, f64)>,
}

impl WeightVector {
    /// Build from `(index, weight)` pairs; zero weights are dropped.
    pub fn from_entries(n_train: usize, mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.retain(|&(_, w)| w != 0.0);
        entries.sort_unstable_by_key(|&(i, _)| i);
        if entries.windows(2).any(|p| p[0].0 == p[1].0) {
            return Err(Error::invalid("duplicate training index in weight vector"));
        }
        if let Some(&(i, _)) = entries.iter().find(|&&(i, _)| i >= n_train) {
            return Err(Error::invalid(format!("training index {i} >= {n_train}")));
        }
        if entries.iter().any(|&(_, w)| !(w > 0.0 && w.is_finite())) {
            return Err(Error::invalid("weights must be positive and finite"));
        }
        Ok(Self { n_train, entries })
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map_or(0.0, |pos| self.entries[pos].1)
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w).sum()
    }

    /// JSON payload with entries by descending weight (ties: ascending index).
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Entry {
            index: usize,
            weight: f64,
        }
        #[derive(Serialize)]
        struct Doc {
            format_version: u32,
            n_train: usize,
            entries: Vec<Entry>,
        }
        let entries = crate::explain::sorted_order(self)
            .into_iter()
            .map(|(index, weight)| Entry { index, weight })
            .collect();
        Ok(serde_json::to_string(&Doc {
            format_version: 1,
            n_train: self.n_train,
            entries,
        })?)
    }
}

/// Weights induced by a single tree: proportional to the bag counts of the
/// leaf reached by `x`.
pub fn tree_weights(tree: &TreeNode, x: &[f64], n_train: usize) -> WeightVector {
    let leaf = tree.apply(x);
    let total = leaf.total_count() as f64;
    let entries = leaf
        .bag_counts
        .iter()
        .map(|(&i, &c)| (i, f64::from(c) / total))
        .collect();
    WeightVector { n_train, entries }
}

/// Mean of the per-tree weight vectors. Contributions are summed in tree
/// order and divided by the tree count once.
pub fn forest_weights(forest: &Forest, x: &[f64]) -> WeightVector {
    assert_eq!(x.len(), forest.n_features(), "feature vector length");
    let n = forest.n_train();
    let mut acc = vec![0.0f64; n];
    let mut touched = Vec::new();
    for tree in forest.trees() {
        let leaf = tree.apply(x);
        let total = leaf.total_count() as f64;
        for (&i, &c) in &leaf.bag_counts {
            if acc[i] == 0.0 {
                touched.push(i);
            }
            acc[i] += f64::from(c) / total;
        }
    }
    touched.sort_unstable();
    let s = forest.n_trees() as f64;
    let entries = touched.into_iter().map(|i| (i, acc[i] / s)).collect();
    WeightVector { n_train: n, entries }
}

/// Weighted sum of training label rows, accumulated in index order.
pub fn predict_from_weights(weights: &WeightVector, labels: &LabelMatrix) -> Result<Prediction> {
    if weights.n_train() != labels.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: labels.n_rows(),
            found: weights.n_train(),
        });
    }
    Ok(weighted_label_sum(weights.entries.iter().copied(), labels))
}

pub(crate) fn weighted_label_sum(
    entries: impl Iterator<Item = (usize, f64)>,
    labels: &LabelMatrix,
) -> Prediction {
    let mut values = vec![0.0; labels.width()];
    for (i, w) in entries {
        for (v, &y) in values.iter_mut().zip(labels.row(i)) {
            *v += w * y;
        }
    }
    Prediction { values }
}

/// Number of training examples with non-zero weight.
pub fn effective_count(weights: &WeightVector) -> usize {
    weights.support_len()
}
