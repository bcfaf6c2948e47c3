//! A fitted forest packaged with the training labels it needs to explain
//! its predictions.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, LabelMatrix, Task};
use crate::error::{Error, Result};
use crate::explain::{select, Explanation, ExplanationPayload, Selection};
use crate::forest::{fit, Forest, HyperParams, Prediction};
use crate::weights::{forest_weights, predict_from_weights, WeightVector};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    format_version: u32,
    forest: Forest,
    labels: LabelMatrix,
    example_ids: Vec<String>,
    feature_names: Vec<String>,
}

impl TrainedModel {
    pub fn fit(dataset: &Dataset, params: &HyperParams) -> Result<Self> {
        let forest = fit(dataset, params)?;
        Ok(Self {
            format_version: MODEL_FORMAT_VERSION,
            forest,
            labels: dataset.labels().clone(),
            example_ids: dataset.example_ids().to_vec(),
            feature_names: dataset.column_names(),
        })
    }

    pub fn forest(&self) -> &Forest {
        &self.forest
    }

    pub fn labels(&self) -> &LabelMatrix {
        &self.labels
    }

    pub fn example_ids(&self) -> &[String] {
        &self.example_ids
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn task(&self) -> Task {
        self.forest.task()
    }

    fn check_row(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.forest.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.forest.n_features(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn weights(&self, x: &[f64]) -> Result<WeightVector> {
        self.check_row(x)?;
        Ok(forest_weights(&self.forest, x))
    }

    /// Full-forest prediction, or a restricted one when `selection` is given.
    pub fn predict(&self, x: &[f64], selection: Option<Selection>) -> Result<(Prediction, Option<Explanation>)> {
        let weights = self.weights(x)?;
        match selection {
            None => Ok((predict_from_weights(&weights, &self.labels)?, None)),
            Some(sel) => {
                let (pred, expl) = select(&weights, &self.labels, sel)?;
                Ok((pred, Some(expl)))
            }
        }
    }

    /// Explanation payload for `x`; without a selection the whole support is used.
    pub fn explain(&self, x: &[f64], selection: Option<Selection>) -> Result<ExplanationPayload> {
        let weights = self.weights(x)?;
        let sel = selection.unwrap_or(Selection::Cumulative { c: 1.0 });
        let (pred, expl) = select(&weights, &self.labels, sel)?;
        Ok(expl.payload(&pred, &self.labels, &self.example_ids))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(json);
        de.disable_recursion_limit();
        let model = Self::deserialize(&mut de)?;
        de.end()?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                expected: MODEL_FORMAT_VERSION,
                found: model.format_version,
            });
        }
        model.forest.check()?;
        let forest = &model.forest;
        if forest.n_train() != model.labels.n_rows() || model.example_ids.len() != model.labels.n_rows() {
            return Err(Error::invalid("model labels do not match the forest's training set"));
        }
        if model.feature_names.len() != forest.n_features() {
            return Err(Error::invalid("model feature names do not match the forest"));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
            _ => Error::io(path, e),
        })?;
        Self::from_json(&text)
    }
}
