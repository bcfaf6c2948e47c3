//! Bootstrap-aggregated CART trees whose leaves remember which training
//! examples (and how many bootstrap copies of each) ended up in them.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{argmax, Dataset, LabelMatrix, Task};
use crate::error::{Error, Result};

/// Version tag written into serialized forests.
pub const FOREST_FORMAT_VERSION: u32 = 1;

/// Number of features examined at each split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Fraction(f64),
}

impl MaxFeatures {
    pub fn default_for(task: Task) -> Self {
        match task {
            Task::Regression => MaxFeatures::All,
            Task::Classification => MaxFeatures::Sqrt,
        }
    }

    pub fn resolve(self, n_features: usize) -> usize {
        let k = match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => (n_features as f64).sqrt() as usize,
            MaxFeatures::Fraction(q) => (q * n_features as f64) as usize,
        };
        k.clamp(1, n_features.max(1))
    }
}

impl std::str::FromStr for MaxFeatures {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(MaxFeatures::All),
            "sqrt" => Ok(MaxFeatures::Sqrt),
            other => other
                .parse::<f64>()
                .map(MaxFeatures::Fraction)
                .map_err(|_| Error::invalid(format!("max_features `{other}`: expected all, sqrt or a fraction"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub n_trees: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub seed: u64,
    pub task: Task,
}

impl HyperParams {
    /// 100 trees, leaves of at least one example, task-specific feature sampling.
    pub fn new(task: Task) -> Self {
        Self {
            n_trees: 100,
            min_samples_leaf: 1,
            max_features: MaxFeatures::default_for(task),
            seed: 0,
            task,
        }
    }

    pub fn n_trees(mut self, n: usize) -> Self {
        self.n_trees = n;
        self
    }

    pub fn min_samples_leaf(mut self, n: usize) -> Self {
        self.min_samples_leaf = n;
        self
    }

    pub fn max_features(mut self, m: MaxFeatures) -> Self {
        self.max_features = m;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::invalid("n_trees must be at least 1"));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::invalid("min_samples_leaf must be at least 1"));
        }
        if let MaxFeatures::Fraction(q) = self.max_features {
            if !(q > 0.0 && q <= 1.0) {
                return Err(Error::invalid(format!("max_features fraction {q} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

/// Terminal node: bootstrap multiplicities of its members plus the cached output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    /// training index -> number of bootstrap copies that reached this leaf
    pub bag_counts: BTreeMap<usize, u32>,
    pub prediction: Vec<f64>,
}

impl Leaf {
    /// Leaf whose prediction is the count-weighted mean of its members' label rows.
    pub fn from_counts(bag_counts: BTreeMap<usize, u32>, labels: &LabelMatrix) -> Self {
        let prediction = weighted_label_mean(bag_counts.iter().map(|(&i, &c)| (i, c)), labels);
        Self {
            bag_counts,
            prediction,
        }
    }

    pub fn total_count(&self) -> u64 {
        self.bag_counts.values().map(|&c| u64::from(c)).sum()
    }
}

fn weighted_label_mean(members: impl Iterator<Item = (usize, u32)>, labels: &LabelMatrix) -> Vec<f64> {
    let mut sum = vec![0.0; labels.width()];
    let mut total = 0.0;
    for (i, c) in members {
        let w = f64::from(c);
        total += w;
        for (s, &y) in sum.iter_mut().zip(labels.row(i)) {
            *s += w * y;
        }
    }
    sum.iter_mut().for_each(|s| *s /= total);
    sum
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    /// `x[feature] < threshold` goes left, everything else right.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf(Leaf),
}

impl TreeNode {
    pub fn split(feature: usize, threshold: f64, left: TreeNode, right: TreeNode) -> Self {
        TreeNode::Split {
            feature,
            threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// The leaf `x` is routed to.
    pub fn apply(&self, x: &[f64]) -> &Leaf {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf(leaf) => return leaf,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] < *threshold { left } else { right };
                }
            }
        }
    }

    pub fn leaves(&self) -> Vec<&Leaf> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            match node {
                TreeNode::Leaf(leaf) => out.push(leaf),
                TreeNode::Split { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        out
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf(_) => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

/// Output of a tree or forest: one value for regression, a class
/// distribution for classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub values: Vec<f64>,
}

impl Prediction {
    /// Regression output (first component).
    pub fn value(&self) -> f64 {
        self.values[0]
    }

    /// Most probable class, lowest index on ties.
    pub fn class(&self) -> usize {
        argmax(&self.values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    trees: Vec<TreeNode>,
    n_train: usize,
    n_features: usize,
    params: HyperParams,
    label_kind: Task,
    label_width: usize,
}

#[derive(Serialize)]
struct ForestDocRef<'a> {
    format_version: u32,
    forest: &'a Forest,
}

#[derive(Deserialize)]
struct ForestDoc {
    format_version: u32,
    forest: Forest,
}

impl Forest {
    /// Assemble a forest from existing trees, e.g. hand-built ones.
    pub fn from_trees(
        trees: Vec<TreeNode>,
        n_train: usize,
        n_features: usize,
        labels: &LabelMatrix,
    ) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::invalid("forest needs at least one tree"));
        }
        let mut params = HyperParams::new(labels.kind()).n_trees(trees.len());
        params.max_features = MaxFeatures::All;
        let forest = Self {
            trees,
            n_train,
            n_features,
            params,
            label_kind: labels.kind(),
            label_width: labels.width(),
        };
        forest.check()?;
        Ok(forest)
    }

    pub(crate) fn check(&self) -> Result<()> {
        if self.trees.len() != self.params.n_trees {
            return Err(Error::invalid("tree count differs from params.n_trees"));
        }
        for tree in &self.trees {
            for leaf in tree.leaves() {
                if leaf.bag_counts.is_empty() {
                    return Err(Error::invalid("leaf without members"));
                }
                if leaf.bag_counts.keys().any(|&i| i >= self.n_train) {
                    return Err(Error::invalid("leaf member index out of range"));
                }
                if leaf.prediction.len() != self.label_width {
                    return Err(Error::invalid("leaf prediction width mismatch"));
                }
            }
        }
        Ok(())
    }

    pub fn trees(&self) -> &[TreeNode] {
        &self.trees
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn params(&self) -> &HyperParams {
        &self.params
    }

    pub fn task(&self) -> Task {
        self.label_kind
    }

    pub fn label_width(&self) -> usize {
        self.label_width
    }

    /// The sub-forest made of the first `s` trees.
    pub fn truncated(&self, s: usize) -> Result<Self> {
        if s == 0 || s > self.trees.len() {
            return Err(Error::invalid(format!("cannot keep {s} of {} trees", self.trees.len())));
        }
        let mut out = self.clone();
        out.trees.truncate(s);
        out.params.n_trees = s;
        Ok(out)
    }

    /// Average of the leaf predictions reached by `x`.
    pub fn predict(&self, x: &[f64]) -> Prediction {
        assert_eq!(x.len(), self.n_features, "feature vector length");
        let mut values = vec![0.0; self.label_width];
        for tree in &self.trees {
            for (v, p) in values.iter_mut().zip(&tree.apply(x).prediction) {
                *v += p;
            }
        }
        let s = self.trees.len() as f64;
        values.iter_mut().for_each(|v| *v /= s);
        Prediction { values }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ForestDocRef {
            format_version: FOREST_FORMAT_VERSION,
            forest: self,
        })?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(json);
        de.disable_recursion_limit();
        let doc = ForestDoc::deserialize(&mut de)?;
        de.end()?;
        if doc.format_version != FOREST_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                expected: FOREST_FORMAT_VERSION,
                found: doc.format_version,
            });
        }
        doc.forest.check()?;
        Ok(doc.forest)
    }
}

/// Route `x` through `tree`.
pub fn tree_apply<'a>(tree: &'a TreeNode, x: &[f64]) -> &'a Leaf {
    tree.apply(x)
}

/// Standard forest prediction: the mean over trees of the reached leaf outputs.
pub fn predict_standard(forest: &Forest, x: &[f64]) -> Prediction {
    forest.predict(x)
}

/// Grow a forest. Trees are built in parallel; tree `t` uses its own
/// generator seeded with `params.seed + t`, so the result only depends on
/// the inputs.
pub fn fit(dataset: &Dataset, params: &HyperParams) -> Result<Forest> {
    params.validate()?;
    if params.task != dataset.task() {
        return Err(Error::TaskMismatch(format!(
            "params request {} but labels are {}",
            params.task,
            dataset.task()
        )));
    }
    let n = dataset.n_examples();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let centered = CenteredLabels::new(dataset.labels());
    let builder = TreeBuilder {
        dataset,
        labels: &centered,
        min_leaf: params.min_samples_leaf,
        max_features: params.max_features.resolve(dataset.n_features()),
    };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| builder.build(params.seed.wrapping_add(t as u64)))
        .collect();
    Ok(Forest {
        trees,
        n_train: n,
        n_features: dataset.n_features(),
        params: params.clone(),
        label_kind: dataset.task(),
        label_width: dataset.labels().width(),
    })
}

/// Labels shifted by their column means; the split proxy below is
/// invariant to the shift but loses less precision with it.
struct CenteredLabels<'a> {
    raw: &'a LabelMatrix,
    values: Vec<f64>,
    width: usize,
}

impl<'a> CenteredLabels<'a> {
    fn new(raw: &'a LabelMatrix) -> Self {
        let (n, m) = (raw.n_rows(), raw.width());
        let mut mean = vec![0.0; m];
        for i in 0..n {
            for (s, &y) in mean.iter_mut().zip(raw.row(i)) {
                *s += y;
            }
        }
        mean.iter_mut().for_each(|s| *s /= n as f64);
        let mut values = Vec::with_capacity(n * m);
        for i in 0..n {
            values.extend(raw.row(i).iter().zip(&mean).map(|(y, mu)| y - mu));
        }
        Self { raw, values, width: m }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.width..(i + 1) * self.width]
    }
}

struct TreeBuilder<'a> {
    dataset: &'a Dataset,
    labels: &'a CenteredLabels<'a>,
    min_leaf: usize,
    max_features: usize,
}

#[derive(Clone, Copy)]
struct Candidate {
    score: f64,
    feature: usize,
    threshold: f64,
}

impl Candidate {
    fn beats(&self, other: &Option<Candidate>) -> bool {
        match other {
            None => true,
            Some(o) => {
                self.score > o.score
                    || (self.score == o.score
                        && (self.feature, self.threshold) < (o.feature, o.threshold))
            }
        }
    }
}

impl TreeBuilder<'_> {
    fn build(&self, seed: u64) -> TreeNode {
        let n = self.dataset.n_examples();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = vec![0u32; n];
        for _ in 0..n {
            counts[rng.random_range(0..n)] += 1;
        }
        let members: Vec<usize> = (0..n).filter(|&i| counts[i] > 0).collect();
        self.grow(members, &counts, &mut rng)
    }

    fn grow(&self, members: Vec<usize>, counts: &[u32], rng: &mut ChaCha8Rng) -> TreeNode {
        let splittable = members.len() >= 2 * self.min_leaf && members.len() >= 2;
        if splittable && !self.is_pure(&members) {
            if let Some(best) = self.best_split(&members, counts, rng) {
                let (left, right): (Vec<usize>, Vec<usize>) = members
                    .iter()
                    .partition(|&&i| self.dataset.row(i)[best.feature] < best.threshold);
                return TreeNode::split(
                    best.feature,
                    best.threshold,
                    self.grow(left, counts, rng),
                    self.grow(right, counts, rng),
                );
            }
        }
        let bag_counts = members.iter().map(|&i| (i, counts[i])).collect();
        TreeNode::Leaf(Leaf::from_counts(bag_counts, self.labels.raw))
    }

    fn is_pure(&self, members: &[usize]) -> bool {
        let first = self.labels.raw.row(members[0]);
        members[1..].iter().all(|&i| self.labels.raw.row(i) == first)
    }

    /// Features are visited in random order until `max_features` of them
    /// turned out non-constant in this node (or all were tried).
    fn best_split(&self, members: &[usize], counts: &[u32], rng: &mut ChaCha8Rng) -> Option<Candidate> {
        let d = self.dataset.n_features();
        let m = self.labels.width;
        let mut features: Vec<usize> = (0..d).collect();
        features.shuffle(rng);

        let mut total = vec![0.0; m];
        let mut total_w = 0.0;
        for &i in members {
            let w = f64::from(counts[i]);
            total_w += w;
            for (s, &y) in total.iter_mut().zip(self.labels.row(i)) {
                *s += w * y;
            }
        }

        let mut best: Option<Candidate> = None;
        let mut visited = 0;
        let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(members.len());
        let mut left = vec![0.0; m];
        for &feature in &features {
            if visited == self.max_features {
                break;
            }
            sorted.clear();
            sorted.extend(members.iter().map(|&i| (self.dataset.row(i)[feature], i)));
            sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if sorted[0].0 == sorted[sorted.len() - 1].0 {
                continue;
            }
            visited += 1;

            left.iter_mut().for_each(|s| *s = 0.0);
            let mut left_w = 0.0;
            for pos in 1..sorted.len() {
                let (prev_value, prev) = sorted[pos - 1];
                let w = f64::from(counts[prev]);
                left_w += w;
                for (s, &y) in left.iter_mut().zip(self.labels.row(prev)) {
                    *s += w * y;
                }
                let value = sorted[pos].0;
                if value == prev_value || pos < self.min_leaf || sorted.len() - pos < self.min_leaf {
                    continue;
                }
                let right_w = total_w - left_w;
                let mut score = 0.0;
                for (l, t) in left.iter().zip(&total) {
                    let r = t - l;
                    score += l * l / left_w + r * r / right_w;
                }
                let mut threshold = prev_value + (value - prev_value) / 2.0;
                if threshold <= prev_value {
                    threshold = value;
                }
                let candidate = Candidate {
                    score,
                    feature,
                    threshold,
                };
                if candidate.beats(&best) {
                    best = Some(candidate);
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(counts: &[(usize, u32)], prediction: Vec<f64>) -> TreeNode {
        TreeNode::Leaf(Leaf {
            bag_counts: counts.iter().copied().collect(),
            prediction,
        })
    }

    fn regression(rows: Vec<Vec<f64>>, y: Vec<f64>) -> Dataset {
        Dataset::from_rows(&rows, LabelMatrix::regression(y).unwrap()).unwrap()
    }

    #[test]
    fn single_example_gives_single_leaf() {
        let ds = regression(vec![vec![1.0, 2.0]], vec![4.5]);
        let forest = fit(&ds, &HyperParams::new(Task::Regression).n_trees(5)).unwrap();
        for tree in forest.trees() {
            let TreeNode::Leaf(leaf) = tree else { panic!("expected leaf") };
            assert_eq!(leaf.bag_counts, BTreeMap::from([(0, 1)]));
            assert_eq!(leaf.prediction, vec![4.5]);
        }
    }

    #[test]
    fn constant_labels_give_constant_predictions() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, (i * 7 % 5) as f64]).collect();
        let ds = regression(rows, vec![3.25; 30]);
        let forest = fit(&ds, &HyperParams::new(Task::Regression).n_trees(10)).unwrap();
        for tree in forest.trees() {
            assert!(tree.leaves().iter().all(|l| l.prediction == vec![3.25]));
        }
    }

    #[test]
    fn boundary_value_goes_right() {
        let tree = TreeNode::split(0, 0.5, leaf(&[(0, 1)], vec![0.0]), leaf(&[(1, 1)], vec![1.0]));
        assert_eq!(tree.apply(&[0.5]).prediction, vec![1.0]);
        assert_eq!(tree.apply(&[0.49]).prediction, vec![0.0]);
        let single = leaf(&[(0, 1)], vec![7.0]);
        assert_eq!(tree_apply(&single, &[123.0]).prediction, vec![7.0]);
    }

    #[test]
    fn depth_three_routing() {
        // leaf id = 4*[x0>=.5] + 2*[x1>=.5] + [x2>=.5]
        fn build(depth: usize, id: usize) -> TreeNode {
            if depth == 3 {
                return leaf(&[(id, 1)], vec![id as f64]);
            }
            TreeNode::split(depth, 0.5, build(depth + 1, id * 2), build(depth + 1, id * 2 + 1))
        }
        let tree = build(0, 0);
        assert_eq!(tree.leaves().len(), 8);
        assert_eq!(tree.depth(), 3);
        for id in 0..8usize {
            let probe: Vec<f64> = (0..3).map(|b| if id >> (2 - b) & 1 == 1 { 0.9 } else { 0.1 }).collect();
            assert_eq!(tree.apply(&probe).prediction, vec![id as f64]);
        }
    }

    #[test]
    fn forest_mean_of_two_trees() {
        let labels = LabelMatrix::regression(vec![1.0, 3.0]).unwrap();
        let forest = Forest::from_trees(
            vec![leaf(&[(0, 1)], vec![1.0]), leaf(&[(1, 1)], vec![3.0])],
            2,
            1,
            &labels,
        )
        .unwrap();
        assert_eq!(predict_standard(&forest, &[0.0]).value(), 2.0);
        assert_eq!(predict_standard(&forest.truncated(1).unwrap(), &[0.0]).value(), 1.0);
    }

    #[test]
    fn bag_counts_sum_to_n_and_predictions_are_consistent() {
        let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![(i % 13) as f64, (i % 7) as f64 * 0.5]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0] * 2.0 - r[1]).collect();
        let ds = regression(rows, y);
        let forest = fit(&ds, &HyperParams::new(Task::Regression).n_trees(8).seed(3)).unwrap();
        for tree in forest.trees() {
            let total: u64 = tree.leaves().iter().map(|l| l.total_count()).sum();
            assert_eq!(total, 60);
            for l in tree.leaves() {
                let again = Leaf::from_counts(l.bag_counts.clone(), ds.labels());
                assert!((again.prediction[0] - l.prediction[0]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let ds = regression(rows, y);
        let forest = fit(&ds, &HyperParams::new(Task::Regression).n_trees(4).min_samples_leaf(7)).unwrap();
        for tree in forest.trees() {
            assert!(tree.leaves().iter().all(|l| l.bag_counts.len() >= 7));
        }
    }

    #[test]
    fn task_mismatch_rejected() {
        let ds = regression(vec![vec![0.0], vec![1.0]], vec![0.0, 1.0]);
        let err = fit(&ds, &HyperParams::new(Task::Classification)).unwrap_err();
        assert!(matches!(err, Error::TaskMismatch(_)));
        assert!(fit(&ds, &HyperParams::new(Task::Regression).n_trees(0)).is_err());
        assert!(fit(&ds, &HyperParams::new(Task::Regression).max_features(MaxFeatures::Fraction(1.5))).is_err());
    }

    #[test]
    fn max_features_resolution() {
        assert_eq!(MaxFeatures::All.resolve(20), 20);
        assert_eq!(MaxFeatures::Sqrt.resolve(64), 8);
        assert_eq!(MaxFeatures::Sqrt.resolve(20), 4);
        assert_eq!(MaxFeatures::Fraction(0.01).resolve(20), 1);
        assert_eq!(MaxFeatures::Fraction(0.5).resolve(20), 10);
        assert_eq!("sqrt".parse::<MaxFeatures>().unwrap(), MaxFeatures::Sqrt);
        assert_eq!("0.25".parse::<MaxFeatures>().unwrap(), MaxFeatures::Fraction(0.25));
    }

    #[test]
    fn json_version_is_checked() {
        let labels = LabelMatrix::regression(vec![1.0]).unwrap();
        let forest = Forest::from_trees(vec![leaf(&[(0, 1)], vec![1.0])], 1, 1, &labels).unwrap();
        let json = forest.to_json().unwrap().replace("\"format_version\":1", "\"format_version\":9");
        let ok = forest.to_json().unwrap();
        assert_eq!(Forest::from_json(&ok).unwrap(), forest);
        assert!(matches!(Forest::from_json(&json), Err(Error::FormatVersion { found: 9, .. })));
    }
}
