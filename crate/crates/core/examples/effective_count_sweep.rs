//! How many training examples explain a prediction, as the forest grows
//! and as leaves get larger.

use rf_explain::datasets::synthetic_regression;
use rf_explain::{effective_count, fit, forest_weights, HyperParams, Task};

fn mean_support(forest: &rf_explain::Forest, data: &rf_explain::Dataset) -> f64 {
    let total: usize = data.rows().map(|x| effective_count(&forest_weights(forest, x))).sum();
    total as f64 / data.n_examples() as f64
}

fn main() -> rf_explain::Result<()> {
    let data = synthetic_regression(600, 8, 0.2, 9)?;
    let (train, test) = (data.subset(&(0..500).collect::<Vec<_>>()), data.subset(&(500..600).collect::<Vec<_>>()));

    let forest = fit(&train, &HyperParams::new(Task::Regression).n_trees(200).seed(1))?;
    for trees in [1, 10, 50, 100, 200] {
        println!("trees {trees:>3}: N = {:.1}", mean_support(&forest.truncated(trees)?, &test));
    }
    for leaf in [1, 5, 10, 25] {
        let params = HyperParams::new(Task::Regression).min_samples_leaf(leaf).seed(1);
        println!("min leaf {leaf:>2}: N = {:.1}", mean_support(&fit(&train, &params)?, &test));
    }
    Ok(())
}
