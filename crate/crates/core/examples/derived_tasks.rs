//! Turn a numeric target into classes: above/below the mean, or equal-width bins.

use rf_explain::datasets::synthetic_regression;
use rf_explain::{binarize_by_mean, equal_width_bin, fit, forest_weights, predict_top_k, HyperParams, Task};

fn main() -> rf_explain::Result<()> {
    let data = synthetic_regression(300, 6, 0.2, 2)?;
    let targets = data.labels().targets().unwrap().to_vec();

    for labels in [binarize_by_mean(&targets)?, equal_width_bin(&targets, 4)?] {
        let counts: Vec<usize> = (0..labels.width())
            .map(|c| (0..labels.n_rows()).filter(|&i| labels.class_of(i) == Some(c)).count())
            .collect();
        println!("classes {:?} with counts {counts:?}", labels.class_names());
        let derived = data.clone().with_labels(labels)?;
        let forest = fit(&derived, &HyperParams::new(Task::Classification).n_trees(50).seed(5))?;
        let (prediction, _) = predict_top_k(&forest_weights(&forest, data.row(0)), derived.labels(), 10)?;
        println!("  row 0 class probabilities from 10 examples: {:.2?}", prediction.values);
    }
    Ok(())
}
