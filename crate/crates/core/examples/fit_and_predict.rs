//! Fit a regression forest and compare the usual tree-averaged prediction
//! with the one assembled from training-example weights.

use rf_explain::datasets::synthetic_regression;
use rf_explain::{fit, forest_weights, predict_from_weights, predict_standard, HyperParams, Task};

fn main() -> rf_explain::Result<()> {
    let data = synthetic_regression(500, 10, 0.2, 1)?;
    let train: Vec<usize> = (0..400).collect();
    let forest = fit(&data.subset(&train), &HyperParams::new(Task::Regression).seed(7))?;
    let train_labels = data.labels().select(&train);

    println!("{:>5} {:>10} {:>10} {:>10}", "row", "actual", "trees", "weights");
    for i in 400..410 {
        let x = data.row(i);
        let standard = predict_standard(&forest, x).value();
        let weighted = predict_from_weights(&forest_weights(&forest, x), &train_labels)?.value();
        println!("{i:>5} {:>10.4} {standard:>10.4} {weighted:>10.4}", data.labels().row(i)[0]);
    }
    Ok(())
}
