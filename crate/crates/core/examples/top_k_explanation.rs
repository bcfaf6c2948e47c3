//! Shrink an explanation to its k heaviest examples and watch the
//! prediction drift towards the full forest output as k grows.

use rf_explain::datasets::synthetic_regression;
use rf_explain::{fit, forest_weights, predict_standard, predict_top_k, HyperParams, Task};

fn main() -> rf_explain::Result<()> {
    let data = synthetic_regression(400, 8, 0.2, 5)?;
    let train: Vec<usize> = (1..400).collect();
    let forest = fit(&data.subset(&train), &HyperParams::new(Task::Regression).seed(11))?;
    let labels = data.labels().select(&train);
    let x = data.row(0);
    let weights = forest_weights(&forest, x);

    println!("full forest: {:.4}", predict_standard(&forest, x).value());
    for k in [1, 2, 3, 5, 10, 20, 50] {
        let (prediction, explanation) = predict_top_k(&weights, &labels, k)?;
        println!(
            "k={k:<3} prediction {:.4}  covers {:.3} of the weight",
            prediction.value(),
            explanation.achieved_weight
        );
    }
    Ok(())
}
