//! Select the fewest examples whose weights add up to at least c.

use rf_explain::datasets::synthetic_regression;
use rf_explain::{fit, forest_weights, predict_cumulative, HyperParams, Task};

fn main() -> rf_explain::Result<()> {
    let data = synthetic_regression(400, 8, 0.2, 5)?;
    let forest = fit(&data, &HyperParams::new(Task::Regression).seed(11))?;
    let x = [0.2, 0.9, 0.4, 0.1, 0.7, 0.5, 0.3, 0.8];
    let weights = forest_weights(&forest, &x);

    for c in [0.1, 0.25, 0.5, 0.75, 0.9, 1.0] {
        let (prediction, explanation) = predict_cumulative(&weights, data.labels(), c)?;
        println!(
            "c={c:<4} examples {:>3}  weight {:.3}  prediction {:.4}",
            explanation.len(),
            explanation.achieved_weight,
            prediction.value()
        );
    }
    Ok(())
}
