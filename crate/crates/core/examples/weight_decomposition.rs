//! Print the training examples that make up one prediction, heaviest first.

use rf_explain::datasets::synthetic_regression;
use rf_explain::{effective_count, fit, forest_weights, sorted_index, HyperParams, Task};

fn main() -> rf_explain::Result<()> {
    let data = synthetic_regression(300, 6, 0.1, 3)?;
    let forest = fit(&data, &HyperParams::new(Task::Regression).n_trees(50).seed(2))?;
    let x = [0.5; 6];
    let weights = forest_weights(&forest, &x);

    println!("{} of {} training examples carry weight", effective_count(&weights), data.n_examples());
    println!("weights sum to {:.12}", weights.total());
    let mut contribution = 0.0;
    for i in sorted_index(&weights)?.into_iter().take(10) {
        let w = weights.get(i);
        let y = data.labels().row(i)[0];
        contribution += w * y;
        println!("example {i:>4}  weight {w:.4}  label {y:>8.4}  running sum {contribution:.4}");
    }
    Ok(())
}
