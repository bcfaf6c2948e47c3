//! Explain a handwritten-digit classification by its most similar
//! training images.

use rf_explain::datasets::digits;
use rf_explain::{fit, forest_weights, predict_top_k, HyperParams, Task};

fn main() -> rf_explain::Result<()> {
    let data = digits();
    let train: Vec<usize> = (0..1500).collect();
    let forest = fit(&data.subset(&train), &HyperParams::new(Task::Classification).seed(3))?;
    let labels = data.labels().select(&train);
    let names = labels.class_names();

    for i in [1500, 1600, 1700] {
        let weights = forest_weights(&forest, data.row(i));
        let (prediction, explanation) = predict_top_k(&weights, &labels, 5)?;
        println!(
            "row {i}: actual {} predicted {} from {} examples",
            names[data.labels().class_of(i).unwrap()],
            names[prediction.class()],
            explanation.len()
        );
        for e in &explanation.entries {
            let class = labels.class_of(e.training_index).unwrap();
            println!("    example {:>4} digit {}  weight {:.3}", e.training_index, names[class], e.normalized_weight);
        }
    }
    Ok(())
}
