//! Save a trained model to JSON, load it back and explain with it.

use rf_explain::datasets::synthetic_regression;
use rf_explain::{HyperParams, Selection, Task, TrainedModel};

fn main() -> rf_explain::Result<()> {
    let data = synthetic_regression(200, 5, 0.1, 4)?;
    let model = TrainedModel::fit(&data, &HyperParams::new(Task::Regression).n_trees(25).seed(8))?;
    let path = std::env::temp_dir().join("rf-explain-model.json");
    model.save(&path)?;
    let loaded = TrainedModel::load(&path)?;
    assert_eq!(loaded, model);

    let payload = loaded.explain(data.row(0), Some(Selection::Cumulative { c: 0.5 }))?;
    println!("{}", serde_json::to_string_pretty(&payload)?);
    std::fs::remove_file(&path).ok();
    Ok(())
}
