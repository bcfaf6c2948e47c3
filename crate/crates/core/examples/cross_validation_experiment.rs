//! Run a cross-validated sweep from a JSON config and print its table.
//!
//! cargo run --example cross_validation_experiment -- examples/configs/top_k.json [out_dir]

use rf_explain::harness::{run_experiment, ExperimentConfig};

fn main() -> rf_explain::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/top_k.json").into());
    let report = run_experiment(&ExperimentConfig::load(&path)?)?;
    print!("{}", report.to_csv());
    if let Some(out) = args.next() {
        report.write_to(&out)?;
        println!("wrote {out}/report.json and {out}/table.csv");
    }
    Ok(())
}
