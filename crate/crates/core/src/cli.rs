//! Command-line front end: `fit`, `predict`, `explain` and `experiment`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data::{load_csv, load_feature_rows, Task};
use crate::error::{Error, Result};
use crate::explain::Selection;
use crate::forest::{HyperParams, MaxFeatures};
use crate::harness::{run_experiment, ExperimentConfig};
use crate::model::TrainedModel;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "rf-explain", version, about = "Random forests with example-based explanations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a forest on a CSV file and save it as JSON
    Fit(FitArgs),
    /// Predict every row of a CSV file
    Predict(PredictArgs),
    /// Emit the training examples behind each prediction as JSON
    Explain(PredictArgs),
    /// Run a cross-validated sweep described by a JSON config
    Experiment(ExperimentArgs),
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    target: String,
    #[arg(long, value_parser = parse_task)]
    task: Task,
    #[arg(long, default_value_t = 100)]
    trees: usize,
    #[arg(long, default_value_t = 1)]
    min_leaf: usize,
    /// all, sqrt or a fraction in (0, 1]
    #[arg(long, value_parser = parse_max_features)]
    max_features: Option<MaxFeatures>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, conflicts_with = "cumulative_c")]
    top_k: Option<usize>,
    #[arg(long)]
    cumulative_c: Option<f64>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

impl PredictArgs {
    fn selection(&self) -> Option<Selection> {
        match (self.top_k, self.cumulative_c) {
            (Some(k), _) => Some(Selection::TopK { k }),
            (None, Some(c)) => Some(Selection::Cumulative { c }),
            (None, None) => None,
        }
    }
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_task(s: &str) -> std::result::Result<Task, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_max_features(s: &str) -> std::result::Result<MaxFeatures, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parse `argv` (including the program name) and run it.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(rendered.as_bytes())
            } else {
                stdout.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                Error::InvalidArgument(_) => EXIT_USAGE,
                ref e if e.is_data_error() => EXIT_DATA,
                _ => EXIT_INTERNAL,
            }
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Fit(args) => {
            let dataset = load_csv(&args.data, &args.target, args.task)?;
            let mut params = HyperParams::new(args.task)
                .n_trees(args.trees)
                .min_samples_leaf(args.min_leaf)
                .seed(args.seed);
            if let Some(m) = args.max_features {
                params = params.max_features(m);
            }
            TrainedModel::fit(&dataset, &params)?.save(&args.out)
        }
        Command::Predict(args) => {
            let selection = args.selection();
            if let Some(sel) = selection {
                sel.validate()?;
            }
            let model = TrainedModel::load(&args.model)?;
            let rows = load_feature_rows(&args.data, model.feature_names())?;
            let mut out = csv::Writer::from_writer(Vec::new());
            let mut header: Vec<String> = match model.task() {
                Task::Regression => vec!["prediction".into()],
                Task::Classification => std::iter::once("predicted".to_string())
                    .chain(model.labels().class_names().iter().map(|c| format!("p_{c}")))
                    .collect(),
            };
            header.extend(["N".to_string(), "W".to_string()]);
            out.write_record(&header)?;
            for x in &rows {
                let (pred, expl) = model.predict(x, selection)?;
                let (n, w) = match &expl {
                    Some(e) => (e.len(), e.achieved_weight),
                    None => (model.weights(x)?.support_len(), 1.0),
                };
                let mut record: Vec<String> = match model.task() {
                    Task::Regression => vec![pred.value().to_string()],
                    Task::Classification => std::iter::once(model.labels().class_names()[pred.class()].clone())
                        .chain(pred.values.iter().map(f64::to_string))
                        .collect(),
                };
                record.extend([n.to_string(), w.to_string()]);
                out.write_record(&record)?;
            }
            let bytes = out.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))?;
            emit(&bytes, args.out.as_deref(), stdout)
        }
        Command::Explain(args) => {
            let selection = args.selection();
            if let Some(sel) = selection {
                sel.validate()?;
            }
            let model = TrainedModel::load(&args.model)?;
            let rows = load_feature_rows(&args.data, model.feature_names())?;
            let payloads = rows
                .iter()
                .map(|x| model.explain(x, selection))
                .collect::<Result<Vec<_>>>()?;
            let mut json = serde_json::to_vec_pretty(&payloads)?;
            json.push(b'\n');
            emit(&json, args.out.as_deref(), stdout)
        }
        Command::Experiment(args) => {
            let mut config = ExperimentConfig::load(&args.config)?;
            if let Some(seed) = args.seed {
                config.seed = seed;
            }
            run_experiment(&config)?.write_to(&args.out)
        }
    }
}

fn emit(bytes: &[u8], path: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Error::io(p, e)),
        None => stdout.write_all(bytes).map_err(|e| Error::io("<stdout>", e)),
    }
}
