//! Exit criteria for the crate. Each criterion prints one PASS/FAIL line;
//! the suite fails if any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rf_explain::data::{binarize_by_mean, equal_width_bin, kfold_split, Dataset, Task};
use rf_explain::datasets::{digits, synthetic_regression};
use rf_explain::harness::{
    fold_seed, run_experiment_with_workers, score, BaseParams, DatasetSource, Derivation, ExperimentConfig,
    ExperimentReport, Sweep,
};
use rf_explain::metrics::{binary_auc, pearson_corr, rmse};
use rf_explain::{
    fit, forest_weights, predict_cumulative, predict_from_weights, predict_standard, predict_top_k, Forest,
    HyperParams, MaxFeatures, Prediction,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < budget, || format!("took {took:?}, budget {budget:?}"))
}

/// Regression, binary and 10-class forests on n = 500, d = 20, 100 trees.
fn three_forests() -> Vec<(&'static str, Dataset, Forest)> {
    let base = synthetic_regression(500, 20, 0.2, 100).unwrap();
    let targets = base.labels().targets().unwrap().to_vec();
    let binary = base.clone().with_labels(binarize_by_mean(&targets).unwrap()).unwrap();
    let multi = base.clone().with_labels(equal_width_bin(&targets, 10).unwrap()).unwrap();
    [("regression", base), ("binary", binary), ("multiclass", multi)]
        .into_iter()
        .map(|(name, ds)| {
            let params = HyperParams::new(ds.task()).n_trees(100).seed(7);
            let forest = fit(&ds, &params).unwrap();
            (name, ds, forest)
        })
        .collect()
}

fn test_objects(n: usize, d: usize) -> Vec<Vec<f64>> {
    let probe = synthetic_regression(n, d, 0.2, 999).unwrap();
    probe.rows().map(<[f64]>::to_vec).collect()
}

fn max_abs_diff(a: &Prediction, b: &Prediction) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn criterion_1_exact_fidelity() -> Outcome {
    let start = Instant::now();
    let xs = test_objects(200, 20);
    let mut worst = 0.0f64;
    for (name, ds, forest) in three_forests() {
        for x in &xs {
            let standard = predict_standard(&forest, x);
            let via_weights = predict_from_weights(&forest_weights(&forest, x), ds.labels()).unwrap();
            let diff = max_abs_diff(&standard, &via_weights);
            worst = worst.max(diff);
            ensure(diff <= 1e-9, || format!("{name}: |standard - weights| = {diff:e}"))?;
        }
    }
    within_budget(start, Duration::from_secs(60))?;
    Ok(format!("3 forests x 200 objects, max deviation {worst:e}"))
}

fn criterion_2_reduction_identities() -> Outcome {
    let start = Instant::now();
    let xs = test_objects(200, 20);
    for (name, ds, forest) in three_forests() {
        let n = ds.n_examples();
        for x in &xs {
            let standard = predict_standard(&forest, x);
            let w = forest_weights(&forest, x);
            let (top, _) = predict_top_k(&w, ds.labels(), n).unwrap();
            let (cum, expl) = predict_cumulative(&w, ds.labels(), 1.0).unwrap();
            ensure(max_abs_diff(&top, &standard) <= 1e-9, || format!("{name}: top-k(n) deviates"))?;
            ensure(max_abs_diff(&cum, &standard) <= 1e-9, || format!("{name}: cumulative(1.0) deviates"))?;
            ensure(expl.achieved_weight == 1.0, || format!("{name}: W = {}", expl.achieved_weight))?;
        }
    }

    // c = 1.0 experiment row against a hand-rolled standard evaluation
    let config = ExperimentConfig {
        dataset: DatasetSource::SyntheticRegression {
            n: 300,
            d: 8,
            noise: 0.2,
            seed: 5,
        },
        derivation: Derivation::None,
        folds: 5,
        seed: 21,
        sweep: Sweep::CumulativeC(vec![0.5, 1.0]),
        params: BaseParams {
            n_trees: 40,
            ..BaseParams::default()
        },
    };
    let report = run_experiment_with_workers(&config, None).map_err(|e| e.to_string())?;
    let row = &report.rows[1];
    ensure(row.cumulative_weight == Some(1.0), || format!("W = {:?}", row.cumulative_weight))?;

    let ds = synthetic_regression(300, 8, 0.2, 5).unwrap();
    let plan = kfold_split(ds.n_examples(), 5, 21).unwrap();
    let (mut rmse_w, mut corr_w, mut n_w) = (0.0, 0.0, 0.0);
    let (mut rmse_s, mut corr_s) = (0.0, 0.0);
    for fold in 0..5 {
        let train = ds.subset(&plan.train_indices(fold));
        let params = HyperParams::new(Task::Regression).n_trees(40).seed(fold_seed(21, fold));
        let forest = fit(&train, &params).unwrap();
        let test = plan.test_indices(fold);
        let actual: Vec<Vec<f64>> = test.iter().map(|&i| ds.labels().row(i).to_vec()).collect();
        let mut by_weights = Vec::new();
        let mut by_trees = Vec::new();
        let mut support = 0usize;
        for &i in test {
            let w = forest_weights(&forest, ds.row(i));
            support += w.support_len();
            by_weights.push(predict_from_weights(&w, train.labels()).unwrap().values);
            by_trees.push(predict_standard(&forest, ds.row(i)).values);
        }
        let m = score(Task::Regression, &by_weights, &actual);
        rmse_w += m.rmse.unwrap();
        corr_w += m.corr.unwrap();
        n_w += support as f64 / test.len() as f64;
        let m = score(Task::Regression, &by_trees, &actual);
        rmse_s += m.rmse.unwrap();
        corr_s += m.corr.unwrap();
    }
    let (rmse_w, corr_w, n_w) = (rmse_w / 5.0, corr_w / 5.0, n_w / 5.0);
    ensure(row.rmse == Some(rmse_w) && row.corr == Some(corr_w) && row.effective_count == n_w, || {
        format!("c = 1.0 row {:?}/{:?}/{} vs standard {rmse_w}/{corr_w}/{n_w}", row.rmse, row.corr, row.effective_count)
    })?;
    ensure(
        (row.rmse.unwrap() - rmse_s / 5.0).abs() <= 1e-9 && (row.corr.unwrap() - corr_s / 5.0).abs() <= 1e-9,
        || "c = 1.0 row deviates from tree-averaged evaluation".into(),
    )?;
    within_budget(start, Duration::from_secs(60))?;
    Ok(format!("identities hold; c=1.0 row RMSE {rmse_w:.6} matches standard evaluation exactly"))
}

fn criterion_3_normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    for f in 0..10u64 {
        let n = rng.random_range(30..200);
        let d = rng.random_range(2..8);
        let base = synthetic_regression(n, d, 0.3, 50 + f).unwrap();
        let targets = base.labels().targets().unwrap().to_vec();
        let ds = match f % 3 {
            0 => base,
            1 => base.with_labels(binarize_by_mean(&targets).unwrap()).unwrap(),
            _ => base.with_labels(equal_width_bin(&targets, 4).unwrap()).unwrap(),
        };
        let params = HyperParams::new(ds.task())
            .n_trees(rng.random_range(1..40))
            .min_samples_leaf(rng.random_range(1..6))
            .seed(f);
        let forest = fit(&ds, &params).unwrap();
        for x in test_objects(100, d) {
            let w = forest_weights(&forest, &x);
            let total = w.total();
            ensure((total - 1.0).abs() <= 1e-9, || format!("weights sum to {total}"))?;
            let pred = predict_from_weights(&w, ds.labels()).unwrap();
            let (sel_pred, expl) = if rng.random_bool(0.5) {
                predict_top_k(&w, ds.labels(), rng.random_range(1..30)).unwrap()
            } else {
                predict_cumulative(&w, ds.labels(), rng.random_range(0.01..=1.0)).unwrap()
            };
            let norm: f64 = expl.entries.iter().map(|e| e.normalized_weight).sum();
            ensure((norm - 1.0).abs() <= 1e-9, || format!("normalized weights sum to {norm}"))?;
            if ds.task() == Task::Classification {
                for p in [&pred, &sel_pred, &predict_standard(&forest, &x)] {
                    let s: f64 = p.values.iter().sum();
                    ensure((s - 1.0).abs() <= 1e-9, || format!("class distribution sums to {s}"))?;
                    ensure(p.values.iter().all(|&v| v >= 0.0), || "negative probability".into())?;
                }
            }
            checked += 1;
        }
    }
    ensure(checked == 1000, || format!("checked {checked} pairs"))?;
    Ok(format!("{checked} (forest, x) pairs normalized"))
}

const KS: [usize; 6] = [1, 3, 5, 10, 20, 50];

fn criterion_4_selection_contracts() -> Outcome {
    let start = Instant::now();
    let cs: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
    let xs = test_objects(200, 20);
    let mut instances = 0;
    for (name, ds, forest) in three_forests() {
        for x in &xs {
            let w = forest_weights(&forest, x);
            let mut prev_w = 0.0;
            for &k in &KS {
                let (_, e) = predict_top_k(&w, ds.labels(), k).unwrap();
                ensure(e.len() <= k, || format!("{name}: N = {} > k = {k}", e.len()))?;
                ensure(e.achieved_weight >= prev_w, || format!("{name}: W decreased at k = {k}"))?;
                prev_w = e.achieved_weight;
            }
            let mut prev_n = 0;
            for &c in &cs {
                let (_, e) = predict_cumulative(&w, ds.labels(), c).unwrap();
                ensure(e.achieved_weight >= c, || format!("{name}: W = {} < c = {c}", e.achieved_weight))?;
                ensure(e.len() >= prev_n, || format!("{name}: N decreased at c = {c}"))?;
                prev_n = e.len();
            }
            instances += 1;
        }
    }

    // the same semantics on fold-averaged report columns
    let mut config = ExperimentConfig {
        dataset: DatasetSource::SyntheticRegression {
            n: 400,
            d: 10,
            noise: 0.2,
            seed: 8,
        },
        derivation: Derivation::None,
        folds: 5,
        seed: 2,
        sweep: Sweep::TopK(KS.to_vec()),
        params: BaseParams {
            n_trees: 50,
            ..BaseParams::default()
        },
    };
    let report = run_experiment_with_workers(&config, None).map_err(|e| e.to_string())?;
    for pair in report.rows.windows(2) {
        ensure(pair[0].cumulative_weight <= pair[1].cumulative_weight, || "mean W decreased in k".into())?;
    }
    config.sweep = Sweep::CumulativeC(cs.clone());
    let report = run_experiment_with_workers(&config, None).map_err(|e| e.to_string())?;
    for (row, &c) in report.rows.iter().zip(&cs) {
        ensure(row.cumulative_weight.unwrap() >= c, || format!("mean W below c = {c}"))?;
    }
    for pair in report.rows.windows(2) {
        ensure(pair[0].effective_count <= pair[1].effective_count, || "mean N decreased in c".into())?;
    }
    within_budget(start, Duration::from_secs(120))?;
    Ok(format!("{instances} instances x {} k values x {} c values", KS.len(), cs.len()))
}

fn trend_config(sweep: Sweep) -> ExperimentConfig {
    ExperimentConfig {
        dataset: DatasetSource::SyntheticRegression {
            n: 1000,
            d: 20,
            noise: 0.2,
            seed: 11,
        },
        derivation: Derivation::None,
        folds: 10,
        seed: 4,
        sweep,
        params: BaseParams::default(),
    }
}

fn criterion_5_trend_analogue() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    for sweep in [Sweep::TreeCounts(vec![25, 50, 100, 200]), Sweep::MinLeafSizes(vec![1, 5, 10, 20])] {
        let report = run_experiment_with_workers(&trend_config(sweep), None).map_err(|e| e.to_string())?;
        let ns: Vec<f64> = report.rows.iter().map(|r| r.effective_count).collect();
        ensure(ns.windows(2).all(|p| p[0] < p[1]), || format!("{}: N not increasing {ns:?}", report.axis))?;
        lines.push(format!(
            "{}: N = {}",
            report.axis,
            ns.iter().map(|n| format!("{n:.1}")).collect::<Vec<_>>().join(" -> ")
        ));
    }
    within_budget(start, Duration::from_secs(300))?;
    Ok(lines.join("; "))
}

fn criterion_6_performance_retention() -> Outcome {
    let start = Instant::now();

    let reg_ks = vec![1, 2, 3, 5, 10, 15, 20, 30, 40, 50];
    let reg = run_experiment_with_workers(&trend_config(Sweep::TopK(reg_ks)), None).map_err(|e| e.to_string())?;
    let full = run_experiment_with_workers(&trend_config(Sweep::TreeCounts(vec![100])), None)
        .map_err(|e| e.to_string())?;
    let full_rmse = full.rows[0].rmse.unwrap();
    let best = reg
        .rows
        .iter()
        .filter(|r| r.rmse.unwrap() <= 1.05 * full_rmse)
        .map(|r| r.value.to_string())
        .next();
    let reg_k = best.ok_or_else(|| format!("no k <= 50 within 5% of full RMSE {full_rmse:.4}"))?;

    let digits_config = |sweep| ExperimentConfig {
        dataset: DatasetSource::Digits,
        derivation: Derivation::None,
        folds: 10,
        seed: 4,
        sweep,
        params: BaseParams::default(),
    };
    let cls = run_experiment_with_workers(&digits_config(Sweep::TopK(vec![1, 3, 5, 10, 15, 20])), None)
        .map_err(|e| e.to_string())?;
    let full = run_experiment_with_workers(&digits_config(Sweep::TreeCounts(vec![100])), None)
        .map_err(|e| e.to_string())?;
    let full_acc = full.rows[0].acc.unwrap();
    let cls_k = cls
        .rows
        .iter()
        .find(|r| r.acc.unwrap() >= full_acc - 0.01)
        .map(|r| (r.value.to_string(), r.acc.unwrap()))
        .ok_or_else(|| format!("no k <= 20 within 0.01 of full accuracy {full_acc:.4}"))?;

    within_budget(start, Duration::from_secs(300))?;
    Ok(format!(
        "regression: k = {reg_k} within 5% of RMSE {full_rmse:.4}; digits: k = {} acc {:.4} vs full {full_acc:.4}",
        cls_k.0, cls_k.1
    ))
}

fn criterion_7_metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut done = 0;
    while done < 100 {
        let n = rng.random_range(2..=200);
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..20u8)) / 19.0).collect();
        let positive: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        if positive.iter().all(|&p| p) || positive.iter().all(|&p| !p) {
            continue;
        }
        let (mut doubled, mut pairs) = (0u64, 0u64);
        for i in 0..n {
            for j in 0..n {
                if positive[i] && !positive[j] {
                    pairs += 1;
                    doubled += match scores[i].partial_cmp(&scores[j]).unwrap() {
                        std::cmp::Ordering::Greater => 2,
                        std::cmp::Ordering::Equal => 1,
                        std::cmp::Ordering::Less => 0,
                    };
                }
            }
        }
        let oracle = doubled as f64 / (2 * pairs) as f64;
        let got = binary_auc(&scores, &positive).unwrap();
        ensure(got == oracle, || format!("auc {got} vs pair count {oracle} (n = {n})"))?;
        done += 1;
    }
    let r = rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
    ensure((r - (12.5f64).sqrt()).abs() <= 1e-12, || format!("rmse {r}"))?;
    let c = pearson_corr(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
    ensure((c - 9.0 / 84f64.sqrt()).abs() <= 1e-12, || format!("corr {c}"))?;
    Ok("100 AUC instances equal the pair count; rmse/corr hand values match".into())
}

fn criterion_8_determinism() -> Outcome {
    let config = ExperimentConfig {
        dataset: DatasetSource::SyntheticRegression {
            n: 300,
            d: 6,
            noise: 0.2,
            seed: 1,
        },
        derivation: Derivation::EqualWidthBin { bins: 10 },
        folds: 5,
        seed: 13,
        sweep: Sweep::CumulativeC(vec![0.3, 0.6, 1.0]),
        params: BaseParams {
            n_trees: 30,
            min_samples_leaf: 2,
            max_features: Some(MaxFeatures::Sqrt),
        },
    };
    let run = |workers| -> Result<String, String> {
        let report: ExperimentReport = run_experiment_with_workers(&config, workers).map_err(|e| e.to_string())?;
        report.to_json().map_err(|e| e.to_string())
    };
    let first = run(Some(1))?;
    ensure(first == run(Some(4))?, || "reports differ between 1 and 4 workers".into())?;
    ensure(first == run(None)?, || "reports differ between runs".into())?;

    let ds = digits();
    let forest = fit(&ds, &HyperParams::new(Task::Classification).n_trees(10).seed(5)).unwrap();
    let json = forest.to_json().unwrap();
    let back = Forest::from_json(&json).unwrap();
    ensure(back == forest, || "forest changed through JSON".into())?;
    ensure(back.to_json().unwrap() == json, || "forest JSON not stable".into())?;
    Ok(format!("report ({} bytes) byte-identical across runs; forest JSON lossless", first.len()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 exact fidelity", criterion_1_exact_fidelity),
        ("2 reduction identities", criterion_2_reduction_identities),
        ("3 normalization", criterion_3_normalization),
        ("4 selection contracts", criterion_4_selection_contracts),
        ("5 effective-count trends", criterion_5_trend_analogue),
        ("6 performance retention", criterion_6_performance_retention),
        ("7 metric oracles", criterion_7_metric_oracles),
        ("8 determinism", criterion_8_determinism),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let start = Instant::now();
        match check() {
            Ok(detail) => println!("PASS criterion {name} ({:.1?}): {detail}", start.elapsed()),
            Err(why) => {
                println!("FAIL criterion {name} ({:.1?}): {why}", start.elapsed());
                failed.push(name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
