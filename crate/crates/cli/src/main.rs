//! Batch CLI for the strengthlab regression engine.
//!
//! Subcommands: `describe`, `synth`, `train`, `evaluate`, `tune`, `explain`,
//! `uncertainty`. Every run writes its artifacts atomically into the output
//! directory plus a `manifest.json` listing each file with its SHA-256. All
//! randomness flows from the `--seed` flag through derived substreams, so
//! identical invocations reproduce byte-identical outputs regardless of the
//! `STRENGTHLAB_THREADS` setting.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error.

mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use ndarray::Array2;
use serde_json::json;

use strengthlab::dataset::{
    self, load_csv, pearson_matrix, split_n, stats_preset, summarize, Dataset, GroundTruth,
    StatsTable,
};
use strengthlab::error::Error;
use strengthlab::evaluation::{compare_uncertainty, uncertainty, MetricsReport, UncertaintyReport};
use strengthlab::explain::{
    dependence, global_importance, shap_matrix, waterfall, ShapMatrix, TreeEnsembleRef,
};
use strengthlab::hybrid::{
    encode_dataset, evaluate_hybrid, fit_hybrid, FeatureSpace, HybridKind, HybridModel,
    HybridSpec, PartitionReport,
};
use strengthlab::rng::derive_seed;
use strengthlab::tuning::{default_space, random_search, SearchSpace};

use output::RunWriter;

#[derive(Parser)]
#[command(
    name = "strengthlab",
    version,
    about = "Hybrid tree/boosting/attention regression for strength-style tabular data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Summary statistics and Pearson correlations of a CSV dataset.
    Describe {
        #[arg(long)]
        input: PathBuf,
        /// Target column name.
        #[arg(long)]
        target: String,
        /// Comma-separated feature schema; defaults to all non-target columns.
        #[arg(long)]
        schema: Option<String>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Draw a synthetic dataset matching a marginal-statistics profile.
    Synth {
        /// Bundled stats profile: table1, table2, or table3.
        #[arg(long, conflicts_with = "stats")]
        preset: Option<String>,
        /// Stats CSV (column,mean,std,min,p25,p50,p75,max) to match instead.
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Response surface: `cs_smooth` or `constant:<value>`.
        #[arg(long, default_value = "cs_smooth")]
        ground_truth: String,
        /// Standard deviation of the additive Gaussian target noise.
        #[arg(long, default_value_t = 0.0)]
        noise_std: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Fit a hybrid model and evaluate it on a seeded train/test split.
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        target: String,
        /// et_xgb, rf_lgbm, or transformer_xgb.
        #[arg(long)]
        kind: String,
        /// Shipped parameter preset: table4, table6, or table8.
        #[arg(long, conflicts_with = "params")]
        preset: Option<String>,
        /// HybridSpec JSON file overriding the preset.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Training fraction of the split.
        #[arg(long, default_value_t = 0.8)]
        split: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Score a saved model against a dataset.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Random-search hyperparameter tuning with k-fold cross-validation.
    Tune {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 20)]
        budget: usize,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// SearchSpace JSON file; defaults to the kind's bundled space.
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// SHAP attributions: global importance, long-format values, dependence.
    Explain {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        target: String,
        /// How many top features get dependence exports.
        #[arg(long, default_value_t = 3)]
        top: usize,
        /// Also write a waterfall file for this sample id.
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Uncertainty indices per model with a train/test comparison ranking.
    Uncertainty {
        /// Saved model file; repeat to compare several models.
        #[arg(long, required = true)]
        model: Vec<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 0.8)]
        split: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Confidence factor of the absolute index.
        #[arg(long, default_value_t = 1.96)]
        z: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    // Caps internal parallelism; results are unaffected by the value.
    if let Ok(threads) = std::env::var("STRENGTHLAB_THREADS") {
        if let Ok(n) = threads.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Describe {
            input,
            target,
            schema,
            out,
        } => cmd_describe(input, target, schema, out),
        Command::Synth {
            preset,
            stats,
            ground_truth,
            noise_std,
            n,
            seed,
            out,
        } => cmd_synth(preset, stats, ground_truth, noise_std, n, seed, out),
        Command::Train {
            input,
            target,
            kind,
            preset,
            params,
            split,
            seed,
            out,
        } => cmd_train(input, target, kind, preset, params, split, seed, out),
        Command::Evaluate {
            model,
            input,
            target,
            out,
        } => cmd_evaluate(model, input, target, out),
        Command::Tune {
            input,
            target,
            kind,
            budget,
            k,
            seed,
            space,
            out,
        } => cmd_tune(input, target, kind, budget, k, seed, space, out),
        Command::Explain {
            model,
            input,
            target,
            top,
            sample,
            out,
        } => cmd_explain(model, input, target, top, sample, out),
        Command::Uncertainty {
            model,
            input,
            target,
            split,
            seed,
            z,
            out,
        } => cmd_uncertainty(model, input, target, split, seed, z, out),
    }
}

fn parse_schema(schema: Option<String>) -> Option<Vec<String>> {
    schema.map(|s| {
        s.split(',')
            .map(|c| c.trim().to_string())
            .filter(|c| !c.is_empty())
            .collect()
    })
}

fn cmd_describe(
    input: PathBuf,
    target: String,
    schema: Option<String>,
    out: PathBuf,
) -> Result<(), Error> {
    let schema = parse_schema(schema);
    let ds = load_csv(&input, schema.as_deref(), &target)?;
    let stats = summarize(&ds);
    let corr = pearson_matrix(&ds)?;
    let mut w = RunWriter::new(&out)?;
    w.write("stats.csv", stats.to_csv_string().as_bytes())?;
    w.write("stats.json", serde_json::to_string_pretty(&stats)?.as_bytes())?;
    w.write("corr.csv", corr.to_csv_string().as_bytes())?;
    w.write("corr.json", serde_json::to_string_pretty(&corr)?.as_bytes())?;
    w.finish(
        "describe",
        json!({"input": input, "target": target, "schema": schema}),
        None,
    )?;
    println!(
        "described {} rows x {} features -> {}",
        ds.n_samples(),
        ds.n_features(),
        out.display()
    );
    Ok(())
}

fn cmd_synth(
    preset: Option<String>,
    stats_path: Option<PathBuf>,
    ground_truth: String,
    noise_std: f64,
    n: usize,
    seed: u64,
    out: PathBuf,
) -> Result<(), Error> {
    let stats: StatsTable = match (&preset, &stats_path) {
        (Some(name), None) => stats_preset(name)?,
        (None, Some(path)) => {
            let file = std::fs::File::open(path)?;
            StatsTable::from_csv_reader(file)?
        }
        (None, None) => stats_preset("table1")?,
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    let gt = GroundTruth::from_name(&ground_truth)?;
    let ds = dataset::synthesize(&stats, &gt, noise_std, n, seed)?;
    let mut w = RunWriter::new(&out)?;
    w.write("synth.csv", ds.to_csv_string().as_bytes())?;
    w.finish(
        "synth",
        json!({
            "preset": preset,
            "stats": stats_path,
            "ground_truth": ground_truth,
            "noise_std": noise_std,
            "n": n,
        }),
        Some(seed),
    )?;
    println!("synthesized {n} rows -> {}", out.display());
    Ok(())
}

fn resolve_spec(
    kind: &str,
    preset: Option<String>,
    params: Option<PathBuf>,
    seed: u64,
) -> Result<HybridSpec, Error> {
    let kind = HybridKind::from_name(kind)?;
    let spec = match (preset, params) {
        (Some(name), None) => {
            let spec = HybridSpec::preset(&name)?;
            if spec.kind != kind {
                return Err(Error::Config(format!(
                    "preset `{name}` is for kind `{}`",
                    spec.kind.name()
                )));
            }
            spec
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)?;
            let spec: HybridSpec = serde_json::from_str(&text)?;
            if spec.kind != kind {
                return Err(Error::Config(format!(
                    "params file is for kind `{}`",
                    spec.kind.name()
                )));
            }
            spec
        }
        (None, None) => HybridSpec::default_for(kind),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    Ok(spec.with_seed(seed))
}

fn predictions_csv(parts: &[(&str, &PartitionReport)]) -> String {
    let mut out = String::from("index,partition,actual,predicted,within_10pct\n");
    for (name, part) in parts {
        for p in &part.points {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                p.index,
                name,
                fmt(p.actual),
                fmt(p.predicted),
                p.within_10pct
            ));
        }
    }
    out
}

fn metrics_csv(m: &MetricsReport) -> String {
    format!("{}\n{}\n", MetricsReport::CSV_HEADER, m.to_csv_row())
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    input: PathBuf,
    target: String,
    kind: String,
    preset: Option<String>,
    params: Option<PathBuf>,
    split_ratio: f64,
    seed: u64,
    out: PathBuf,
) -> Result<(), Error> {
    let ds = load_csv(&input, None, &target)?;
    let spec = resolve_spec(&kind, preset.clone(), params.clone(), seed)?;
    let split = split_n(ds.n_samples(), split_ratio, derive_seed(seed, 0))?;
    let train_ds = ds.subset(&split.train);
    let model = fit_hybrid(&train_ds, &spec)?;
    let eval = evaluate_hybrid(&model, &ds, &split)?;

    let mut w = RunWriter::new(&out)?;
    w.write("model.json", model.to_json()?.as_bytes())?;
    w.write("metrics_train.csv", metrics_csv(&eval.train.metrics).as_bytes())?;
    w.write("metrics_test.csv", metrics_csv(&eval.test.metrics).as_bytes())?;
    w.write(
        "predictions.csv",
        predictions_csv(&[("train", &eval.train), ("test", &eval.test)]).as_bytes(),
    )?;
    w.finish(
        "train",
        json!({
            "input": input,
            "target": target,
            "kind": kind,
            "preset": preset,
            "params": params,
            "split": split_ratio,
            "spec": spec,
        }),
        Some(seed),
    )?;
    let r2 = eval
        .test
        .metrics
        .r2
        .map(|v| format!("{v:.4}"))
        .unwrap_or_else(|| "n/a".into());
    println!(
        "trained {} on {} rows; test RMSE {:.4}, test R2 {} -> {}",
        spec.kind.name(),
        split.train.len(),
        eval.test.metrics.rmse,
        r2,
        out.display()
    );
    Ok(())
}

fn load_model(path: &PathBuf) -> Result<HybridModel, Error> {
    let text = std::fs::read_to_string(path)?;
    HybridModel::from_json(&text)
}

fn check_features(model: &HybridModel, ds: &Dataset) -> Result<(), Error> {
    if model.feature_names != ds.feature_names {
        return Err(Error::Config(format!(
            "model features {:?} do not match dataset features {:?}",
            model.feature_names, ds.feature_names
        )));
    }
    Ok(())
}

fn cmd_evaluate(
    model_path: PathBuf,
    input: PathBuf,
    target: String,
    out: PathBuf,
) -> Result<(), Error> {
    let model = load_model(&model_path)?;
    let ds = load_csv(&input, None, &target)?;
    check_features(&model, &ds)?;
    let preds = model.predict_batch(ds.x.view())?;
    let metrics = strengthlab::evaluation::evaluate(&ds.y, &preds)?;
    let mut csv = String::from("index,partition,actual,predicted,within_10pct\n");
    for (i, (a, p)) in ds.y.iter().zip(&preds).enumerate() {
        csv.push_str(&format!(
            "{},all,{},{},{}\n",
            i,
            fmt(*a),
            fmt(*p),
            (p - a).abs() <= 0.1 * a.abs()
        ));
    }
    let mut w = RunWriter::new(&out)?;
    w.write("metrics.csv", metrics_csv(&metrics).as_bytes())?;
    w.write("predictions.csv", csv.as_bytes())?;
    w.finish(
        "evaluate",
        json!({"model": model_path, "input": input, "target": target}),
        None,
    )?;
    println!(
        "evaluated {} rows; RMSE {:.4} -> {}",
        ds.n_samples(),
        metrics.rmse,
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_tune(
    input: PathBuf,
    target: String,
    kind: String,
    budget: usize,
    k: usize,
    seed: u64,
    space_path: Option<PathBuf>,
    out: PathBuf,
) -> Result<(), Error> {
    let ds = load_csv(&input, None, &target)?;
    let kind = HybridKind::from_name(&kind)?;
    let space: SearchSpace = match &space_path {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => default_space(kind),
    };
    let (best, trials) = random_search(&ds, kind, &space, budget, k, seed)?;
    let mut log = String::new();
    for t in &trials {
        let line = json!({
            "draw_index": t.draw_index,
            "params": t.assignments,
            "fold_objectives": t.fold_objectives,
            "mean": t.mean_objective,
            "std": t.std_objective,
        });
        log.push_str(&serde_json::to_string(&line)?);
        log.push('\n');
    }
    let mut w = RunWriter::new(&out)?;
    w.write("trials.jsonl", log.as_bytes())?;
    w.write(
        "best_spec.json",
        serde_json::to_string_pretty(&best)?.as_bytes(),
    )?;
    w.finish(
        "tune",
        json!({
            "input": input,
            "target": target,
            "kind": kind.name(),
            "budget": budget,
            "k": k,
            "space": space_path,
        }),
        Some(seed),
    )?;
    let best_obj = trials
        .iter()
        .map(|t| t.mean_objective)
        .fold(f64::INFINITY, f64::min);
    println!(
        "tuned {} over {} trials; best CV RMSE {:.4} -> {}",
        kind.name(),
        trials.len(),
        best_obj,
        out.display()
    );
    Ok(())
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

fn shap_for_model(model: &HybridModel, ds: &Dataset) -> Result<(ShapMatrix, Dataset), Error> {
    let ids: Vec<usize> = (0..ds.n_samples()).collect();
    match model.feature_space {
        FeatureSpace::Raw => {
            let shap = shap_matrix(
                TreeEnsembleRef::Hybrid(model),
                ds.x.view(),
                ids,
                ds.feature_names.clone(),
            )?;
            Ok((shap, ds.clone()))
        }
        FeatureSpace::Encoded => {
            // Attribution runs over the booster's encoded feature space.
            let z: Array2<f64> = encode_dataset(model, ds.x.view())?;
            let names: Vec<String> = (0..z.ncols()).map(|j| format!("repr_{j}")).collect();
            let encoded_ds = Dataset::new(
                names.clone(),
                z.clone(),
                ds.y.clone(),
                ds.target_name.clone(),
            )?;
            let shap = shap_matrix(&model.stage2, z.view(), ids, names)?;
            Ok((shap, encoded_ds))
        }
    }
}

fn cmd_explain(
    model_path: PathBuf,
    input: PathBuf,
    target: String,
    top: usize,
    sample: Option<usize>,
    out: PathBuf,
) -> Result<(), Error> {
    let model = load_model(&model_path)?;
    let ds = load_csv(&input, None, &target)?;
    check_features(&model, &ds)?;
    let (shap, value_ds) = shap_for_model(&model, &ds)?;
    let ranking = global_importance(&shap);

    let mut importance = String::from("feature,mean_abs_shap\n");
    for (name, value) in &ranking.entries {
        importance.push_str(&format!("{},{}\n", name, fmt(*value)));
    }
    let mut long = String::from("sample_id,feature,value,shap\n");
    for (row, &id) in shap.sample_ids.iter().enumerate() {
        for (j, feat) in shap.feature_names.iter().enumerate() {
            long.push_str(&format!(
                "{},{},{},{}\n",
                id,
                feat,
                fmt(value_ds.x[[id, j]]),
                fmt(shap.values[[row, j]])
            ));
        }
    }

    let mut w = RunWriter::new(&out)?;
    w.write("importance.csv", importance.as_bytes())?;
    w.write("shap_long.csv", long.as_bytes())?;
    for (name, _) in ranking.entries.iter().take(top) {
        let pairs = dependence(&shap, &value_ds, name)?;
        let mut csv = String::from("value,shap\n");
        for (v, s) in pairs {
            csv.push_str(&format!("{},{}\n", fmt(v), fmt(s)));
        }
        w.write(&format!("dependence_{}.csv", sanitize(name)), csv.as_bytes())?;
    }
    if let Some(id) = sample {
        let row = shap
            .sample_ids
            .iter()
            .position(|&s| s == id)
            .ok_or_else(|| Error::Config(format!("sample {id} not in dataset")))?;
        let rows = waterfall(&shap, &value_ds, row)?;
        let mut csv = String::from("feature,value,shap\n");
        for (name, v, s) in rows {
            csv.push_str(&format!("{},{},{}\n", name, fmt(v), fmt(s)));
        }
        w.write(&format!("waterfall_{id}.csv"), csv.as_bytes())?;
    }
    w.finish(
        "explain",
        json!({
            "model": model_path,
            "input": input,
            "target": target,
            "top": top,
            "sample": sample,
            "base_value": shap.base_value,
        }),
        None,
    )?;
    println!(
        "explained {} samples x {} features -> {}",
        shap.sample_ids.len(),
        shap.feature_names.len(),
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_uncertainty(
    model_paths: Vec<PathBuf>,
    input: PathBuf,
    target: String,
    split_ratio: f64,
    seed: u64,
    z: f64,
    out: PathBuf,
) -> Result<(), Error> {
    let ds = load_csv(&input, None, &target)?;
    let split = split_n(ds.n_samples(), split_ratio, derive_seed(seed, 0))?;
    let mut reports: Vec<(String, UncertaintyReport, UncertaintyReport)> = Vec::new();
    for path in &model_paths {
        let model = load_model(path)?;
        check_features(&model, &ds)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| path.display().to_string());
        let part = |idx: &[usize]| -> Result<UncertaintyReport, Error> {
            let mut actual = Vec::with_capacity(idx.len());
            let mut predicted = Vec::with_capacity(idx.len());
            for &i in idx {
                actual.push(ds.y[i]);
                predicted.push(model.predict(ds.x.row(i).as_slice().expect("contiguous"))?);
            }
            uncertainty(&actual, &predicted, z)
        };
        reports.push((name, part(&split.train)?, part(&split.test)?));
    }
    let ranking = compare_uncertainty(&reports);

    let mut csv = String::from("model,partition,u_abs,u_norm,rmse,sigma,z,y_mean\n");
    for (name, train, test) in &reports {
        for (part, r) in [("train", train), ("test", test)] {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                name,
                part,
                fmt(r.u_abs),
                fmt(r.u_norm),
                fmt(r.rmse),
                fmt(r.sigma),
                fmt(r.z),
                fmt(r.y_mean)
            ));
        }
    }
    let mut rank_csv = String::from("rank,model,test_u_norm,train_u_norm,delta_norm\n");
    for r in &ranking {
        rank_csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.rank,
            r.model,
            fmt(r.test.u_norm),
            fmt(r.train.u_norm),
            fmt(r.delta_norm)
        ));
    }
    let mut w = RunWriter::new(&out)?;
    w.write("uncertainty.csv", csv.as_bytes())?;
    w.write("ranking.csv", rank_csv.as_bytes())?;
    w.finish(
        "uncertainty",
        json!({
            "models": model_paths,
            "input": input,
            "target": target,
            "split": split_ratio,
            "z": z,
        }),
        Some(seed),
    )?;
    println!(
        "ranked {} model(s) by test uncertainty -> {}",
        ranking.len(),
        out.display()
    );
    Ok(())
}
