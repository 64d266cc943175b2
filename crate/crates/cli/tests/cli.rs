//! CLI behavior tests: exit codes, artifact layout, manifest hashing, and
//! the command chain on a small synthetic dataset.

use std::path::Path;
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_strengthlab")
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn unknown_subcommand_exits_2() {
    let out = run(&["trane"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.to_lowercase().contains("usage") || stderr.contains("Usage"));
}

#[test]
fn missing_required_flag_exits_2() {
    let out = run(&["describe"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_error_exits_1() {
    let out = run(&[
        "describe",
        "--input",
        "/nonexistent/file.csv",
        "--target",
        "CS",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn describe_writes_stats_corr_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("data.csv");
    std::fs::write(&csv, "C,W,CS\n100,10,50\n200,20,60\n300,30,80\n150,12,55\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "describe",
        "--input",
        csv.to_str().unwrap(),
        "--target",
        "CS",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stats = std::fs::read_to_string(out_dir.join("stats.csv")).unwrap();
    assert!(stats.starts_with("column,mean,std,min,p25,p50,p75,max"));
    assert!(stats.contains("\nCS,"));
    let corr = std::fs::read_to_string(out_dir.join("corr.csv")).unwrap();
    assert!(corr.starts_with("column,C,W,CS"));
    assert!(out_dir.join("stats.json").exists());
    assert!(out_dir.join("corr.json").exists());

    // The manifest lists every artifact with its true content hash.
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "describe");
    let artifacts = manifest["artifacts"].as_array().unwrap();
    assert_eq!(artifacts.len(), 4);
    for a in artifacts {
        let path = out_dir.join(a["path"].as_str().unwrap());
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(
            a["sha256"].as_str().unwrap(),
            sha256_hex(&bytes),
            "hash mismatch for {path:?}"
        );
    }
}

fn tiny_spec_json() -> &'static str {
    r#"{"kind":"rf_lgbm","stage1":{"forest":{"tree":{"max_depth":null,"min_samples_split":2,"min_samples_leaf":1,"split_mode":"exact","feature_subsample":1.0,"seed":42},"n_estimators":15,"bootstrap":true}},"stage2":{"n_estimators":20,"learning_rate":0.1,"max_depth":3,"min_child_weight":1.0,"reg_alpha":0.0,"reg_lambda":1.0,"gamma":0.0,"subsample":1.0,"colsample_bytree":1.0,"loss":"squared_error","seed":42,"mode":"histogram","histogram":{"n_bins":63,"goss_a":0.3,"goss_b":0.2,"efb_conflict":0.0}},"seed":42}"#
}

fn synth_small(dir: &Path) -> std::path::PathBuf {
    let out = dir.join("data");
    let status = Command::new(bin())
        .args([
            "synth",
            "--preset",
            "table1",
            "--ground-truth",
            "cs_smooth",
            "--noise-std",
            "1.0",
            "--n",
            "150",
            "--seed",
            "3",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    out.join("synth.csv")
}

#[test]
fn train_evaluate_explain_uncertainty_chain() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synth_small(dir.path());
    let spec_path = dir.path().join("spec.json");
    std::fs::write(&spec_path, tiny_spec_json()).unwrap();

    let run_dir = dir.path().join("run");
    let out = run(&[
        "train",
        "--input",
        csv.to_str().unwrap(),
        "--target",
        "CS",
        "--kind",
        "rf_lgbm",
        "--params",
        spec_path.to_str().unwrap(),
        "--split",
        "0.8",
        "--seed",
        "7",
        "--out",
        run_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = std::fs::read_to_string(run_dir.join("metrics_test.csv")).unwrap();
    assert!(metrics.starts_with("n,r2,rmse,mae,rse,rrmse,pearson_r,pi,pi_eq12"));
    let preds = std::fs::read_to_string(run_dir.join("predictions.csv")).unwrap();
    assert!(preds.starts_with("index,partition,actual,predicted,within_10pct"));
    assert!(preds.contains(",train,"));
    assert!(preds.contains(",test,"));
    // 150 rows -> 120 train + 30 test points plus the header.
    assert_eq!(preds.lines().count(), 151);

    let model = run_dir.join("model.json");
    let eval_dir = dir.path().join("eval");
    let out = run(&[
        "evaluate",
        "--model",
        model.to_str().unwrap(),
        "--input",
        csv.to_str().unwrap(),
        "--target",
        "CS",
        "--out",
        eval_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(eval_dir.join("metrics.csv").exists());

    let explain_dir = dir.path().join("explain");
    let out = run(&[
        "explain",
        "--model",
        model.to_str().unwrap(),
        "--input",
        csv.to_str().unwrap(),
        "--target",
        "CS",
        "--top",
        "2",
        "--sample",
        "3",
        "--out",
        explain_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let importance = std::fs::read_to_string(explain_dir.join("importance.csv")).unwrap();
    assert!(importance.starts_with("feature,mean_abs_shap"));
    assert_eq!(importance.lines().count(), 19); // header + 18 features
    let long = std::fs::read_to_string(explain_dir.join("shap_long.csv")).unwrap();
    assert!(long.starts_with("sample_id,feature,value,shap"));
    assert_eq!(long.lines().count(), 1 + 150 * 18);
    assert!(explain_dir.join("waterfall_3.csv").exists());
    // Two dependence files for the top-2 features.
    let deps: Vec<_> = std::fs::read_dir(&explain_dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("dependence_"))
        .collect();
    assert_eq!(deps.len(), 2);

    let unc_dir = dir.path().join("unc");
    let out = run(&[
        "uncertainty",
        "--model",
        model.to_str().unwrap(),
        "--input",
        csv.to_str().unwrap(),
        "--target",
        "CS",
        "--split",
        "0.8",
        "--seed",
        "7",
        "--out",
        unc_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let ranking = std::fs::read_to_string(unc_dir.join("ranking.csv")).unwrap();
    assert!(ranking.starts_with("rank,model,test_u_norm,train_u_norm,delta_norm"));
    assert!(ranking.lines().nth(1).unwrap().starts_with("1,model,"));
}

#[test]
fn evaluate_rejects_mismatched_features() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synth_small(dir.path());
    let spec_path = dir.path().join("spec.json");
    std::fs::write(&spec_path, tiny_spec_json()).unwrap();
    let run_dir = dir.path().join("run");
    assert!(run(&[
        "train",
        "--input",
        csv.to_str().unwrap(),
        "--target",
        "CS",
        "--kind",
        "rf_lgbm",
        "--params",
        spec_path.to_str().unwrap(),
        "--seed",
        "7",
        "--out",
        run_dir.to_str().unwrap(),
    ])
    .status
    .success());
    let other = dir.path().join("other.csv");
    std::fs::write(&other, "A,B,CS\n1,2,3\n4,5,6\n").unwrap();
    let out = run(&[
        "evaluate",
        "--model",
        run_dir.join("model.json").to_str().unwrap(),
        "--input",
        other.to_str().unwrap(),
        "--target",
        "CS",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn tune_writes_trials_and_best_spec() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synth_small(dir.path());
    // Shrink the ensembles through the search space so trials stay fast.
    let space = r#"{"params":[
        ["stage1.n_estimators",{"int_uniform":{"lo":5,"hi":10}}],
        ["stage2.n_estimators",{"int_uniform":{"lo":5,"hi":10}}],
        ["stage2.learning_rate",{"log_uniform":{"lo":0.05,"hi":0.5}}],
        ["stage2.max_depth",{"choice":[2.0,3.0]}]
    ]}"#;
    let space_path = dir.path().join("space.json");
    std::fs::write(&space_path, space).unwrap();
    let tune_dir = dir.path().join("tune");
    let out = run(&[
        "tune",
        "--input",
        csv.to_str().unwrap(),
        "--target",
        "CS",
        "--kind",
        "et_xgb",
        "--budget",
        "3",
        "--k",
        "3",
        "--seed",
        "5",
        "--space",
        space_path.to_str().unwrap(),
        "--out",
        tune_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let trials = std::fs::read_to_string(tune_dir.join("trials.jsonl")).unwrap();
    let lines: Vec<&str> = trials.lines().collect();
    assert_eq!(lines.len(), 3);
    for (i, line) in lines.iter().enumerate() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["draw_index"], i);
        assert!(v["mean"].as_f64().unwrap().is_finite());
        assert_eq!(v["fold_objectives"].as_array().unwrap().len(), 3);
    }
    let best = std::fs::read_to_string(tune_dir.join("best_spec.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&best).unwrap();
    assert_eq!(v["kind"], "et_xgb");
    let n = v["stage1"]["forest"]["n_estimators"].as_u64().unwrap();
    assert!((5..=10).contains(&n));
}

#[test]
fn synth_from_stats_file_and_constant_truth() {
    let dir = tempfile::tempdir().unwrap();
    let stats = "column,mean,std,min,p25,p50,p75,max\nA,5,1,2,4,5,6,8\nB,0.5,0.2,0,0.3,0.5,0.7,1\nT,10,2,5,8,10,12,15\n";
    let stats_path = dir.path().join("stats.csv");
    std::fs::write(&stats_path, stats).unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "synth",
        "--stats",
        stats_path.to_str().unwrap(),
        "--ground-truth",
        "constant:55.31",
        "--n",
        "40",
        "--seed",
        "1",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("synth.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "A,B,T");
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        let a: f64 = cells[0].parse().unwrap();
        assert!((2.0..=8.0).contains(&a));
        assert_eq!(cells[2], "55.31");
    }
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synth_small(dir.path());
    let spec_path = dir.path().join("spec.json");
    std::fs::write(&spec_path, tiny_spec_json()).unwrap();
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        assert!(run(&[
            "train",
            "--input",
            csv.to_str().unwrap(),
            "--target",
            "CS",
            "--kind",
            "rf_lgbm",
            "--params",
            spec_path.to_str().unwrap(),
            "--seed",
            "9",
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .status
        .success());
        outputs.push(std::fs::read(out_dir.join("model.json")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}
