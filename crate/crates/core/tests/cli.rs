//! End-to-end runs of the `wspls` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ndarray::Array1;
use serde_json::Value;
use tempfile::TempDir;

use wspls::cli::io::read_matrix;
use wspls::simbench::{score, Estimate, PlantedTruth, METRIC_NAMES};

fn wspls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wspls"))
        .args(args)
        .env_remove("COMODULE_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = wspls(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn floats(v: &Value) -> Array1<f64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

fn simulate(dir: &TempDir, seed: &str) -> PathBuf {
    let out = dir.path().to_path_buf();
    ok(&[
        "simulate",
        "--scenario",
        "I",
        "--seed",
        seed,
        "--out",
        out.to_str().unwrap(),
    ]);
    out
}

#[test]
fn simulate_writes_scenario_shapes() {
    let dir = TempDir::new().unwrap();
    let out = simulate(&dir, "7");
    let x = read_matrix(&out.join("X.csv")).unwrap();
    let y = read_matrix(&out.join("Y.csv")).unwrap();
    assert_eq!((x.nrows(), x.ncols()), (50, 80));
    assert_eq!((y.nrows(), y.ncols()), (50, 100));
    let truth = json(&out.join("truth.json"));
    assert_eq!(truth["kind"], "truth");
    assert_eq!(truth["index_base"], 0);
    assert_eq!(
        floats(&truth["w"]).iter().filter(|w| **w != 0.0).count(),
        25
    );
}

#[test]
fn simulate_is_byte_identical_on_rerun() {
    let dir = TempDir::new().unwrap();
    let out = simulate(&dir, "7");
    let first: Vec<Vec<u8>> = ["X.csv", "Y.csv", "truth.json"]
        .iter()
        .map(|f| fs::read(out.join(f)).unwrap())
        .collect();
    simulate(&dir, "7");
    for (name, bytes) in ["X.csv", "Y.csv", "truth.json"].iter().zip(&first) {
        assert_eq!(&fs::read(out.join(name)).unwrap(), bytes, "{name} changed");
    }
}

#[test]
fn custom_shapes_are_honored() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&[
        "simulate",
        "--scenario",
        "custom",
        "--n",
        "10",
        "--p",
        "4",
        "--q",
        "5",
        "--out",
        d,
    ]);
    let x = read_matrix(&dir.path().join("X.csv")).unwrap();
    let y = read_matrix(&dir.path().join("Y.csv")).unwrap();
    assert_eq!((x.nrows(), x.ncols(), y.ncols()), (10, 4, 5));
}

#[test]
fn environment_seed_overrides_flag() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    simulate(&a, "3");
    let status = Command::new(env!("CARGO_BIN_EXE_wspls"))
        .args([
            "simulate",
            "--scenario",
            "I",
            "--seed",
            "99",
            "--out",
            b.path().to_str().unwrap(),
        ])
        .env("COMODULE_SEED", "3")
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(
        fs::read(a.path().join("X.csv")).unwrap(),
        fs::read(b.path().join("X.csv")).unwrap()
    );
    assert_eq!(json(&b.path().join("truth.json"))["manifest"]["seed"], 3);
}

#[test]
fn fit_then_score_matches_library_scoring() {
    let dir = TempDir::new().unwrap();
    let out = simulate(&dir, "11");
    let (x, y) = (path(&out, "X.csv"), path(&out, "Y.csv"));
    let solution = path(&out, "solution.json");
    let report = path(&out, "report.json");
    ok(&[
        "fit",
        "--method",
        "wspls",
        "--data",
        &x,
        &y,
        "--ku",
        "20",
        "--kv",
        "30",
        "--kw",
        "25",
        "--preprocess",
        "none",
        "--out",
        &solution,
    ]);
    ok(&[
        "score",
        "--solution",
        &solution,
        "--truth",
        &path(&out, "truth.json"),
        "--out",
        &report,
    ]);

    let sol = json(Path::new(&solution));
    assert_eq!(sol["kind"], "solution");
    assert_eq!(sol["index_base"], 0);
    assert_eq!(sol["manifest"]["inputs"].as_array().unwrap().len(), 2);
    let truth = json(&out.join("truth.json"));
    let planted = PlantedTruth {
        u: floats(&truth["u"]),
        v: floats(&truth["v"]),
        w: floats(&truth["w"]),
    };
    let estimate = Estimate {
        u: floats(&sol["loadings"][0]),
        v: floats(&sol["loadings"][1]),
        w: Some(floats(&sol["w"])),
    };
    let direct = score(&estimate, &planted).unwrap();
    let rep = json(Path::new(&report));
    let metrics = &rep["metrics"];
    for (target, m) in [
        ("u", direct.u),
        ("v", direct.v),
        ("w", direct.w),
        ("all", direct.all),
    ] {
        assert_eq!(metrics[target]["tpr"].as_f64().unwrap(), m.tpr);
        assert_eq!(metrics[target]["tnr"].as_f64().unwrap(), m.tnr);
        assert_eq!(metrics[target]["acc"].as_f64().unwrap(), m.acc);
    }
    assert!(
        direct.all.acc > 0.9,
        "planted supports should be recovered, acc {}",
        direct.all.acc
    );
    assert!(out.join("report.csv").exists());
}

#[test]
fn pls_omits_weights_and_scores_as_all_ones() {
    let dir = TempDir::new().unwrap();
    let out = simulate(&dir, "12");
    let solution = path(&out, "pls.json");
    let report = path(&out, "pls_report.json");
    ok(&[
        "fit",
        "--method",
        "pls",
        "--data",
        &path(&out, "X.csv"),
        &path(&out, "Y.csv"),
        "--out",
        &solution,
    ]);
    let sol = json(Path::new(&solution));
    assert!(sol.get("w").is_none_or(Value::is_null));
    ok(&[
        "score",
        "--solution",
        &solution,
        "--truth",
        &path(&out, "truth.json"),
        "--out",
        &report,
    ]);
    let w = &json(Path::new(&report))["metrics"]["w"];
    assert_eq!(w["tpr"].as_f64().unwrap(), 1.0);
    assert_eq!(w["tnr"].as_f64().unwrap(), 0.0);
}

#[test]
fn fit_rerun_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let out = simulate(&dir, "13");
    let solution = path(&out, "s.json");
    let args = [
        "fit",
        "--method",
        "wspls",
        "--data",
        &path(&out, "X.csv"),
        &path(&out, "Y.csv"),
        "--ku",
        "20",
        "--kv",
        "30",
        "--kw",
        "0.5",
        "--seed",
        "4",
        "--out",
        &solution,
    ];
    ok(&args);
    let first = fs::read(&solution).unwrap();
    ok(&["--threads", "1", "fit"]
        .iter()
        .chain(&args[1..])
        .copied()
        .collect::<Vec<_>>());
    assert_eq!(fs::read(&solution).unwrap(), first);
}

#[test]
fn fractional_sample_budget_is_floored() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&[
        "simulate",
        "--scenario",
        "custom",
        "--n",
        "89",
        "--p",
        "40",
        "--q",
        "60",
        "--seed",
        "1",
        "--out",
        d,
    ]);
    let solution = path(dir.path(), "s.json");
    ok(&[
        "fit",
        "--data",
        &path(dir.path(), "X.csv"),
        &path(dir.path(), "Y.csv"),
        "--ku",
        "10",
        "--kv",
        "10",
        "--kw",
        "0.8",
        "--out",
        &solution,
    ]);
    let sol = json(Path::new(&solution));
    assert_eq!(sol["manifest"]["config"]["kw"], "0.8");
    let selected = sol["selected_samples"].as_array().unwrap().len();
    assert!(selected <= 71 && selected > 0);
    let nnz = floats(&sol["w"]).iter().filter(|w| **w != 0.0).count();
    assert_eq!(nnz, selected);
}

#[test]
fn bench_summary_re_aggregates_from_runs() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&[
        "bench",
        "--scenario",
        "I",
        "--runs",
        "2",
        "--methods",
        "pls,pmd,l0spls,l2l0,wspls",
        "--out",
        d,
    ]);

    let mut summary = csv::Reader::from_path(dir.path().join("summary.csv")).unwrap();
    let header = summary.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = summary.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 5);

    let mut runs = csv::Reader::from_path(dir.path().join("runs.csv")).unwrap();
    let run_header = runs.headers().unwrap().clone();
    let run_rows: Vec<csv::StringRecord> = runs.records().map(Result::unwrap).collect();
    assert_eq!(run_rows.len(), 10);

    for row in &rows {
        let method = &row[0];
        for metric in METRIC_NAMES {
            let col = run_header.iter().position(|h| h == metric).unwrap();
            let values: Vec<f64> = run_rows
                .iter()
                .filter(|r| &r[0] == method)
                .map(|r| r[col].parse().unwrap())
                .collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let var =
                values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
            let get = |name: String| -> f64 {
                row[header.iter().position(|h| h == name).unwrap()]
                    .parse()
                    .unwrap()
            };
            assert!(
                (get(format!("{metric}_mean")) - mean).abs() <= 1e-12,
                "{method} {metric} mean"
            );
            let sd = get(format!("{metric}_std"));
            assert!(sd.is_finite());
            assert!((sd - var.sqrt()).abs() <= 1e-12, "{method} {metric} std");
        }
    }
}

#[test]
fn extract_reports_partial_results_when_samples_run_out() {
    let dir = TempDir::new().unwrap();
    let out = simulate(&dir, "5");
    let modules = path(&out, "modules.json");
    let result = wspls(&[
        "extract",
        "--data",
        &path(&out, "X.csv"),
        &path(&out, "Y.csv"),
        "--ku",
        "20",
        "--kv",
        "30",
        "--kw",
        "25",
        "--rounds",
        "3",
        "--out",
        &modules,
    ]);
    assert_eq!(result.status.code(), Some(4));
    let file = json(Path::new(&modules));
    assert_eq!(file["kind"], "modules");
    assert_eq!(file["complete"], false);
    assert!(!file["failure"].is_null());
    assert_eq!(file["modules"].as_array().unwrap().len(), 1);
}

#[test]
fn extract_single_round_equals_fit() {
    let dir = TempDir::new().unwrap();
    let out = simulate(&dir, "6");
    let (x, y) = (path(&out, "X.csv"), path(&out, "Y.csv"));
    let modules = path(&out, "modules.json");
    let solution = path(&out, "solution.json");
    let budgets = ["--ku", "20", "--kv", "30", "--kw", "25", "--seed", "2"];
    ok(&[
        &["extract", "--data", &x, &y, "--out", &modules][..],
        &budgets,
    ]
    .concat());
    ok(&[&["fit", "--data", &x, &y, "--out", &solution][..], &budgets].concat());
    let module = &json(Path::new(&modules))["modules"][0];
    let sol = json(Path::new(&solution));
    assert_eq!(module["sample_indices"], sol["selected_samples"]);
    assert_eq!(module["feature_indices"], sol["supports"]);
}

#[test]
fn score_without_truth_reports_s_and_optional_p() {
    let dir = TempDir::new().unwrap();
    let out = simulate(&dir, "8");
    let (x, y) = (path(&out, "X.csv"), path(&out, "Y.csv"));
    let solution = path(&out, "solution.json");
    ok(&[
        "fit", "--data", &x, &y, "--ku", "20", "--kv", "30", "--kw", "25", "--out", &solution,
    ]);

    let plain = path(&out, "plain.json");
    ok(&[
        "score",
        "--solution",
        &solution,
        "--data",
        &x,
        &y,
        "--out",
        &plain,
    ]);
    let module = &json(Path::new(&plain))["modules"][0];
    assert!(module["s_score"].as_f64().unwrap() > 0.0);
    assert!(module.get("p_value").is_none_or(Value::is_null));

    let tested = path(&out, "tested.json");
    ok(&[
        "score",
        "--solution",
        &solution,
        "--data",
        &x,
        &y,
        "--n-perm",
        "99",
        "--out",
        &tested,
    ]);
    let module = &json(Path::new(&tested))["modules"][0];
    let p = module["p_value"].as_f64().unwrap();
    assert!(p > 0.0 && p <= 1.0);
    assert_eq!(module["n_perm"], 99);
}

#[test]
fn score_rejects_mismatched_data() {
    let dir = TempDir::new().unwrap();
    let out = simulate(&dir, "9");
    let solution = path(&out, "solution.json");
    ok(&[
        "fit",
        "--data",
        &path(&out, "X.csv"),
        &path(&out, "Y.csv"),
        "--ku",
        "20",
        "--kv",
        "30",
        "--kw",
        "25",
        "--out",
        &solution,
    ]);
    let result = wspls(&[
        "score",
        "--solution",
        &solution,
        "--data",
        &path(&out, "Y.csv"),
        &path(&out, "X.csv"),
        "--out",
        &path(&out, "r.json"),
    ]);
    assert_eq!(result.status.code(), Some(3));
}

#[test]
fn parse_errors_exit_with_data_code_and_location() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "1,2,3\n4,oops,6\n7,8,9\n").unwrap();
    let good = dir.path().join("good.csv");
    fs::write(&good, "1,2\n3,4\n5,7\n").unwrap();
    let result = wspls(&[
        "fit",
        "--method",
        "pls",
        "--data",
        bad.to_str().unwrap(),
        good.to_str().unwrap(),
        "--out",
        &path(dir.path(), "s.json"),
    ]);
    assert_eq!(result.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(
        stderr.contains("row 2") && stderr.contains("column 2"),
        "{stderr}"
    );
}

#[test]
fn usage_errors_exit_with_code_two() {
    assert_eq!(wspls(&["fit"]).status.code(), Some(2));
    assert_eq!(
        wspls(&["simulate", "--scenario", "IV"]).status.code(),
        Some(2)
    );
    let dir = TempDir::new().unwrap();
    let out = simulate(&dir, "1");
    let result = wspls(&[
        "fit",
        "--data",
        &path(&out, "X.csv"),
        &path(&out, "Y.csv"),
        "--ku",
        "0",
        "--kv",
        "3",
        "--kw",
        "5",
        "--out",
        &path(&out, "s.json"),
    ]);
    assert_eq!(result.status.code(), Some(2));
}
