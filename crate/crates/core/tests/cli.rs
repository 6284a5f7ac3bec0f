//! Runs the `advlcd` binary end to end.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn advlcd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_advlcd")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json_stdout(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn gen_train_attack_rank() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = d.join("data");
    let out = advlcd(&["--json", "gen", "--out", s(&data), "--n-graphs", "30", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = json_stdout(&out);
    assert_eq!(manifest["graphs"], 60);
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["separability"], "separable");
    for f in ["dataset.jsonl", "manifest.json", "config.json"] {
        assert!(data.join(f).exists(), "{f}");
    }

    let target = d.join("target");
    let dataset = data.join("dataset.jsonl");
    let out = advlcd(&["--json", "train-target", "--dataset", s(&dataset), "--out", s(&target), "--wl-iters", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json_stdout(&out)["train_accuracy"].as_f64().unwrap() > 0.8);
    assert!(target.join("target.json").exists());

    let atk = d.join("attack");
    let model = target.join("target.json");
    let args = [
        "--json", "--workers", "2", "attack", "--model", s(&model), "--dataset", s(&dataset), "--out", s(&atk),
        "--r", "0.0025", "--strategy", "shortest_path", "--surrogate", "svm_linear", "--max-queries", "12",
        "--k-candidates", "4", "--rounds", "3", "--oracle", "label", "--seed", "9", "--wl-iters", "2",
    ];
    let out = advlcd(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let res = json_stdout(&out);
    assert!(res["decline"].as_f64().unwrap() <= 0.0);
    let echo: serde_json::Value = serde_json::from_str(&fs::read_to_string(atk.join("config.json")).unwrap()).unwrap();
    assert_eq!(echo["attack"]["strategy"], "shortest_path");
    assert_eq!(echo["attack"]["max_queries"], 12);
    assert_eq!(echo["oracle"], "label");
    let summary = fs::read_to_string(atk.join("summary.json")).unwrap();

    // Same run with a different worker count gives the same summary.
    let atk2 = d.join("attack2");
    let mut args2 = args.to_vec();
    args2[2] = "1";
    args2[9] = s(&atk2);
    assert_eq!(advlcd(&args2).status.code(), Some(0));
    assert_eq!(fs::read_to_string(atk2.join("summary.json")).unwrap(), summary);

    // Without --json nothing goes to stdout.
    let out = advlcd(&["train-target", "--dataset", s(&dataset), "--out", s(&d.join("t2"))]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn bench_and_rank() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let spec = d.join("spec.json");
    fs::write(
        &spec,
        r#"{"repetitions": 2,
            "datasets": [{"name": "small", "generator": {"n_graphs_per_class": 15}}],
            "methods": [{"name": "eig", "strategy": "eigencentrality"}, {"name": "rw", "strategy": "random_walk"}],
            "budgets": [0.0011111111111111111],
            "attack": {"max_queries": 6, "k_candidates": 3}}"#,
    )
    .unwrap();
    let out_dir = d.join("bench");
    let out = advlcd(&["--json", "bench", "--spec", s(&spec), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["results_0.csv", "rank_0.json", "rank_0.csv", "cd_0.txt", "budget_sweep.csv", "clean_accuracy.csv", "audit.json", "config.json"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let table = out_dir.join("results_0.csv");
    let out = advlcd(&["--json", "rank", "--table", s(&table), "--alpha", "0.1", "--out", s(&d.join("rank"))]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json_stdout(&out);
    assert_eq!(report["k"], 2);
    assert_eq!(report["alpha"], 0.1);
    assert!(d.join("rank/cd.txt").exists());
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = s(d);
    assert_eq!(advlcd(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(advlcd(&["gen"]).status.code(), Some(2));
    assert_eq!(advlcd(&["gen", "--out", o, "--n-graphs", "0"]).status.code(), Some(2));
    assert_eq!(advlcd(&["gen", "--out", o, "--delta", "nan"]).status.code(), Some(2));
    assert_eq!(advlcd(&["bench", "--preset", "nope", "--out", o]).status.code(), Some(2));

    let empty = d.join("empty.json");
    fs::write(&empty, "{}").unwrap();
    let out = advlcd(&["bench", "--spec", s(&empty), "--out", o]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no datasets"));

    let unknown = d.join("unknown.json");
    fs::write(&unknown, r#"{"seeed": 1}"#).unwrap();
    assert_eq!(advlcd(&["gen", "--config", s(&unknown), "--out", o]).status.code(), Some(2));

    let bad = d.join("bad.csv");
    fs::write(&bad, "not,a,table\n").unwrap();
    assert_eq!(advlcd(&["rank", "--table", s(&bad)]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = d.join("missing.jsonl");
    let out = advlcd(&["train-target", "--dataset", s(&missing), "--out", s(d)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());

    let garbage = d.join("target.json");
    fs::write(&garbage, "{\"format\": \"something-else\"}").unwrap();
    let out = advlcd(&["attack", "--model", s(&garbage), "--dataset", s(&missing), "--out", s(d)]);
    assert_eq!(out.status.code(), Some(3));
}
