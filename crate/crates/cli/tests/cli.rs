use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hdmean::gauss_sampling::sample_compound_fast;
use hdmean::io::write_dataset_path;
use hdmean::SeedSpec;
use serde_json::Value;

fn hdmean(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdmean"))
        .args(args)
        .env_remove("HDMEAN_SEED")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hdmean-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn compound_file(dir: &Path, name: &str, p: usize, r: f64, n: usize, seed: u64) -> String {
    let path = dir.join(name);
    write_dataset_path(
        &path,
        &sample_compound_fast(p, r, n, SeedSpec::new(seed, 0)).unwrap(),
        true,
    )
    .unwrap();
    path.to_str().unwrap().to_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_usage_exit_codes() {
    assert_eq!(hdmean(&["--help"]).status.code(), Some(0));
    assert_eq!(hdmean(&["--version"]).status.code(), Some(0));
    assert_eq!(hdmean(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(hdmean(&["test1"]).status.code(), Some(1));
    assert_eq!(hdmean(&["test1", "/no/such/file.csv"]).status.code(), Some(1));
}

#[test]
fn test1_report_schema() {
    let dir = scratch("schema");
    let data = compound_file(&dir, "id.csv", 40, 0.0, 25, 1);
    let out = hdmean(&[
        "test1",
        &data,
        "--variant",
        "tp1",
        "--law",
        "normal",
        "--mc-draws",
        "20000",
    ]);
    let v = stdout_json(&out);
    let pv = v["p_value"].as_f64().unwrap();
    assert!(pv > 0.0 && pv < 1.0);
    assert_eq!(v["variant"], "T_P1");
    assert_eq!(v["p"], 40);
    assert_eq!(v["n"], 25);
    for key in ["statistic", "numerator", "denominator"] {
        assert!(v[key].is_f64(), "{key}");
    }
    assert!(v["denominator_flipped"].is_boolean());
    assert!(v["trace_estimate"]["estimate"].is_f64());
    assert_eq!(v["law"]["b"], 1.0);
    assert!(v["seed"]["master_seed"].is_u64());
}

#[test]
fn duplicated_columns_hand_value() {
    let dir = scratch("dup");
    let path = dir.join("dup.csv");
    let rows: String = [1.0, -1.0, 0.0, 2.0, 3.0]
        .iter()
        .map(|x| format!("{x},{x},{x}\n"))
        .collect();
    fs::write(&path, format!("a,b,c\n{rows}")).unwrap();
    let v = stdout_json(&hdmean(&[
        "test1",
        s(&path),
        "--variant",
        "tsd",
        "--law",
        "normal",
        "--mc-draws",
        "1000",
    ]));
    assert!((v["statistic"].as_f64().unwrap() - 0.408248290463863).abs() < 1e-5);
}

#[test]
fn constant_column_exits_2_and_names_it() {
    let dir = scratch("const");
    let path = dir.join("c.csv");
    fs::write(&path, "alpha,beta,gamma\n1,5,1\n-1,5,-2\n0,5,0\n2,5,2\n3,5,7\n").unwrap();
    let out = hdmean(&["test1", s(&path), "--variant", "tsd"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("column 2") && err.contains("beta"), "{err}");
}

#[test]
fn test2_same_file_twice() {
    let dir = scratch("same");
    let data = compound_file(&dir, "a.csv", 50, 0.0, 30, 2);
    let v = stdout_json(&hdmean(&[
        "test2",
        &data,
        &data,
        "--variant",
        "tp2",
        "--law",
        "normal",
        "--mc-draws",
        "20000",
    ]));
    let (big_n, p) = (60.0, 50.0);
    let expected = -(big_n - 1.0) * p / (big_n - 4.0);
    assert!((v["numerator"].as_f64().unwrap() - expected).abs() < 1e-9);
    assert!(v["p_value"].as_f64().unwrap() > 0.99);
}

#[test]
fn test2_mismatched_columns_exit_1() {
    let dir = scratch("mismatch");
    let a = compound_file(&dir, "a.csv", 10, 0.0, 8, 3);
    let b = compound_file(&dir, "b.csv", 11, 0.0, 8, 4);
    let out = hdmean(&["test2", &a, &b, "--variant", "tsd2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn test2_auto_law_finds_the_spike() {
    let dir = scratch("auto");
    let a = compound_file(&dir, "a.csv", 100, 0.5, 30, 5);
    let b = compound_file(&dir, "b.csv", 100, 0.5, 30, 6);
    let v = stdout_json(&hdmean(&[
        "test2",
        &a,
        &b,
        "--variant",
        "tp2",
        "--law",
        "auto",
        "--mc-draws",
        "20000",
    ]));
    assert!(!v["law"]["rho"].as_array().unwrap().is_empty());
}

#[test]
fn law_file_and_cf_method() {
    let dir = scratch("lawfile");
    let data = compound_file(&dir, "a.csv", 30, 0.0, 20, 7);
    let rho = dir.join("rho.csv");
    fs::write(&rho, "0.6,0.3\n").unwrap();
    let mc = stdout_json(&hdmean(&["test1", &data, "--law", s(&rho)]));
    let cf = stdout_json(&hdmean(&["test1", &data, "--law", s(&rho), "--method", "cf"]));
    assert_eq!(mc["law"]["rho"], serde_json::json!([0.6, 0.3]));
    let (a, b) = (mc["p_value"].as_f64().unwrap(), cf["p_value"].as_f64().unwrap());
    assert!((a - b).abs() < 0.01, "{a} vs {b}");
    assert!(cf.get("seed").is_none());
}

#[test]
fn seed_flag_and_env_are_deterministic() {
    let dir = scratch("seed");
    let data = compound_file(&dir, "a.csv", 30, 0.3, 20, 8);
    let run = |seed: &str| hdmean(&["test1", &data, "--seed", seed, "--mc-draws", "5000"]).stdout;
    assert_eq!(run("11"), run("11"));
    let env = Command::new(env!("CARGO_BIN_EXE_hdmean"))
        .args(["test1", &data, "--mc-draws", "5000"])
        .env("HDMEAN_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(env.stdout, run("11"));
}

#[test]
fn simulate_writes_artifacts() {
    let dir = scratch("sim");
    let cfg = dir.join("cfg.json");
    fs::write(
        &cfg,
        r#"{"variant":"T_SD","model":{"kind":"all_equal"},"n":20,"p":50,"reps":10000,"seed":3,"law":"exact"}"#,
    )
    .unwrap();
    let out1 = dir.join("run1");
    let out2 = dir.join("run2");
    let v = stdout_json(&hdmean(&["simulate", s(&cfg), "--out", s(&out1)]));
    assert!(v["ks"].as_f64().unwrap() < 0.02, "{v}");
    hdmean(&["simulate", s(&cfg), "--out", s(&out2), "--threads", "2"]);
    let draws = fs::read(out1.join("draws.csv")).unwrap();
    assert_eq!(draws, fs::read(out2.join("draws.csv")).unwrap());
    assert_eq!(String::from_utf8_lossy(&draws).lines().count(), 10_001);
    let summary: Value = serde_json::from_slice(&fs::read(out1.join("summary.json")).unwrap()).unwrap();
    for key in ["ks", "seed", "runtime_seconds"] {
        assert!(summary.get(key).is_some(), "{key}");
    }
    let density = fs::read_to_string(out1.join("density.csv")).unwrap();
    assert!(density.starts_with("x,empirical,theoretical\n"));
}

#[test]
fn simulate_rejects_small_reps() {
    let dir = scratch("simbad");
    let cfg = dir.join("cfg.json");
    fs::write(
        &cfg,
        r#"{"variant":"T_P1","model":{"kind":"identity"},"n":20,"p":30,"reps":50,"seed":1}"#,
    )
    .unwrap();
    let out = hdmean(&["simulate", s(&cfg), "--out", s(&dir.join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("reps"));
}

#[test]
fn matgen_models() {
    let out = hdmean(&["matgen", "--model", "cs", "--p", "3", "--r", "0.5"]);
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        "1,0.5,0.5\n0.5,1,0.5\n0.5,0.5,1\n"
    );
    let out = hdmean(&["matgen", "--model", "ar1", "--p", "3", "--gamma", "0.5"]);
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        "1,0.5,0.25\n0.5,1,0.5\n0.25,0.5,1\n"
    );

    let dir = scratch("matgen");
    let file = dir.join("m.csv");
    let out = hdmean(&[
        "matgen",
        "--model",
        "spectrum",
        "--lambdas",
        "2.5,0.3,0.2",
        "--out",
        s(&file),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&file).unwrap();
    assert_eq!(text.lines().count(), 3);

    let out = hdmean(&["matgen", "--model", "spectrum", "--lambdas", "0.5,0.5,0.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("not a correlation spectrum"));
    assert_eq!(hdmean(&["matgen", "--model", "cs", "--p", "3"]).status.code(), Some(1));
}

#[test]
fn moments_agree() {
    let dir = scratch("moments");
    let file = dir.join("r4.csv");
    fs::write(&file, "1,0.6,0.5,0.3\n0.6,1,0.3,0.4\n0.5,0.3,1,0.5\n0.3,0.4,0.5,1\n").unwrap();
    let v = stdout_json(&hdmean(&["moments", s(&file), "--m", "50"]));
    let rows = v["moments"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows {
        assert!(r["abs_diff"].as_f64().unwrap() < 1e-12, "{r}");
    }
    assert!(v["cov_b1_b2"]["value"].is_f64());
    let csv = hdmean(&["moments", s(&file), "--format", "csv"]);
    assert!(String::from_utf8_lossy(&csv.stdout).starts_with("kind,closed_form,isserlis,abs_diff\n"));
}

#[test]
fn law_evaluation() {
    let v = stdout_json(&hdmean(&["law", "--rho", "1", "--at", "-1,0,1", "--method", "cf"]));
    let pts = v["points"].as_array().unwrap();
    assert_eq!(pts[0]["cdf"], 0.0);
    assert_eq!(pts[0]["density"], 0.0);
    let tail = pts[2]["upper_tail"].as_f64().unwrap();
    // P((χ²₁ − 1)/√2 > 1) = P(χ²₁ > 1 + √2)
    assert!((tail - 0.12034).abs() < 1e-3, "{tail}");
    let out = hdmean(&["law", "--example1", "1", "--at", "0", "--format", "csv"]);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("x,cdf,upper_tail,density\n"));
}
