use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noisy-quicksort"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = cli(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn rho_command() {
    let v: serde_json::Value = serde_json::from_str(&stdout(&["rho", "--format", "json"])).unwrap();
    assert!((v["rho"].as_f64().unwrap() - 0.792977).abs() < 1e-6);
    assert!(v["residual"].as_f64().unwrap().abs() < 1e-8);
    assert!((v["mergesort_series"].as_f64().unwrap() - 0.454674373).abs() < 1e-9);
    assert!(stdout(&["rho"]).starts_with("name,value\n"));
}

#[test]
fn moments_command_emits_exact_pairs() {
    let v: serde_json::Value = serde_json::from_str(&stdout(&["moments", "--order", "2", "--format", "json"])).unwrap();
    assert_eq!(v["psi"][2][2], serde_json::json!(["7", "5"]));
    assert_eq!(v["lambda_pow_n_moment_X"][2][2], serde_json::json!(["13", "12"]));
    let csv = stdout(&["moments", "--order", "2"]);
    assert!(csv.contains("P,2,2,7,3\n"));
    assert_eq!(cli(&["moments", "--order", "21"]).status.code(), Some(2));
}

#[test]
fn simulate_is_deterministic() {
    let a = stdout(&["simulate", "--n", "300", "--p", "0.01", "--replicates", "200", "--seed", "5"]);
    let b = stdout(&["simulate", "--n", "300", "--p", "0.01", "--replicates", "200", "--seed", "5"]);
    let c = stdout(&["simulate", "--n", "300", "--p", "0.01", "--replicates", "200", "--seed", "6"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(cli(&["simulate", "--n", "10", "--p", "0"]).status.code(), Some(2));
    assert_eq!(cli(&["simulate", "--n", "10", "--p", "1.5"]).status.code(), Some(2));
}

#[test]
fn sample_command_writes_sorted_values() {
    let dir = tempfile::tempdir().unwrap();
    for law in ["xc", "xhat", "xlambda", "theta", "xi"] {
        let out = dir.path().join(format!("{law}.csv"));
        let o = out.to_str().unwrap();
        stdout(&["sample", law, "--replicates", "1000", "--c", "0.25", "--depth", "12", "--out", o]);
        let first = std::fs::read(&out).unwrap();
        stdout(&["sample", law, "--replicates", "1000", "--c", "0.25", "--depth", "12", "--out", o]);
        assert_eq!(first, std::fs::read(&out).unwrap(), "{law}");
        let values: Vec<f64> = String::from_utf8(first).unwrap().lines().map(|l| l.parse().unwrap()).collect();
        assert!(values.len() >= 1000);
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
    }
    assert_eq!(cli(&["sample", "xlambda", "--lambda", "-1"]).status.code(), Some(2));
    assert_eq!(cli(&["sample", "xc", "--c", "2"]).status.code(), Some(2));
}

#[test]
fn fragtree_dump() {
    let v: serde_json::Value = serde_json::from_str(&stdout(&["fragtree", "--depth", "3", "--format", "json"])).unwrap();
    assert_eq!(v["levels"][3].as_array().unwrap().len(), 9);
    assert_eq!(cli(&["fragtree", "--depth", "31"]).status.code(), Some(2));
}

#[test]
fn oracle_command() {
    let out = stdout(&["oracle", "--replicates", "20000", "--seed", "3"]);
    assert_eq!(out.lines().count(), 21);
    assert!(out.lines().skip(1).all(|l| l.ends_with(",true,") || l.ends_with("true")));
}

#[test]
fn compare_outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "config.json",
        r#"{"regime": {"kind": "lambda_over_n", "lambda_values": [2.0]},
            "n_values": [100, 400], "replicates": 500, "seed": 4, "depth": 15}"#,
    );
    let out = dir.path().join("a.csv");
    let run = || {
        let status = cli(&["compare", "--config", &config, "--out", out.to_str().unwrap()]).status;
        assert!(status.code() == Some(0) || status.code() == Some(1));
        (
            std::fs::read(&out).unwrap(),
            std::fs::read(dir.path().join("a.csv.meta.json")).unwrap(),
        )
    };
    let a = run();
    let b = run();
    assert_eq!(a, b);
    assert!(dir.path().join("a.csv.timing.json").exists());
    let header = String::from_utf8(a.0).unwrap();
    assert!(header.starts_with("regime,param,n,p,replicates,mean,variance"));

    let json_out = dir.path().join("c.json");
    cli(&["compare", "--config", &config, "--out", json_out.to_str().unwrap(), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&json_out).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["metadata"]["master_seed"], 4);
}

#[test]
fn compare_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "config.json",
        r#"{"regime": {"kind": "fixed_c", "c_values": [1.0]}, "n_values": [50], "replicates": 10, "seed": 1}"#,
    );
    // X = 49/100 exactly while E[X_1] = 1/2, so the mean gate fails with exit code 1
    let out = cli(&["compare", "--config", &config, "--replicates", "20", "--seed", "9", "--format", "json"]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["metadata"]["config"]["replicates"], 20);
    assert_eq!(v["metadata"]["master_seed"], 9);
    assert!((v["rows"][0]["mean"].as_f64().unwrap() - 0.49).abs() < 1e-12);
}

#[test]
fn compare_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"regime": {"kind": "vanishing_p", "beta": 2.0}, "n_values": [10], "replicates": 10}"#);
    assert_eq!(cli(&["compare", "--config", &bad]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(cli(&["compare", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(cli(&["compare"]).status.code(), Some(2));
    // 30 replicates at c = 0.5 cannot match the X_c variance of zero: gate failure
    let gated = write(
        dir.path(),
        "gated.json",
        r#"{"regime": {"kind": "fixed_c", "c_values": [0.5]}, "n_values": [30], "replicates": 30, "generations": 5}"#,
    );
    assert_eq!(cli(&["compare", "--config", &gated]).status.code(), Some(1));
    let exploratory = cli(&["compare", "--exploratory", "np0", "--n", "100,200", "--replicates", "50"]);
    assert_eq!(exploratory.status.code(), Some(0));
    let text = String::from_utf8(exploratory.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.starts_with("np0_exploratory") && l.ends_with(",data")));
}
