//! End-to-end tests of the `mchit` binary: file round trips, exit codes,
//! and byte-identical reruns.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mchit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mchit-cli-{}-{tag}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn c2_file(dir: &PathBuf) -> PathBuf {
    let path = dir.join("c2.json");
    std::fs::write(
        &path,
        r#"{"mode":"continuous","labels":["0","1"],"matrix":[[-1.0,1.0],[2.0,-2.0]]}"#,
    )
    .unwrap();
    path
}

#[test]
fn family_validate_round_trip() {
    let dir = workdir("roundtrip");
    for mode in ["continuous", "discrete"] {
        for (name, n) in [
            ("complete", "4"),
            ("cycle", "5"),
            ("biased-cycle", "4"),
            ("two-cliques", "5"),
            ("hypercube", "3"),
            ("birth-death", "6"),
            ("bipartite-plus-edge", "3"),
            ("random", "6"),
        ] {
            let out = dir.join(format!("{name}-{n}-{mode}.json"));
            let gen = run(&[
                "family", "--name", name, "--n", n, "--mode", mode, "--seed", "7", "--out",
                out.to_str().unwrap(),
            ]);
            assert!(gen.status.success(), "{name} {mode}: {gen:?}");
            let val = run(&["validate", "--chain", out.to_str().unwrap()]);
            assert!(val.status.success(), "{name} {mode}: {val:?}");
        }
    }
}

#[test]
fn stationary_c2() {
    let dir = workdir("stationary");
    let chain = c2_file(&dir);
    let out = run(&["stationary", "--chain", chain.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let pi = v["pi"].as_array().unwrap();
    assert!((pi[0].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-10);
    assert!((pi[1].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-10);
}

#[test]
fn thit_cap_guard_exit_2() {
    let dir = workdir("thit");
    let big = dir.join("cycle30.json");
    let gen = run(&[
        "family", "--name", "cycle", "--n", "30", "--out",
        big.to_str().unwrap(),
    ]);
    assert!(gen.status.success());
    let exact = run(&["thit", "--chain", big.to_str().unwrap(), "--alpha", "0.3"]);
    assert_eq!(exact.status.code(), Some(2), "{exact:?}");
    let msg = String::from_utf8_lossy(&exact.stderr);
    assert!(msg.contains("exact-enumeration cap"), "stderr: {msg}");
    let heur = run(&[
        "thit", "--chain", big.to_str().unwrap(), "--alpha", "0.3", "--heuristic",
    ]);
    assert!(heur.status.success(), "{heur:?}");
    let v: serde_json::Value = serde_json::from_slice(&heur.stdout).unwrap();
    assert_eq!(v["exact"], serde_json::Value::Bool(false));
}

#[test]
fn rule_then_simulate_round_trip_and_determinism() {
    let dir = workdir("rule-sim");
    let chain = c2_file(&dir);
    let rule = dir.join("rule.json");
    let built = run(&[
        "rule", "--chain", chain.to_str().unwrap(), "--start", "0", "--out",
        rule.to_str().unwrap(),
    ]);
    assert!(built.status.success(), "{built:?}");
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&rule).unwrap()).unwrap();
    let probs = v["probs"].as_array().unwrap();
    assert!((probs[0].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-10);

    let args = [
        "simulate", "--chain", chain.to_str().unwrap(), "--rule", rule.to_str().unwrap(),
        "--samples", "20000", "--seed", "42",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "simulate output must be byte-identical");
    let rep: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let mean = rep["mean_stop_time"].as_f64().unwrap();
    assert!((mean - 1.0 / 3.0).abs() < 0.02, "mean {mean}");
}

#[test]
fn simulate_rejects_mismatched_chain() {
    let dir = workdir("mismatch");
    let chain = c2_file(&dir);
    let other = dir.join("cycle5.json");
    assert!(run(&["family", "--name", "cycle", "--n", "5", "--out", other.to_str().unwrap()])
        .status
        .success());
    let rule = dir.join("rule.json");
    assert!(run(&["rule", "--chain", chain.to_str().unwrap(), "--out", rule.to_str().unwrap()])
        .status
        .success());
    let sim = run(&[
        "simulate", "--chain", other.to_str().unwrap(), "--rule", rule.to_str().unwrap(),
        "--samples", "10",
    ]);
    assert_eq!(sim.status.code(), Some(2), "{sim:?}");
}

#[test]
fn mix_outputs_profile_with_curve() {
    let dir = workdir("mix");
    let chain = c2_file(&dir);
    let out = run(&["mix", "--chain", chain.to_str().unwrap(), "--delta", "0.25"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let t = v["time"].as_f64().unwrap();
    assert!((t - (8.0f64 / 3.0).ln() / 3.0).abs() < 1e-5, "time {t}");
    assert!(v["curve"].as_array().unwrap().len() > 3);
    let ces = run(&["mix", "--chain", chain.to_str().unwrap(), "--delta", "0.25", "--cesaro"]);
    assert!(ces.status.success());
    let vc: serde_json::Value = serde_json::from_slice(&ces.stdout).unwrap();
    assert_eq!(vc["kind"], "cesaro");
}

#[test]
fn verify_default_suite_exit_0_and_deterministic() {
    let a = run(&["verify", "--suite", "default", "--format", "csv"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = run(&["verify", "--suite", "default", "--format", "csv"]);
    assert_eq!(a.stdout, b.stdout, "verify output must be byte-identical");
    let text = String::from_utf8_lossy(&a.stdout);
    assert!(text.starts_with("id,chain,params,lhs,rhs,slack,pass,provenance"));
    assert!(!text.contains(",false,"));
}

#[test]
fn usage_errors_exit_2() {
    let bad_file = run(&["validate", "--chain", "/nonexistent/x.json"]);
    assert_eq!(bad_file.status.code(), Some(2));
    let bad_flag = run(&["mix", "--chain", "x.json"]); // missing --delta
    assert_eq!(bad_flag.status.code(), Some(2));
    let bad_suite = run(&["verify", "--suite", "bogus"]);
    assert_eq!(bad_suite.status.code(), Some(2));
}
