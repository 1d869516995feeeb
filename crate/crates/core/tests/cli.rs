use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acn-bounds"))
        .args(args)
        .env("ACNB_WORKERS", "1")
        .output()
        .unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

const VERIFY: [&str; 15] = [
    "verify", "--protocol", "trilemma-unsync", "--n", "10", "--p", "0.3", "--lmax", "3",
    "--attack", "timing", "--trials", "20000", "--seed", "42",
];

#[test]
fn minimal_latency_bound_is_one() {
    let o = run(&["bound", "--kind", "trilemma-sync", "--lmax", "1", "--n", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["delta"], 1.0);
    assert_eq!(v["case"], "minimal latency");
}

#[test]
fn verify_passes_against_the_bound() {
    let o = run(&VERIFY);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["pass"], true);
    assert!((v["bound"].as_f64().unwrap() - 0.49).abs() < 1e-12);
}

#[test]
fn verify_failure_reports_numbers() {
    let mut args = VERIFY.to_vec();
    args.extend(["--tol", "-0.5"]);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(2));
    let v = json(&o);
    assert_eq!(v["pass"], false);
    assert_eq!(v["tol"], -0.5);
    assert!(v["bound"].is_number() && v["ci_high"].is_number());
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = run(&["bound", "--no-such-flag", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
    assert_eq!(run(&["bound", "--kind", "nonsense"]).status.code(), Some(1));
}

#[test]
fn config_file_matches_flags_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sim.json");
    std::fs::write(
        &path,
        r#"{"protocol": "trilemma-unsync", "attack": "timing", "n": 10, "p": 0.3, "lmax": 3, "trials": 2000, "seed": 11}"#,
    )
    .unwrap();
    let cfg = path.to_str().unwrap();
    let flags = [
        "simulate", "--protocol", "trilemma-unsync", "--attack", "timing", "--n", "10", "--p",
        "0.3", "--lmax", "3", "--trials", "2000",
    ];
    let mut with_seed = flags.to_vec();
    with_seed.extend(["--seed", "11"]);
    let a = run(&with_seed);
    let b = run(&["simulate", "--config", cfg]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);

    let mut other = flags.to_vec();
    other.extend(["--seed", "12"]);
    let c = run(&other);
    let d = run(&["simulate", "--config", cfg, "--seed", "12"]);
    assert_eq!(c.stdout, d.stdout);
    assert_ne!(a.stdout, c.stdout);

    std::fs::write(&path, r#"{"protocol": "trilemma-unsync", "bogus": 1}"#).unwrap();
    assert_eq!(run(&["simulate", "--config", cfg]).status.code(), Some(1));
}

#[test]
fn atlas_dcnet_general() {
    let o = run(&["atlas", "--preset", "dcnet", "--mode", "general"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let verdicts: Vec<(String, String)> = v["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| (b["bound"].as_str().unwrap().to_string(), b["verdict"].as_str().unwrap().to_string()))
        .collect();
    assert!(verdicts.contains(&("counting".into(), "meets".into())), "{text}");
    assert_eq!(verdicts.iter().filter(|(_, c)| c == "not-applicable").count(), 2, "{text}");
}

#[test]
fn region_grid_is_csv() {
    let o = run(&["region", "--grid", "--lmax-min", "2", "--lmax-max", "4", "--beta-step", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.contains("l_max") && header.contains("beta"), "{header}");
    let width = header.split(',').count();
    assert!(lines.clone().count() >= 3);
    assert!(lines.all(|l| l.split(',').count() == width));
}
