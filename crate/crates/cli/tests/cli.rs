use std::fs;
use std::process::{Command, Output};

fn l0conc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_l0conc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn rows(out: &Output) -> Vec<Vec<String>> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn alpha_two_point() {
    let out = l0conc(&["alpha", "--space", "two-point", "--eps-grid", "0:1:0.1"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("eps,alpha\n0,0.5\n"));
    assert_eq!(rows(&out).len(), 11);
    assert_eq!(rows(&out)[10], ["1", "0"]);
}

#[test]
fn profile_matches_talagrand_example() {
    let out = l0conc(&[
        "profile",
        "--base",
        "uniform2",
        "--n",
        "50",
        "--eps",
        "0.3",
        "--samples",
        "100000",
        "--seed",
        "42",
    ]);
    assert!(out.status.success());
    let r = &rows(&out)[0];
    assert_eq!((r[0].as_str(), r[1].as_str()), ("0.3", "50"));
    assert!((num(&r[4]) - 0.022218).abs() < 5e-7);
    assert!(num(&r[2]) <= num(&r[4]) + 4.0 * num(&r[3]));
}

#[test]
fn amplify_example_reaches_small_defect() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("s.json");
    let out = l0conc(&[
        "amplify",
        "--group",
        "Z",
        "--schedule",
        "k=4i^2,n=i,i=1..8",
        "--g",
        "0.35: 1|0",
        "--family",
        "disagreement",
        "--eps",
        "0.2",
        "--json-summary",
        summary.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("i,n,defect,bound,conc_mass,median_gap\n"));
    let rows = rows(&out);
    assert_eq!(rows.len(), 8);
    assert!(num(&rows[7][2]) <= 0.1);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(summary).unwrap()).unwrap();
    assert_eq!(json["passed"], true);
    assert_eq!(json["config"]["schedule"], "k=4i^2,n=i,i=1..8");
    assert_eq!(json["config"]["common"]["seed"], 42);
    assert!(json["version"].is_string());
    assert_eq!(json["details"]["rows"].as_array().unwrap().len(), 8);
}

#[test]
fn defect_sweeps() {
    let out = l0conc(&["defect", "--group", "Z", "--k-max", "10"]);
    assert!(out.status.success());
    for r in rows(&out) {
        let k = num(&r[0]);
        assert!(num(&r[1]) <= 2.0 / (2.0 * k + 1.0) + 1e-12);
    }
    let out = l0conc(&["defect", "--group", "F2", "--k-min", "0", "--k-max", "6"]);
    assert!(out.status.success());
    assert!(rows(&out).iter().all(|r| num(&r[1]) >= 0.2));
}

#[test]
fn phi_check_residuals_are_tiny() {
    let out = l0conc(&["phi-check", "--group", "Z,Z_12", "--trials", "100"]);
    assert!(out.status.success());
    let rows = rows(&out);
    assert_eq!(rows.len(), 14);
    assert!(rows.iter().all(|r| num(&r[1]) <= 1e-12));
}

#[test]
fn exit_codes() {
    // validation errors
    assert_eq!(l0conc(&["alpha", "--eps-grid", "1:0:0.1"]).status.code(), Some(1));
    assert_eq!(l0conc(&["amplify", "--g", "0.4: q|1"]).status.code(), Some(1));
    assert_eq!(
        l0conc(&["amplify", "--schedule", "k=3,n=i,i=1..3", "--family", "signed-ramp:c=2"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        l0conc(&["defect", "--group", "Z_5", "--sweep", "folner"]).status.code(),
        Some(1)
    );
    assert_eq!(l0conc(&["nope"]).status.code(), Some(1));
    assert_eq!(l0conc(&["profile", "--n", "x"]).status.code(), Some(1));
    // computation errors
    assert_eq!(
        l0conc(&["alpha", "--space", "hamming", "--n", "6"]).status.code(),
        Some(2)
    );
    assert_eq!(
        l0conc(&["amplify", "--schedule", "k=4i^2,n=i,i=1..4", "--mode", "exact"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(l0conc(&["--help"]).status.code(), Some(0));
    assert_eq!(l0conc(&["--version"]).status.code(), Some(0));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# grid for the two-point space\neps_grid = \"0:1:0.5\"\ndistance = 2\n",
    )
    .unwrap();
    let out = l0conc(&["--config", cfg.to_str().unwrap(), "alpha"]);
    assert!(out.status.success());
    assert_eq!(rows(&out).len(), 3);
    assert_eq!(rows(&out)[2], ["1", "0.5"]);
    let out = l0conc(&["alpha", "--config", cfg.to_str().unwrap(), "--eps-grid", "0:2:1"]);
    assert!(out.status.success());
    assert_eq!(rows(&out), [["0", "0.5"], ["1", "0.5"], ["2", "0"]]);
    fs::write(&cfg, "bogus-flag = 1\n").unwrap();
    assert_eq!(
        l0conc(&["--config", cfg.to_str().unwrap(), "alpha"]).status.code(),
        Some(1)
    );
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.csv");
    let out = l0conc(&["alpha", "--eps-grid", "0:0.2:0.1", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(
        fs::read_to_string(path).unwrap(),
        "eps,alpha\n0,0.5\n0.1,0.5\n0.2,0.5\n"
    );
}
