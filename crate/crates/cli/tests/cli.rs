use std::fs;
use std::process::{Command, Output};

fn cutoff_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cutoff-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn analyze_single_term() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    fs::write(&path, r#"{"terms": [{"log_a": 100, "rho": 1}]}"#).unwrap();
    let out = cutoff_lab(&["analyze", "--mixture", path.to_str().unwrap(), "--c", "-1,1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("t = 100\n"));
    assert!(text.contains("w = 1\n"));
    assert!(text.contains("r = 3.07799056018\n"));
    assert!(text.contains("lower c = -1"));
    assert!(text.contains("upper c = 1"));
}

#[test]
fn analyze_json_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    fs::write(
        &path,
        r#"{"terms": [{"a": 3, "rho": 2}, {"a": 3, "rho": 4}, {"a": 1, "rho": 6}]}"#,
    )
    .unwrap();
    let args = [
        "--json",
        "analyze",
        "--mixture",
        path.to_str().unwrap(),
        "--alpha",
        "2",
    ];
    let a = cutoff_lab(&args);
    let b = cutoff_lab(&args);
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["argmax_index"], 1);
    assert_eq!(v["conditions"]["alpha"]["ok"], true);
    assert_eq!(v["conditions"]["peres"], "unchecked");
}

#[test]
fn family_closed_forms() {
    let out = cutoff_lab(&["family", "--descriptor", "lemma31/const:1", "--n", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("t = 1.14685526477"));
    assert!(text.contains("w = 0.114685526477"));
    assert!(text.contains("r = 0.168421733567"));
    assert!(!text.contains("terms ="));
}

#[test]
fn family_refuses_huge_listing() {
    let out = cutoff_lab(&["family", "--descriptor", "lemma31/one", "--n", "9", "--terms"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let out_path = dir.path().join("rows.csv");
    fs::write(
        &spec,
        r#"{"family": "single-ou", "n_grid": [10, 100], "c_grid": [-2, -1], "offset_rule": "left"}"#,
    )
    .unwrap();
    let out = cutoff_lab(&[
        "sweep",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let csv = fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "family,n,c,offset_rule,t_eval,log_d_lo,log_d_hi,reference,assertion,pass,slack"
    );
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("single_ou,10,-2,left,8,2,2,2,ge,true,0"));
}

#[test]
fn sweep_row_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let out_path = dir.path().join("rows.json");
    // β ≡ 0 places t_n on the pole of the enclosure integral
    fs::write(
        &spec,
        r#"{"family": "lemma31/const:0", "n_grid": [50], "c_grid": [0], "offset_rule": "left"}"#,
    )
    .unwrap();
    let out = cutoff_lab(&[
        "sweep",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let rows: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!(rows[0]["error"].as_str().unwrap().contains("pole"));
}

#[test]
fn spectral_two_state() {
    let dir = tempfile::tempdir().unwrap();
    let chain = dir.path().join("chain.json");
    fs::write(&chain, r#"{"states": 2, "Q": [[-2, 2], [1, -1]]}"#).unwrap();
    let out = cutoff_lab(&[
        "--json",
        "spectral",
        "--chain",
        chain.to_str().unwrap(),
        "--state",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let term = &v["terms"][0];
    assert!((term["a"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!((term["rho"].as_f64().unwrap() - 6.0).abs() < 1e-12);

    let out = cutoff_lab(&["spectral", "--chain", chain.to_str().unwrap(), "--state", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_bounds_suite_passes() {
    let out = cutoff_lab(&["verify", "--suite", "bounds"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert_eq!(stdout(&out).lines().filter(|l| l.contains("PASS")).count(), 2);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(
        cutoff_lab(&["verify", "--suite", "everything"]).status.code(),
        Some(2)
    );
    assert_eq!(cutoff_lab(&["analyze"]).status.code(), Some(2));
    assert_eq!(cutoff_lab(&[]).status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_cutoff-lab"))
        .args(["verify", "--suite", "spectral"])
        .env("CUTOFF_LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_cap_is_honored() {
    let out = Command::new(env!("CARGO_BIN_EXE_cutoff-lab"))
        .args(["verify", "--suite", "spectral"])
        .env("CUTOFF_LAB_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}
