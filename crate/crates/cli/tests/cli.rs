use std::path::Path;
use std::process::{Command, Output};

fn mplx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mplx"))
        .arg("--quiet")
        .args(args)
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_analyze_report_verify() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let out = tmp.path().join("out");
    assert!(mplx(&["synth", "--out", path(&data), "--nodes", "12", "--seed", "4"]).status.success());

    let run = mplx(&[
        "analyze",
        "--data-dir",
        path(&data),
        "--output-dir",
        path(&out),
        "--permutations",
        "100",
        "--seed",
        "4",
        "--aggregation",
        "union:calls,sms,proximity",
        "--aggregation",
        "intersection:calls,proximity",
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(out.join("pmf/intersection_calls_proximity.csv").exists());
    assert!(!out.join("pmf/exclusive_proximity.csv").exists());

    let md = mplx(&["report", path(&out)]);
    let text = String::from_utf8(md.stdout).unwrap();
    assert!(text.contains("| calls |"));
    assert!(text.contains("political"));

    let json = mplx(&["report", path(&out), "--format", "json"]);
    let value: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(value["inputs"]["participants"], 12);

    // synthetic data cannot match the published figures
    let verify = mplx(&["verify", "--from", path(&out)]);
    assert_eq!(verify.status.code(), Some(1));
    let lines = String::from_utf8(verify.stdout).unwrap();
    assert!(lines.lines().any(|l| l.starts_with("FAIL layers.calls.nodes")));
}

#[test]
fn input_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = mplx(&[
        "analyze",
        "--data-dir",
        path(&tmp.path().join("absent")),
        "--output-dir",
        path(&tmp.path().join("out")),
        "--permutations",
        "0",
    ]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(!tmp.path().join("out").exists());

    let bad_bins = mplx(&["analyze", "--distance-bins", "0,0.5,0.4,1"]);
    assert_eq!(bad_bins.status.code(), Some(1));

    let bad_agg = mplx(&["analyze", "--aggregation", "overlap:calls"]);
    assert_eq!(bad_agg.status.code(), Some(1));
}

#[test]
fn config_file_and_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    assert!(mplx(&["synth", "--out", path(&data), "--nodes", "10"]).status.success());
    let cfg = tmp.path().join("run.toml");
    std::fs::write(
        &cfg,
        "data_dir = \"data\"\noutput_dir = \"from_config\"\npermutations = 0\n",
    )
    .unwrap();
    let flagged = tmp.path().join("from_flag");
    let run = mplx(&["analyze", "--config", path(&cfg), "--output-dir", path(&flagged)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(flagged.join("manifest.json").exists());
    assert!(!tmp.path().join("from_config").exists());
}
