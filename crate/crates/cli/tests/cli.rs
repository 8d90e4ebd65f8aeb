use std::path::Path;
use std::process::Command;

fn expsplit() -> Command {
    Command::new(env!("CARGO_BIN_EXE_expsplit"))
}

fn small_run(out: &Path, extra: &[&str]) -> std::process::Output {
    let mut cmd = expsplit();
    cmd.args([
        "run", "--problem", "example2", "--grid", "7", "--kmin", "5", "--kmax", "8",
        "--ref-factor", "8", "--threads", "1", "--out",
    ])
    .arg(out)
    .args(extra);
    cmd.output().unwrap()
}

#[test]
fn run_writes_reports_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("study");
    let output = small_run(&out, &["--plot", "--norm", "dual"]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("scheme,h,error,norm,problem,grid,T"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3 * 4);
    assert!(rows.iter().all(|r| r.contains(",dual,example2,7x7,")));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["schemes"].as_array().unwrap().len(), 3);
    assert!(json["reference_gap"].as_f64().is_some());
    let svg = std::fs::read_to_string(out.join("plot.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("dual norm"));
}

#[test]
fn single_thread_runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(small_run(&a, &[]).status.success());
    assert!(small_run(&b, &[]).status.success());
    let read = |p: &Path| std::fs::read(p.join("report.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert!(!a.join("plot.svg").exists());
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out = dir.path().join("out");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"problem": "example1", "schemes": ["strang"], "grid": 5, "kmin": 4, "kmax": 7,
                "ref-factor": 8, "out": {:?}}}"#,
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let output = expsplit().args(["run", "--config"]).arg(&cfg).args(["--kmax", "6"]).output().unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3);
    assert!(csv.lines().skip(1).all(|l| l.starts_with("strang,")));
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let output = expsplit()
        .args(["run", "--problem", "example9", "--grid", "5", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("example9"));
    let output = expsplit().args(["run", "--grid", "5"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn verify_passes() {
    let output = expsplit().arg("verify").output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text.lines().count() >= 8);
    assert!(!text.contains("FAIL"));
}
