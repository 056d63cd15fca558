use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_randlindblad")).args(args).current_dir(cwd).output().expect("spawn")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn spectrum_reports_a_zero_mode_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["spectrum", "--n", "5", "--geff", "1", "--seed", "3", "--out", "s.json"], tmp.path());
    let v = json(&out);
    assert!(v["summary"]["gap"].as_f64().unwrap() > 0.0);
    let file: serde_json::Value = serde_json::from_slice(&std::fs::read(tmp.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(file["eigenvalues"].as_array().unwrap().len(), 25);
}

#[test]
fn build_writes_a_dump_and_steady_reports_purity() {
    let tmp = tempfile::tempdir().unwrap();
    json(&run(&["build", "--n", "4", "--g", "0.5", "--out", "l.bin"], tmp.path()));
    assert!(std::fs::metadata(tmp.path().join("l.bin")).unwrap().len() > 16 * 16 * 16);
    let v = json(&run(&["steady", "--n", "4", "--g", "0.5"], tmp.path()));
    let purity = v["steady"]["purity"].as_f64().unwrap();
    assert!((0.25..=1.0).contains(&purity));
}

#[test]
fn same_seed_gives_identical_output() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run(&["spectrum", "--n", "4", "--geff", "2", "--seed", "9", "--realization", "1"], tmp.path());
    let b = run(&["spectrum", "--n", "4", "--geff", "2", "--seed", "9", "--realization", "1"], tmp.path());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn oracle_table_is_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["oracle", "ratio-gue", "--min", "0", "--max", "5", "--points", "11"], tmp.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,density"));
    assert_eq!(lines.count(), 11);
}

#[test]
fn oracle_accepts_negative_range() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["oracle", "semicircle-convolution", "--n", "10", "--min", "-8", "--max", "8", "--points", "5"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mid: Vec<f64> = text.lines().nth(3).unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(mid[0], 0.0);
    assert!(mid[1] > 0.0);
}

#[test]
fn sweep_report_and_collapse_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "sweep", "--n-list", "4,6,8", "--geff-min", "0.1", "--geff-max", "10", "--geff-points", "4",
        "--realizations", "2", "--seed", "5", "--out", "run",
    ];
    let v = json(&run(&args, tmp.path()));
    assert_eq!(v["computed"], 3 * 4 * 2);
    let again = json(&run(&args, tmp.path()));
    assert_eq!(again["computed"], 0);

    let v = json(&run(&["report", "run", "--preset", "fig3", "--out", "plots"], tmp.path()));
    assert_eq!(v["written"].as_array().unwrap().len(), 1);
    assert!(tmp.path().join("plots/fig3.csv").exists());

    let v = json(&run(&["collapse", "run", "--observable", "gap"], tmp.path()));
    assert!(v["fit"]["nu"].as_f64().unwrap().is_finite());
}

#[test]
fn exit_codes_follow_error_class() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&["--help"], tmp.path()).status.code(), Some(0));
    assert_eq!(run(&["spectrum", "--n", "4"], tmp.path()).status.code(), Some(1));
    assert_eq!(run(&["steady", "--n", "4", "--g", "-1"], tmp.path()).status.code(), Some(1));
    assert_eq!(run(&["report", "missing", "--preset", "fig3"], tmp.path()).status.code(), Some(3));

    let sweep = ["sweep", "--n-list", "4", "--geff-min", "0.1", "--geff-max", "1", "--geff-points", "2", "--realizations", "2", "--out", "one"];
    json(&run(&sweep, tmp.path()));
    // a single system size cannot be collapsed
    assert_eq!(run(&["collapse", "one"], tmp.path()).status.code(), Some(2));
}
