use std::path::Path;
use std::process::{Command, Output};

fn lidl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lidl"))
        .args(args)
        .env("LIDL_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("roll.csv");
    let out = lidl(&["generate", "--spec", "swiss_roll", "--n", "400", "--seed", "2", "--out", path(&data)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&data).unwrap();
    assert!(text.starts_with("x0,x1,x2,true_lid,component_id\n"));
    assert_eq!(text.lines().count(), 401);

    let est = dir.path().join("mle.csv");
    let out = lidl(&[
        "estimate", "--method", "mle", "--config", r#"{"k": 10}"#, "--data", path(&data), "--out", path(&est),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&est).unwrap();
    assert!(text.starts_with("query_index,d_hat,r2,method\n"));
    assert_eq!(text.lines().count(), 401);

    let est = dir.path().join("lidl.csv");
    let out = lidl(&[
        "estimate",
        "--method",
        "lidl",
        "--config",
        r#"{"schedule": {"kind": "explicit", "deltas": [0.01, 0.0105]}, "queries": {"kind": "subsample", "n": 5}}"#,
        "--spec",
        "swiss_roll",
        "--data",
        path(&data),
        "--out",
        path(&est),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&est).unwrap();
    assert!(text.starts_with("query_index,d_hat,r2,eta_0,eta_1\n"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn sweep_writes_a_curve() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sweep.csv");
    let out = lidl(&[
        "sweep", "--preset", "unit_circle", "--delta-lo", "0.05", "--delta-hi", "0.2", "--grid-n", "3", "--n", "100",
        "--queries", "2", "--out", path(&out_path),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("delta,d_hat_mean,d_hat_std,hard_estimate\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("x.csv");
    for args in [
        vec!["generate", "--spec", "no_such_preset", "--out", path(&out_path)],
        vec!["generate", "--spec", r#"{"kind": "gaussian_diag", "sigmas": [0.5, 1.0]}"#, "--out", path(&out_path)],
        vec!["bench", "--suite", "table9", "--out-dir", path(dir.path())],
        vec!["sweep", "--preset", "unit_circle", "--delta-lo", "0.2", "--delta-hi", "0.1", "--out", path(&out_path)],
        vec!["frobnicate"],
    ] {
        let out = lidl(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn all_failed_queries_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("dups.csv");
    let mut text = String::from("x0,x1\n");
    for _ in 0..30 {
        text.push_str("1.0,2.0\n");
    }
    std::fs::write(&data, text).unwrap();
    let est = dir.path().join("mle.csv");
    let out = lidl(&["estimate", "--method", "mle", "--data", path(&data), "--out", path(&est)]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&est).unwrap();
    assert_eq!(csv.lines().count(), 31);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",,,mle")));
}
