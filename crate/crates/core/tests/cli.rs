use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wenzl-lab"));
    cmd.env_remove("WENZL_LAB_CACHE_DIR");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn theta_report_shape() {
    let out = run(&["theta", "--n", "3", "--k", "2", "--l", "2", "--m", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], "wenzl-lab/1");
    assert_eq!(v["command"], "theta");
    assert_eq!(v["status"], "ok");
    assert_eq!(v["config"]["n"], 3);
    assert!((v["theta_closed"].as_f64().unwrap() - 56.0 / 3.0).abs() < 1e-12);
    assert!(v.get("wall_time_s").is_none());
    assert!(String::from_utf8_lossy(&out.stderr).contains("wall time:"));
}

#[test]
fn timing_moves_wall_time_into_report() {
    let out = run(&["dims", "--n", "4", "--max-k", "3", "--timing"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(!String::from_utf8_lossy(&out.stderr).contains("wall time:"));
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| run(args).status.code().unwrap();
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["frobnicate"]), 4);
    assert_eq!(code(&["theta", "--n", "3"]), 4);
    assert_eq!(code(&["theta", "--n", "1", "--k", "0", "--l", "1", "--m", "1"]), 4);
    assert_eq!(code(&["theta", "--n", "3", "--k", "1", "--l", "1", "--m", "1"]), 4);
    assert_eq!(code(&["isometry", "--n", "5", "--k", "0", "--l", "3", "--m", "3", "--max-dim", "1000"]), 3);
}

#[test]
fn informational_checks_do_not_fail_the_job() {
    let out = run(&["channel", "--n", "3", "--k", "0", "--l", "1", "--m", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let floor = v["checks"].as_array().unwrap().iter().find(|c| c["name"] == "norm_floor").unwrap();
    assert_eq!(floor["holds"], false);
    assert_eq!(floor["enforced"], false);
    assert!(String::from_utf8_lossy(&out.stderr).contains("note: norm_floor"));
}

#[test]
fn sweep_csv_has_one_row_per_triple() {
    let out = run(&["sweep", "--n-max", "4", "--l-max", "2", "--m-max", "2", "--samples", "10", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let header = reader.headers().unwrap().clone();
    for col in ["n", "k", "l", "m", "lambda_exact", "theta_rel_err", "status"] {
        assert!(header.iter().any(|h| h == col), "missing column {col}");
    }
    let rows: Vec<_> = reader.records().map(|r| r.unwrap()).collect();
    // l, m in 1..=2 give 2 + 2 + 2 + 3 = 9 triples per rank.
    assert_eq!(rows.len(), 18);
    let status = header.iter().position(|h| h == "status").unwrap();
    assert!(rows.iter().all(|r| &r[status] == "ok"));
}

#[test]
fn sweep_skips_rows_over_the_cap() {
    let out = run(&["sweep", "--n-min", "5", "--n-max", "5", "--l-max", "3", "--m-max", "3", "--max-dim", "700"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = json(&out)["rows"].as_array().unwrap().clone();
    let skipped: Vec<_> = rows.iter().filter(|r| r["status"] == "skipped").collect();
    assert!(!skipped.is_empty());
    assert!(skipped.iter().all(|r| r["l"].as_u64().unwrap() + r["m"].as_u64().unwrap() >= 5));
}

#[test]
fn seeds_change_samples_but_not_exact_values() {
    let a = json(&run(&["schmidt", "--n", "3", "--k", "1", "--l", "2", "--m", "1", "--seed", "1"]));
    let b = json(&run(&["schmidt", "--n", "3", "--k", "1", "--l", "2", "--m", "1", "--seed", "2"]));
    assert_ne!(a, b);
    assert_eq!(a["checks"].as_array().unwrap().len(), b["checks"].as_array().unwrap().len());
}

#[test]
fn cache_dir_round_trips_projections() {
    let dir = tempfile::tempdir().unwrap();
    let go = || {
        bin()
            .args(["jw-verify", "--n", "3", "--k", "4"])
            .env("WENZL_LAB_CACHE_DIR", dir.path())
            .output()
            .unwrap()
    };
    let first = go();
    assert_eq!(first.status.code(), Some(0));
    assert!(dir.path().join("jw_n3_k4.json").exists());
    let second = go();
    assert_eq!(second.status.code(), Some(0));
    let strip = |o: &Output| {
        let mut v = json(o);
        v.as_object_mut().unwrap().remove("wall_time_s");
        v
    };
    assert_eq!(strip(&first), strip(&second));
    let uncached = run(&["jw-verify", "--n", "3", "--k", "4"]);
    assert_eq!(strip(&first), strip(&uncached));
}

#[test]
fn corrupt_cache_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("jw_n3_k2.json"), "not json").unwrap();
    let out = bin()
        .args(["jw-verify", "--n", "3", "--k", "2"])
        .env("WENZL_LAB_CACHE_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}
