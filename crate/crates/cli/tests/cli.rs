use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lrr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrr")).args(args).output().expect("binary runs")
}

fn data_file() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/wages_synthetic.csv").to_string_lossy().into_owned()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn error_json(out: &Output) -> Value {
    assert!(!out.status.success());
    serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).expect("stderr is one JSON object")
}

const SMALL_MC: [&str; 12] = ["mc", "--spec", "1", "--n", "80", "--boot", "19", "--grid", "1.4:2.9:6,-0.8:2.5:7", "--seed", "5", "--reps"];

#[test]
fn mc_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let mut args = SMALL_MC.to_vec();
        args.extend(["3", "--out", out.to_str().unwrap()]);
        let res = lrr(&args);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    assert_eq!(fs::read(a.join("coverage.csv")).unwrap(), fs::read(b.join("coverage.csv")).unwrap());
    let s = summary(&a);
    assert_eq!(s["format_version"], 1);
    assert_eq!(s["kind"], "coverage");
    assert_eq!(s["config"]["plan"]["seed"], 5);
    assert_eq!(s["result"]["replications"], 3);
}

#[test]
fn single_replicate_frequencies_are_binary() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = SMALL_MC.to_vec();
    args.extend(["1", "--out", dir.path().to_str().unwrap()]);
    assert!(lrr(&args).status.success());
    let (header, rows) = lrr::io::read_report_csv(dir.path().join("coverage.csv")).unwrap();
    assert_eq!(&header[..3], ["beta", "gamma", "identified_conservative"]);
    assert_eq!(rows.len(), 42);
    for row in rows {
        assert!(row[2..].iter().all(|&v| v == 0.0 || v == 1.0));
    }
}

#[test]
fn config_file_reruns_the_job() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let mut args = SMALL_MC.to_vec();
    args.extend(["2", "--method", "bonferroni", "--out", first.to_str().unwrap()]);
    assert!(lrr(&args).status.success());
    // the echoed config, pointed at a new directory, reproduces the run
    let mut config = summary(&first)["config"].clone();
    let second = dir.path().join("second");
    config["output"] = Value::String(second.to_string_lossy().into_owned());
    let cfg_path = dir.path().join("run.json");
    fs::write(&cfg_path, serde_json::to_string(&config).unwrap()).unwrap();
    let res = lrr(&["--config", cfg_path.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(fs::read(first.join("coverage.csv")).unwrap(), fs::read(second.join("coverage.csv")).unwrap());
}

#[test]
fn infer_writes_round_trippable_report() {
    let dir = tempfile::tempdir().unwrap();
    let res = lrr(&[
        "infer", "--data", &data_file(), "--topcode-frac", "0.10", "--z2", "1e8", "--boot", "49", "--grid", "1.5:3.5:21,-1:1:21",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let printed: Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(printed["observations"], 305);
    let (header, rows) = lrr::io::read_report_csv(dir.path().join("confidence.csv")).unwrap();
    assert_eq!(header.len(), 11);
    assert_eq!(rows.len(), 21 * 21);
    // values written with 17 significant digits parse back to the same numbers
    let text = fs::read_to_string(dir.path().join("confidence.csv")).unwrap();
    let first_stat = text.lines().nth(1).unwrap().split(',').nth(2).unwrap();
    assert_eq!(first_stat.parse::<f64>().unwrap(), rows[0][2]);
    assert_eq!(lrr::io::format_number(rows[0][2]), first_stat);
    let lrr_col = header.iter().position(|h| h == "lrr").unwrap();
    let id_col = header.iter().position(|h| h == "identified").unwrap();
    assert!(rows.iter().all(|r| r[lrr_col] <= r[id_col]));
    assert_eq!(summary(dir.path())["result"]["empty"], false);
}

#[test]
fn empty_region_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let res = lrr(&[
        "infer", "--data", &data_file(), "--boot", "19", "--grid", "10:12:3,5:6:3", "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(summary(dir.path())["result"]["empty"], true);
    let (header, rows) = lrr::io::read_report_csv(dir.path().join("confidence.csv")).unwrap();
    let col = header.iter().position(|h| h == "lrr").unwrap();
    assert!(rows.iter().all(|r| r[col] == 0.0));
}

#[test]
fn lrr_check_reports_bound() {
    let res = lrr(&["lrr-check", "--model", "interval", "--theta", "2,0.5", "--eta-bins", "51", "--perturbations", "40", "--scale-k", "0.5"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let rep: Value = serde_json::from_slice(&res.stdout).unwrap();
    let bound = rep["sqrt_q_lrr"].as_f64().unwrap();
    assert!(rep["max_observed_ratio"].as_f64().unwrap() <= bound * (1.0 + 1e-9));
    assert!((rep["extremal_ratio"].as_f64().unwrap() - bound).abs() <= 1e-9 * bound);

    let res = lrr(&["lrr-check", "--model", "entry", "--theta", "-1,-0.5,0.2,0.1", "--eta-bins", "11", "--perturbations", "20"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn failures_are_machine_readable() {
    let err = error_json(&lrr(&["infer"]));
    assert_eq!(err["error"], "usage");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "wage,gender\nabc,1\n").unwrap();
    let err = error_json(&lrr(&["infer", "--data", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]));
    assert_eq!(err["error"], "parse");
    assert!(err["message"].as_str().unwrap().contains("line 2"));

    let err = error_json(&lrr(&["lrr-check", "--model", "entry", "--theta", "1,-1,0,0"]));
    assert_eq!(err["error"], "unsupported");

    let err = error_json(&lrr(&["lrr-check", "--theta", "2,0.5", "--scale-k", "0"]));
    assert_eq!(err["error"], "infeasible_scale");

    let err = error_json(&lrr(&["mc", "--alpha1", "0.2"]));
    assert_eq!(err["error"], "invalid_plan");

    let err = error_json(&lrr(&["mc", "--bogus"]));
    assert_eq!(err["error"], "usage");
}
