use std::fs;
use std::process::{Command, Output};

use tempfile::TempDir;

const V1: &str = r#"{"n": 2, "m": 2, "valuations": [[0, 3, 3, 3], [0, 3, 3, 3]]}"#;

fn amd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amd"))
        .args(args)
        .env_remove("AMD_SEED")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn path_in(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&amd(&["bogus"])), 2);
    assert_eq!(code(&amd(&[])), 2);
    assert_eq!(code(&amd(&["gap", "--n", "3", "--bogus", "1"])), 2);
    assert_eq!(
        code(&amd(&[
            "gap",
            "--n",
            "x",
            "--m",
            "3",
            "--gamma",
            "0.5",
            "--n-train",
            "5"
        ])),
        2
    );
    assert_eq!(code(&amd(&["verify", "--family", "nope"])), 2);
    assert_eq!(code(&amd(&["gap", "--format", "xml"])), 2);
}

#[test]
fn every_subcommand_has_help() {
    for sub in [
        "run-auction",
        "curve",
        "optimize",
        "verify",
        "shatter",
        "uc",
        "rademacher",
        "gap",
        "bounds",
    ] {
        let out = amd(&[sub, "--help"]);
        assert_eq!(code(&out), 0, "{sub}");
        assert!(stdout(&out).contains("Usage"), "{sub}");
    }
}

#[test]
fn invalid_inputs_exit_3() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "{not json");
    let auction = write(&dir, "a.json", r#"{"class": "mba", "c": 1.0}"#);
    assert_eq!(
        code(&amd(&[
            "run-auction",
            "--auction",
            &auction,
            "--profile",
            &bad
        ])),
        3
    );
    let missing = path_in(&dir, "missing.json");
    assert_eq!(code(&amd(&["curve", "--profile", &missing])), 3);
    let gap = amd(&[
        "gap",
        "--n",
        "3",
        "--m",
        "3",
        "--gamma",
        "1.5",
        "--n-train",
        "5",
    ]);
    assert_eq!(code(&gap), 3);
    assert!(String::from_utf8_lossy(&gap.stderr).contains("gamma"));
    let negative = write(
        &dir,
        "neg.json",
        r#"{"n": 1, "m": 1, "valuations": [[0, -1]]}"#,
    );
    assert_eq!(code(&amd(&["curve", "--profile", &negative])), 3);
}

#[test]
fn run_auction_reports_revenue() {
    let dir = TempDir::new().unwrap();
    let auction = write(&dir, "a.json", r#"{"class": "mba", "c": 1.5}"#);
    let profile = write(&dir, "p.json", V1);
    let out = amd(&["run-auction", "--auction", &auction, "--profile", &profile]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["revenue"].as_f64(), Some(3.0));

    let csv = amd(&[
        "run-auction",
        "--auction",
        &auction,
        "--profile",
        &profile,
        "--format",
        "csv",
    ]);
    assert!(stdout(&csv).starts_with("bidder,bundle,payment\n"));
    assert!(stdout(&csv).ends_with("revenue,,3\n"));
}

#[test]
fn curve_and_exact_optimum() {
    let dir = TempDir::new().unwrap();
    let profile = write(&dir, "p.json", V1);
    let out = amd(&["curve", "--profile", &profile, "--format", "csv"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("start,end,slope,intercept\n"));

    let sample = write(
        &dir,
        "s.json",
        &format!(r#"{{"seed": 0, "profiles": [{V1}]}}"#),
    );
    let out = amd(&["optimize", "--samples", &sample, "--c-max", "10"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["c_best"].as_f64(), Some(3.0));
    assert_eq!(v["avg_revenue"].as_f64(), Some(6.0));

    let grid = amd(&[
        "optimize",
        "--samples",
        &sample,
        "--method",
        "grid",
        "--resolution",
        "4",
    ]);
    assert_eq!(code(&grid), 0);
    let exact_only = amd(&["optimize", "--samples", &sample, "--class", "mbarp"]);
    assert_eq!(code(&exact_only), 3);
}

#[test]
fn verify_family_passes() {
    let out = amd(&[
        "verify",
        "--family",
        "lambda-lb",
        "--n",
        "3",
        "--m",
        "3",
        "--gamma",
        "0.5",
        "--subset-seed",
        "1",
    ]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["all_ok"], true);
    assert_eq!(v["rows"].as_array().unwrap().len(), 24);
}

#[test]
fn tampered_instance_fails_verification() {
    let dir = TempDir::new().unwrap();
    let saved = path_in(&dir, "inst.json");
    let out = amd(&[
        "verify",
        "--family",
        "vvca-lb",
        "--m",
        "4",
        "--gamma",
        "0.5",
        "--subset-seed",
        "3",
        "--save-instance",
        &saved,
    ]);
    assert_eq!(code(&out), 0);

    let mut inst: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&saved).unwrap()).unwrap();
    inst["claims"][2] = serde_json::json!({"relation": "=", "value": 7.0});
    let tampered = write(&dir, "tampered.json", &inst.to_string());
    let report = path_in(&dir, "report.json");
    let out = amd(&["verify", "--instance", &tampered, "--out", &report]);
    assert_eq!(code(&out), 1);
    assert!(
        stdout(&out).contains("violated claim: profile 2"),
        "{}",
        stdout(&out)
    );
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["all_ok"], false);
    assert_eq!(v["violations"], serde_json::json!([2]));
}

#[test]
fn shatter_prints_builtin_table() {
    let dir = TempDir::new().unwrap();
    let out_path = path_in(&dir, "shatter.json");
    let out = amd(&["shatter", "--instance", "mba-table1", "--out", &out_path]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let rows: Vec<Vec<&str>> = text
        .lines()
        .filter(|l| l.starts_with("mba"))
        .map(|l| l.split_whitespace().skip(2).collect())
        .collect();
    assert_eq!(
        rows,
        vec![
            vec!["0", "2"],
            vec!["3", "5"],
            vec!["5", "4"],
            vec!["4", "6"]
        ]
    );
    assert!(text.contains("shattered: true"));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["achieved_labelings"], 4);
}

#[test]
fn uc_point_mass_has_zero_deviation() {
    let dir = TempDir::new().unwrap();
    let dist = write(
        &dir,
        "d.json",
        &format!(r#"{{"kind": "point-mass", "profile": {V1}}}"#),
    );
    let out = amd(&[
        "uc",
        "--dist",
        &dist,
        "--mba-grid",
        "0:4:9",
        "--sizes",
        "5,10",
        "--trials",
        "3",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("samples,trial,sup_deviation"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.ends_with(",0")), "{text}");
}

fn uc_args<'a>(dist: &'a str, out: &'a str, threads: &'a str) -> Vec<&'a str> {
    vec![
        "uc",
        "--dist",
        dist,
        "--mba-grid",
        "0:4:21",
        "--sizes",
        "20,40",
        "--trials",
        "4",
        "--reference-size",
        "400",
        "--out",
        out,
        "--threads",
        threads,
    ]
}

#[test]
fn outputs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let dist = write(
        &dir,
        "d.json",
        r#"{"kind": "iid-uniform-additive", "n": 2, "m": 2, "h_v": 1.0}"#,
    );
    let (a, b) = (path_in(&dir, "a.json"), path_in(&dir, "b.json"));
    assert_eq!(code(&amd(&uc_args(&dist, &a, "1"))), 0);
    assert_eq!(code(&amd(&uc_args(&dist, &b, "4"))), 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let c = path_in(&dir, "c.json");
    let mut args = uc_args(&dist, &c, "2");
    args.extend(["--seed", "5"]);
    assert_eq!(code(&amd(&args)), 0);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());

    let d = path_in(&dir, "d_env.json");
    let status = Command::new(env!("CARGO_BIN_EXE_amd"))
        .args(uc_args(&dist, &d, "2"))
        .env("AMD_SEED", "5")
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(fs::read(&c).unwrap(), fs::read(&d).unwrap());
    let mut names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        ["a.json", "b.json", "c.json", "d.json", "d_env.json"]
    );
}

#[test]
fn rademacher_exact_and_sampled() {
    let dir = TempDir::new().unwrap();
    let dist = write(
        &dir,
        "d.json",
        r#"{"kind": "iid-uniform-additive", "n": 2, "m": 2, "h_v": 1.0}"#,
    );
    let exact = amd(&[
        "rademacher",
        "--dist",
        &dist,
        "--count",
        "6",
        "--mba-grid",
        "0:2:5",
    ]);
    assert_eq!(code(&exact), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&exact)).unwrap();
    assert_eq!(v["exact"], true);
    assert_eq!(v["draws"], 64);
    let mc = amd(&[
        "rademacher",
        "--dist",
        &dist,
        "--count",
        "6",
        "--mba-grid",
        "0:2:5",
        "--draws",
        "100",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&mc)).unwrap();
    assert_eq!(v["exact"], false);
}

#[test]
fn gap_reproduces_separation() {
    let out = amd(&[
        "gap",
        "--n",
        "3",
        "--m",
        "3",
        "--gamma",
        "0.5",
        "--n-train",
        "5",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["empirical_rev"].as_f64().unwrap() >= 1.0);
    assert!(v["gap"].as_f64().unwrap() > 0.5);
}

#[test]
fn bounds_echo_inputs() {
    let out = amd(&[
        "bounds",
        "erm-additive",
        "--epsilon",
        "0.1",
        "--c",
        "1",
        "--delta",
        "0.05",
        "--samples",
        "2000",
        "--rho",
        "0.02",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("c,delta,epsilon,rho,samples,which,value,order_of_magnitude")
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(
        &row[..6],
        &["1", "0.05", "0.1", "0.02", "2000", "erm-additive"]
    );
    assert!((row[6].parse::<f64>().unwrap() - 0.1531).abs() < 1e-3);
    assert_eq!(
        code(&amd(&[
            "bounds",
            "pseudo",
            "--d",
            "2",
            "--c",
            "1",
            "--samples",
            "10",
            "--delta",
            "2"
        ])),
        3
    );
}
