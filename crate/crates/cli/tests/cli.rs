use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_invdet"))
        .args(args)
        .output()
        .expect("spawn invdet")
}

fn write_matrix(name: &str, text: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr_error(out: &Output, code: i32) -> Value {
    assert_eq!(
        out.status.code(),
        Some(code),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["exit_code"], code);
    v
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn lu_on_identity() {
    let p = write_matrix(
        "id3.json",
        r#"{"k":3,"re":[[1,0,0],[0,1,0],[0,0,1]],"im":[[0,0,0],[0,0,0],[0,0,0]]}"#,
    );
    let v = stdout_json(&run(&[
        "eval",
        "--matrix",
        p.to_str().unwrap(),
        "--method",
        "lu",
    ]));
    assert_eq!(f(&v["value"]["re"]), 1.0);
    assert_eq!(f(&v["deviation"]), 0.0);
}

#[test]
fn series_on_small_example() {
    let p = write_matrix(
        "ex2.json",
        r#"{"k":2,"re":[[1.1,0.2],[0,0.9]],"im":[[0,0],[0,0]]}"#,
    );
    let v = stdout_json(&run(&[
        "eval",
        "--matrix",
        p.to_str().unwrap(),
        "--order",
        "12",
    ]));
    assert!((f(&v["value"]["re"]) - 1.0 / 0.99).abs() < 1e-10);
    assert!(f(&v["deviation"]) < 1e-10);
    assert_eq!(v["gate"]["inside"], true);
}

#[test]
fn contour_on_generated_matrix() {
    let v = stdout_json(&run(&[
        "eval",
        "--gen",
        "seed=21,k=3,frac=0.8",
        "--method",
        "contour",
        "--nodes",
        "32",
    ]));
    assert!(f(&v["deviation"]) < 1e-12);
    assert_eq!(v["evaluations"], 32768);
}

#[test]
fn numbers_carry_17_significant_digits() {
    let out = run(&[
        "eval",
        "--gen",
        "seed=1,k=2,frac=0.3",
        "--method",
        "tracelog",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let start = text.find("\"re\":").unwrap() + 5;
    let token: String = text[start..].chars().take_while(|c| *c != ',').collect();
    let mantissa = token.trim_start_matches('-').split('e').next().unwrap();
    assert_eq!(mantissa.replace('.', "").len(), 17, "{token}");
}

#[test]
fn eval_is_byte_identical_across_runs() {
    for method in ["series", "relaxed", "tracelog", "contour", "lu"] {
        let args = ["eval", "--gen", "seed=9,k=3,frac=0.4", "--method", method];
        let (a, b) = (run(&args), run(&args));
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{method}");
    }
}

#[test]
fn convergence_series_on_zero_is_one_row() {
    let p = write_matrix(
        "id2.json",
        r#"{"k":2,"re":[[1,0],[0,1]],"im":[[0,0],[0,0]]}"#,
    );
    let out = run(&[
        "convergence",
        "--matrix",
        p.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "index,re,im,abs_error\n0,1.0000000000000000e0,0.0000000000000000e0,0.0000000000000000e0\n"
    );
}

#[test]
fn convergence_scalar_is_geometric() {
    let p = write_matrix("half.json", r#"{"k":1,"re":[[1.5]],"im":[[0]]}"#);
    let out = run(&[
        "convergence",
        "--matrix",
        p.to_str().unwrap(),
        "--order",
        "30",
        "--format",
        "csv",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let errors: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(errors.len(), 31);
    for (i, e) in errors.iter().enumerate().take(20) {
        let expected = 0.5f64.powi(i as i32 + 1) / 1.5;
        assert!(
            (e - expected).abs() <= 1e-15 + 1e-12 * expected,
            "{i}: {e} vs {expected}"
        );
    }
}

#[test]
fn convergence_contour_reaches_1e12() {
    let v = stdout_json(&run(&[
        "convergence",
        "--gen",
        "seed=4,k=3,frac=0.9",
        "--method",
        "contour",
        "--nodes",
        "64",
    ]));
    let rows = v["rows"].as_array().unwrap();
    let idx: Vec<u64> = rows.iter().map(|r| r["index"].as_u64().unwrap()).collect();
    assert_eq!(idx, vec![1, 2, 4, 8, 16, 32, 64]);
    assert!(f(&rows[6]["abs_error"]) <= 1e-12);
}

#[test]
fn charpoly_matches_lu() {
    let p = write_matrix(
        "cp.json",
        r#"{"k":2,"re":[[0.3,0.1],[-0.2,0.4]],"im":[[0,0.1],[0,0]]}"#,
    );
    let v = stdout_json(&run(&[
        "charpoly",
        "--matrix",
        p.to_str().unwrap(),
        "--lambda",
        "-2,0.5",
    ]));
    assert!(f(&v["deviation"]) < 1e-12);
    assert_eq!(v["coefficients"][0]["power"], -2);
    let out = run(&[
        "charpoly",
        "--matrix",
        p.to_str().unwrap(),
        "--lambda",
        "0.1,0",
    ]);
    assert_eq!(stderr_error(&out, 3)["error"]["kind"], "DomainViolation");
}

#[test]
fn parse_errors_exit_2() {
    let bad = write_matrix("bad.json", r#"{"k":2,"re":[[1,0]],"im":[[0,0],[0,0]]}"#);
    stderr_error(&run(&["eval", "--matrix", bad.to_str().unwrap()]), 2);
    stderr_error(&run(&["eval", "--matrix", "/nonexistent/m.json"]), 2);
    stderr_error(&run(&["eval", "--gen", "seed=1,k=2"]), 2);
    stderr_error(
        &run(&["eval", "--gen", "seed=1,k=2,frac=0.5", "--method", "nope"]),
        2,
    );
    stderr_error(&run(&["eval"]), 2);
    let id = write_matrix("id1.json", r#"{"k":1,"re":[[1]],"im":[[0]]}"#);
    stderr_error(
        &run(&[
            "eval",
            "--matrix",
            id.to_str().unwrap(),
            "--gen",
            "seed=1,k=1,frac=0.5",
        ]),
        2,
    );
    stderr_error(
        &run(&[
            "charpoly",
            "--matrix",
            id.to_str().unwrap(),
            "--lambda",
            "3",
        ]),
        2,
    );
    stderr_error(
        &run(&["eval", "--gen", "seed=1,k=2,frac=0.5", "--budget", "0"]),
        2,
    );
}

#[test]
fn precondition_violations_exit_3() {
    let gen = ["--gen", "seed=2,k=2,frac=1"];
    let out = run(&[&["eval"][..], &gen[..]].concat());
    assert_eq!(stderr_error(&out, 3)["error"]["kind"], "GateViolation");
    // forced series evaluates on the gate boundary
    assert!(run(&[&["eval", "--force"][..], &gen[..]].concat())
        .status
        .success());
    // contour refuses even when forced
    let out = run(&[&["eval", "--force", "--method", "contour"][..], &gen[..]].concat());
    assert_eq!(stderr_error(&out, 3)["error"]["kind"], "GateViolation");
    let out = run(&[
        "eval",
        "--gen",
        "seed=2,k=3,frac=0.5",
        "--method",
        "contour",
        "--budget",
        "1000",
    ]);
    assert_eq!(stderr_error(&out, 3)["error"]["kind"], "CostGuard");
    let out = run(&[
        "eval",
        "--gen",
        "seed=2,k=3,frac=0.5",
        "--order",
        "60",
        "--budget",
        "1000",
    ]);
    assert_eq!(stderr_error(&out, 3)["error"]["kind"], "CostGuard");
}

#[test]
fn out_flag_writes_file() {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("eval_out.json");
    let _ = std::fs::remove_file(&path);
    let out = run(&[
        "eval",
        "--gen",
        "seed=5,k=2,frac=0.5",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["method"], "series");
}

#[test]
fn verify_reports_every_property() {
    let out = run(&["verify", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("name,passed,cases,worst,tolerance,error")
    );
    let rows: Vec<&str> = lines.collect();
    assert!(rows.len() >= 20);
    assert!(
        rows.iter().all(|r| r.split(',').nth(1) == Some("true")),
        "{text}"
    );
}

#[test]
fn verify_passes_for_ten_seeds() {
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..10u64)
            .map(|seed| s.spawn(move || (seed, invdet::verify::run_suite(seed * 7919 + 1))))
            .collect();
        for h in handles {
            let (seed, report) = h.join().unwrap();
            if let Some(p) = report.properties.iter().find(|p| !p.passed) {
                panic!("seed index {seed}: {p:?}");
            }
        }
    });
}
