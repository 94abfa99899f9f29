use std::path::PathBuf;
use std::process::{Command, Output};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde_json::Value;

fn heckeforms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heckeforms"))
        .args(args)
        .env_remove("HECKEFORMS_PRECISION")
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn spec_file(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("heckeforms-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn eta24(len: usize) -> Vec<BigInt> {
    let mut p = vec![BigInt::zero(); len];
    p[0] = BigInt::one();
    for n in 1..len {
        for _ in 0..24 {
            for i in (n..len).rev() {
                let t = p[i - n].clone();
                p[i] -= t;
            }
        }
    }
    p
}

#[test]
fn expand_delta_as_csv() {
    let out = heckeforms(&[
        "expand", "--mu", "3", "--expr", "Delta", "--terms", "8", "--format", "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let rows: Vec<(String, String)> = rdr.deserialize().map(Result::unwrap).collect();
    let want = eta24(8);
    assert_eq!(rows.len(), 8);
    for (i, (e, c)) in rows.iter().enumerate() {
        assert_eq!(e, &format!("{}/1", i + 1));
        assert_eq!(c, &format!("{}/1", want[i]));
    }
}

#[test]
fn expand_symbol_json() {
    let out = heckeforms(&["expand", "--mu", "5", "--symbol", "E4", "--terms", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(&out);
    assert_eq!(v["schema"], "heckeforms/1");
    assert_eq!(v["series"]["coeffs"][0], "1/1");
    assert_eq!(v["series"]["coeffs"].as_array().unwrap().len(), 5);
    assert_eq!(v["precision"]["requested_bits"], 128);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(
        heckeforms(&["expand", "--mu", "2", "--symbol", "E4"]).status.code(),
        Some(2)
    );
    assert_eq!(
        heckeforms(&["expand", "--mu", "3", "--expr", "E4 +* E6"]).status.code(),
        Some(2)
    );
    assert_eq!(
        heckeforms(&["expand", "--mu", "3", "--expr", "E10"]).status.code(),
        Some(2)
    );
    assert_eq!(
        heckeforms(&["expand", "--mu", "3", "--symbol", "E99"]).status.code(),
        Some(2)
    );
    assert_eq!(heckeforms(&["nonsense"]).status.code(), Some(2));
    let bad = spec_file("bad.json", "{\"mu\": 3, \"w\": 6}");
    assert_eq!(
        heckeforms(&["vectorform", "--spec", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    let mismatch = spec_file("mismatch.json", r#"{"mu":3,"w":4,"r":2,"h":["E4"]}"#);
    assert_eq!(
        heckeforms(&["vectorform", "--spec", mismatch.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn division_by_zero_is_computational() {
    let out = heckeforms(&["expand", "--mu", "3", "--expr", "E4/(E4 - E4)"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn group_reports_table_constants() {
    let out = heckeforms(&["group", "--mu", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(&out);
    let varpi: f64 = v["group"]["varpi"].as_str().unwrap().parse().unwrap();
    assert!((varpi - 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(v["group"]["delta"], 8);
}

#[test]
fn reports_are_byte_identical() {
    let spec = spec_file("kz-rerun.json", r#"{"mu":3,"w":5,"r":1,"B":["0","-(1/6)*E4"]}"#);
    let args = ["frobenius", "--spec", spec.to_str().unwrap(), "--terms", "20"];
    let a = heckeforms(&args);
    let b = heckeforms(&args);
    assert_eq!(a.stdout, b.stdout);
    let c = heckeforms(&["--jobs", "1", args[0], args[1], args[2], args[3], args[4]]);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn frobenius_kz_exponents() {
    let spec = spec_file("kz.json", r#"{"mu":3,"w":5,"r":1,"B":["0","-(1/6)*E4"]}"#);
    let out = heckeforms(&["frobenius", "--spec", spec.to_str().unwrap(), "--terms", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(&out);
    assert_eq!(v["indicial"]["exponents"], serde_json::json!(["5/6", "0/1"]));
    assert_eq!(v["wronskian"]["theta_equal"], true);
    assert_eq!(v["wronskian"]["delta_power"]["constant"], "-5/6");
    for s in v["solutions"].as_array().unwrap() {
        assert_eq!(s["residual_zero"], true);
        assert_eq!(s["tau_degree"], 0);
    }
}

#[test]
fn vectorform_dijkgraaf_laws() {
    let spec = spec_file(
        "dijkgraaf.json",
        r#"{"mu":3,"w":6,"r":3,"h":["-2*E6/51840","-3*E4/51840","0","5/51840"]}"#,
    );
    let out = heckeforms(&[
        "vectorform",
        "--spec",
        spec.to_str().unwrap(),
        "--check",
        "all",
        "--z",
        "1.3i",
    ]);
    let v = report(&out);
    let laws = v["transformation_laws"]["laws"].as_object().unwrap();
    for (name, law) in laws {
        let r = law["max_residual"].as_f64().unwrap();
        if name == "vandermonde" {
            assert!(r > 1e-4, "stated Vandermonde form should not hold");
        } else {
            assert!(r < 1e-8, "{name}: {r}");
        }
    }
    assert_eq!(v["gstack"]["corrected"], true);
    assert_eq!(v["gstack"]["stated"], false);
    // The stated Vandermonde and gStack forms are reported as failures.
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(v["pass"], false);
}

#[test]
fn vectorform_zeta_range() {
    let spec = spec_file("e4e2.json", r#"{"mu":3,"w":6,"r":1,"h":["E6","E4"]}"#);
    let path = spec.to_str().unwrap();
    let ok = heckeforms(&[
        "vectorform",
        "--spec",
        path,
        "--check",
        "gstack",
        "--zeta",
        "1/1",
        "--terms",
        "20",
    ]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(report(&ok)["vector_form"].is_object());
    let out = heckeforms(&[
        "vectorform",
        "--spec",
        path,
        "--check",
        "gstack",
        "--zeta",
        "1/3",
        "--terms",
        "20",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_identities_passes() {
    let out = heckeforms(&["verify", "--suite", "identities", "--mu", "3", "--terms", "40"]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(&out);
    assert_eq!(v["suites"][0]["failed"], 0);
}

#[test]
fn verify_frobenius_passes() {
    let out = heckeforms(&["verify", "--suite", "frobenius", "--mu", "3,4", "--terms", "30"]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(&out);
    let checks = v["suites"][0]["checks"].as_array().unwrap();
    let garvan = checks.iter().find(|c| c["name"] == "garvan").unwrap();
    assert_eq!(garvan["detail"]["constant"], "-746496000/691");
}

#[test]
fn timing_only_on_request() {
    let plain = report(&heckeforms(&["group", "--mu", "3"]));
    assert!(plain.get("timing_ms").is_none());
    let timed = report(&heckeforms(&["--timing", "group", "--mu", "3"]));
    assert!(timed["timing_ms"].as_f64().is_some());
}

#[test]
fn precision_env_is_echoed() {
    let out = Command::new(env!("CARGO_BIN_EXE_heckeforms"))
        .args(["group", "--mu", "3"])
        .env("HECKEFORMS_PRECISION", "256")
        .output()
        .unwrap();
    let v = report(&out);
    assert_eq!(v["precision"]["requested_bits"], 256);
    assert_eq!(v["precision"]["effective_bits"], 53);
    let bad = Command::new(env!("CARGO_BIN_EXE_heckeforms"))
        .args(["group", "--mu", "3"])
        .env("HECKEFORMS_PRECISION", "lots")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
