//! End-to-end runs of the `isochron` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("tests/data");
    p.push(name);
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isochron")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad JSON ({}): {}", e, stdout(o)))
}

#[test]
fn reduce_homogeneous_document() {
    let o = run(&["reduce", &data("homog4.toml")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("f = (3*x^2*a + x^2*b)/(-x^3*a + 1)"), "{}", s);
    assert!(s.contains("shape: case1"));
}

#[test]
fn reduce_linear_center() {
    let o = run(&["reduce", &data("linear.toml"), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["f"]["num"], "0");
    assert_eq!(v["g"]["num"], "x");
    assert_eq!(v["g"]["den"], "1");
    assert_eq!(v["verdict"], "pass");
}

#[test]
fn reduce_rejects_nonreducible_and_bad_syntax() {
    let o = run(&["reduce", &data("nonreducible.toml")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("shape not Case1/Case2"), "{}", stderr(&o));

    let o = run(&["reduce", &data("syntax_error.toml")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("syntax_error.toml:3:20:"), "{}", stderr(&o));

    let o = run(&["reduce", "no-such-record"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["reduce", "missing.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn conditions_on_the_quadratic_family() {
    let o = run(&["conditions", &data("loud.toml"), "--order", "2", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["urabe"]["c1"], "1/3*a - 1/3*b - 2/3*c");
    assert_eq!(v["conditions"].as_array().unwrap().len(), 2);
    assert_eq!(v["truncation"], 6);

    let o = run(&["conditions", "loud", "-m", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn conditions_respect_the_time_limit() {
    let o = run(&["conditions", &data("deg4.toml"), "-m", "9", "--time-limit", "0.05"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("time limit"));
}

#[test]
fn json_is_stable_modulo_timing() {
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("seconds");
        v
    };
    let a = strip(json(&run(&["conditions", "loud", "-m", "3", "--json"])));
    let b = strip(json(&run(&["conditions", "loud", "-m", "3", "--json"])));
    assert_eq!(a, b);
    let keys: Vec<&String> = a.as_object().unwrap().keys().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert_eq!(a["input_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn verify_catalog_records() {
    let o = run(&["verify", "abel-cubic", "--at", "a=1", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v = json(&o);
    let scan = v["checks"].as_array().unwrap().iter().find(|c| c["name"] == "isochronicity-scan").unwrap();
    assert!(scan["residual"].as_f64().unwrap() < 1e-6);

    let o = run(&["verify", "deg4-sub2-V", "--at", "b02=1", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v = json(&o);
    let zu = v["checks"].as_array().unwrap().iter().find(|c| c["name"] == "zero-urabe").unwrap();
    assert!(zu["residual"].as_f64().unwrap() < 1e-40);

    let o = run(&["verify", "loud", "--at", "a=1,b=0,c=0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("verdict: fail"));
}

#[test]
fn verify_a_document_at_a_point() {
    let o = run(&["verify", &data("loud.toml"), "--at", "a=2,b=1,c=-1", "--no-numeric"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = run(&["verify", &data("loud.toml"), "--at", "a=0.5,b=0.25,c=0", "--no-numeric"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    let o = run(&["verify", &data("loud.toml"), "--at", "a=x1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn period_table_and_csv() {
    let o = run(&["period", "abel-cubic", "--at", "a=1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("T(0.3) = 6.28318530"), "{}", stdout(&o));
    let o = run(&["period", &data("loud.toml"), "--csv", "--amplitudes", "0.1,0.2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert_eq!(s.lines().count(), 3);
    assert!(s.starts_with("amplitude,period\n0.1,6.28"));
    let o = run(&["period", "abel-cubic", "--at", "a=1", "--tol", "1e-3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn groebner_from_a_file() {
    let o = run(&["groebner", &data("ideal.txt"), "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["basis"], serde_json::json!(["x - y", "2*y^2 - 1"]));
    let o = run(&["groebner", &data("ideal.txt"), "--order", "lex"]);
    assert_eq!(stdout(&o), "2*y^2 - 1\nx - y\n");
    let o = run(&["groebner", &data("ideal.txt"), "--vars", "x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ideal.txt:2:7:"), "{}", stderr(&o));
}

#[test]
fn groebner_pair_limit() {
    let dir = std::env::temp_dir().join(format!("isochron-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let f = dir.join("cyclic.txt");
    std::fs::write(&f, "x + y + z\nx*y + y*z + z*x\nx*y*z - 1\n").unwrap();
    let o = run(&["groebner", f.to_str().unwrap(), "--pair-limit", "1"]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    let o = run(&["groebner", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn bench_orders() {
    let o = run(&["bench", "abel-general", "--orders", "1,2,3", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let a = json(&o);
    let rows = a["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let b = json(&run(&["bench", "abel-general", "--orders", "1,2,3", "--json"]));
    for (x, y) in rows.iter().zip(b["rows"].as_array().unwrap()) {
        assert_eq!(x["conditions_sha256"], y["conditions_sha256"]);
    }
    assert_eq!(run(&["bench", "abel-general", "--orders", ""]).status.code(), Some(2));
    assert_eq!(run(&["bench", "abel-general", "--orders", "0"]).status.code(), Some(2));
}
