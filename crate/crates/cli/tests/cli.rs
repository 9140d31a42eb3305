use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn keisler(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_keisler")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.extend(["--output", "json"]);
    let o = keisler(&all);
    (o.status.code().unwrap(), serde_json::from_slice(&o.stdout).expect("json report"))
}

#[test]
fn paley_13_is_regular_of_degree_6() {
    let o = keisler(&["paley", "--q", "13", "--check", "degree"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("regular of degree 6"));
}

#[test]
fn paley_rejects_inadmissible_orders() {
    for q in ["7", "9", "4"] {
        assert_eq!(keisler(&["paley", "--q", q]).status.code(), Some(2), "q = {q}");
    }
}

#[test]
fn z4_has_three_idempotents() {
    let z4 = fixture("z4.json");
    let o = keisler(&["group", "--table", &z4, "--classify-idempotents"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("3 Haar measure(s)"));
    let (code, v) = json(&["group", "--table", &z4, "--classify-idempotents"]);
    assert_eq!(code, 0);
    let haar = v["haar_measures"].as_array().unwrap();
    assert_eq!(haar.len(), 3);
    // orders 1, 2, 4 with uniform weight on each
    let weights: Vec<&str> = haar.iter().map(|h| h["measure"]["atoms"][0][1]["exact"].as_str().unwrap()).collect();
    assert_eq!(weights, ["1/1", "1/2", "1/4"]);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(keisler(&["nonsense"]).status.code(), Some(2));
    assert_eq!(keisler(&["measure", "--q", "13"]).status.code(), Some(2));
    assert_eq!(keisler(&["measure", "--formula", "R(x,y)"]).status.code(), Some(2));
    assert_eq!(keisler(&["eval", "--q", "13", "--formula", "R(x,"]).status.code(), Some(2));
    assert_eq!(keisler(&["approx", "--q", "13", "--formula", "R(x,y)"]).status.code(), Some(2));
    assert_eq!(keisler(&["group", "--table", "/nonexistent.json"]).status.code(), Some(2));
}

#[test]
fn failed_checks_exit_1() {
    assert_eq!(keisler(&["paley", "--q", "13", "--check", "extension", "--s", "2", "--t", "2"]).status.code(), Some(1));
    let o = keisler(&["certify", "--q", "13", "--formula", "[x ; y] R(x,y)", "--n", "3", "--points", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let lazy = fixture("z4_lazy.json");
    let z4 = fixture("z4.json");
    assert_eq!(keisler(&["group", "--table", &z4, "--measure", &lazy, "--require-idempotent"]).status.code(), Some(1));
    let rot = fixture("z4_rotation.json");
    assert_eq!(keisler(&["dynamics", "--table", &z4, "--measure", &rot, "--require-convergence"]).status.code(), Some(1));
}

#[test]
fn json_is_byte_identical_and_records_seed() {
    let args = ["approx", "--q", "13", "--formula", "[x ; y] R(x,y)", "--epsilon", "1/10", "--seed", "17", "--output", "json"];
    let a = keisler(&args);
    let b = keisler(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["seed"], 17);
    assert_eq!(v["result"]["seed"], 17);
    for cmd in [vec!["paley", "--q", "5"], vec!["group", "--group", "s3"], vec!["dynamics", "--group", "cyclic:6"]] {
        let (_, v) = json(&cmd);
        assert_eq!(v["seed"], 0, "{cmd:?}");
    }
}

#[test]
fn measure_table_on_a_path() {
    // mu = 1/3 at 0 and 2/3 at 1 on the path 0-1-2-3; mu(R(x, b)) is the
    // mass of the neighbours of b
    let (code, v) = json(&["measure", "--input", &fixture("path4.json"), "--formula", "R(x,y)", "--measure", &fixture("path4_mu.json")]);
    assert_eq!(code, 0);
    let values: Vec<&str> = v["values"].as_array().unwrap().iter().map(|r| r["value"]["exact"].as_str().unwrap()).collect();
    assert_eq!(values, ["2/3", "1/3", "2/3", "0/1"]);
    assert_eq!(v["min"]["exact"], "0/1");
    assert_eq!(v["max"]["exact"], "2/3");
    let (_, v) = json(&["measure", "--input", &fixture("path4.json"), "--formula", "R(x,y)", "--params", "1"]);
    assert_eq!(v["value"]["exact"], "1/2");
}

#[test]
fn eval_counts_walks() {
    // walks of length two on a path with degrees 1, 2, 2, 1: 1 + 4 + 4 + 1
    let (code, v) = json(&["eval", "--input", &fixture("path4.json"), "--formula", "R(x,y) & R(y,z)"]);
    assert_eq!(code, 0);
    assert_eq!(v["satisfying_count"], 10);
    assert_eq!(v["free_vars"], serde_json::json!(["x", "y", "z"]));
    let (code, v) = json(&["eval", "--q", "5", "--formula", "forall x. exists y. R(x,y)", "--expect", "true"]);
    assert_eq!((code, &v["holds"]), (0, &Value::Bool(true)));
}

#[test]
fn product_orders_commute_for_counting_measures() {
    let (code, v) = json(&["product", "--q", "13", "--formula", "[x ; y] R(x,y)", "--check", "commute", "--seed", "5"]);
    assert_eq!(code, 0);
    assert_eq!(v["product_agrees"], true);
    assert_eq!(v["mu_then_nu"]["exact"], "6/13");
}

#[test]
fn buckets_and_vc() {
    let (code, v) = json(&["buckets", "--input", &fixture("path4.json"), "--formula", "R(x,y)", "--measure", &fixture("path4_mu.json"), "--n", "3"]);
    assert_eq!(code, 0);
    assert_eq!(v["verified"], true);
    assert_eq!(v["buckets"].as_array().unwrap().len(), 4);
    let (code, v) = json(&["vc", "--q", "5", "--formula", "[x ; y] x = y"]);
    assert_eq!(code, 0);
    assert_eq!(v["report"]["vc_dimension"]["exact"], 1);
}

#[test]
fn uniform_approximation_routes_agree() {
    let (code, v) = json(&["approx", "--q", "13", "--formula", "[x ; y] R(x,y)", "--formula", "[x ; y,w] !R(x,y) & R(x,w)", "--seed", "1"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["direct_accepts"], true);
    assert_eq!(v["result"]["selector_accepts"], true);
}

#[test]
fn sequence_from_manifest() {
    let (code, v) = json(&["seq", "--manifest", &fixture("mixed.json"), "--formula", "[x ; y] R(x,y)"]);
    assert_eq!(code, 0);
    let labels: Vec<u64> = v["sequence"]["values"].as_array().unwrap().iter().map(|r| r["label"].as_u64().unwrap()).collect();
    assert_eq!(labels, [5, 13, 17, 100]);
    let (code, _) = json(&["seq", "--manifest", &fixture("paley_seq.json"), "--quantity", "extension", "--require-stable"]);
    assert_eq!(code, 0);
    let (_, v) = json(&["seq", "--bias", "1/2", "--n", "2", "--m", "1"]);
    assert_eq!(v["coin_flip"]["target"]["exact"], "1/8");
}

#[test]
fn rotation_on_z4_is_periodic() {
    let (code, v) = json(&["dynamics", "--table", &fixture("z4.json"), "--measure", &fixture("z4_rotation.json"), "--cesaro"]);
    assert_eq!(code, 0);
    assert_eq!(v["orbit"]["behavior"]["kind"], "periodic");
    assert_eq!(v["orbit"]["behavior"]["period"], 4);
    assert_eq!(v["orbit"]["cesaro"]["limit"]["elements"], serde_json::json!([0, 1, 2, 3]));
}

#[test]
fn every_selftest_passes() {
    for cmd in ["eval", "measure", "product", "buckets", "approx", "vc", "certify", "paley", "seq", "group", "dynamics"] {
        let o = keisler(&[cmd, "--selftest"]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stdout(&o));
    }
}
