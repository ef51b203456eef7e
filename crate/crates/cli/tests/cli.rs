use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    let p: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name);
    p.to_str().unwrap().to_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsvft")).args(args).output().unwrap()
}

fn outputs(out: &Output) -> Value {
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    v["outputs"].clone()
}

#[test]
fn ktol_reports_every_ftsv_in_order() {
    let out = run(&["ktol", &fixture("ladder_graph.json")]);
    assert!(out.status.success());
    let o = outputs(&out);
    assert_eq!(o["k"], 2);
    let names: Vec<&String> = o["nd"].as_object().unwrap().keys().collect();
    assert_eq!(names, ["f1", "f2", "f3", "f4"]);
}

#[test]
fn gen_then_verify_and_inject() {
    let dir = tempfile::tempdir().unwrap();
    let st = dir.path().join("st.json");
    let lp = dir.path().join("model.lp");
    let graph = fixture("mixed_graph.json");
    let out = run(&["gen", &graph, "--method", "ilp", "--out", st.to_str().unwrap(), "--lp-out", lp.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(outputs(&out)["status"], "optimal");
    assert!(std::fs::read_to_string(&lp).unwrap().contains("Minimize"));

    let out = run(&["verify", &graph, st.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(outputs(&out)["accepted"], true);

    let out = run(&["inject", &graph, st.to_str().unwrap()]);
    assert_eq!(outputs(&out)["fraction"], 1.0);

    // a structure checked for more faults than it carries is rejected
    let out = run(&["verify", &graph, st.to_str().unwrap(), "--k", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(outputs(&out)["violations"][0]["rule"], "wrong_k");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"f_tsvs\": [").unwrap();
    let out = run(&["ktol", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    let out = run(&["gen", &fixture("mixed_graph.json"), "--k", "5"]);
    assert_eq!(out.status.code(), Some(3));

    let out = run(&["gen", &fixture("mixed_graph.json"), "--method", "ilp", "--timeout", "0"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(outputs(&out)["status"], "NA");

    // structure naming TSVs that the graph lacks
    let out = run(&["verify", &fixture("ladder_graph.json"), &fixture("mixed_listed.json")]);
    assert_eq!(out.status.code(), Some(3));

    let out = run(&["synth", "--n-ftsv", "50", "--area", "10x10"]);
    assert_eq!(out.status.code(), Some(3));

    let inst = dir.path().join("inst.json");
    let out = run(&["synth", "--n-ftsv", "20", "--out", inst.to_str().unwrap()]);
    assert!(out.status.success());
    let out = run(&["plan", inst.to_str().unwrap(), "--target", "1.0"]);
    assert_eq!(out.status.code(), Some(5));
    let out = run(&["plan", inst.to_str().unwrap(), "--kcap", "0"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn zero_tolerance_writes_an_empty_structure() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.json");
    std::fs::write(&graph, r#"{"f_tsvs": ["f1", "f2"], "s_tsvs": ["s1"], "edges": [["f1", "s1"]]}"#).unwrap();
    let st = dir.path().join("st.json");
    let out = run(&["gen", graph.to_str().unwrap(), "--out", st.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(outputs(&out)["K"], 0);
    let out = run(&["verify", graph.to_str().unwrap(), st.to_str().unwrap()]);
    assert!(out.status.success());
}

#[test]
fn plan_and_baseline_agree_on_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    assert!(run(&["synth", "--n-ftsv", "40", "--layout-seed", "2", "--kcap", "3", "--out", inst.to_str().unwrap()]).status.success());
    for extra in [&[][..], &["--baseline-k", "2"][..]] {
        let mut args = vec!["plan", inst.to_str().unwrap()];
        args.extend_from_slice(extra);
        let out = run(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let o = outputs(&out);
        let covered: usize = o["groups"].as_array().unwrap().iter().map(|g| g["f_tsvs"].as_array().unwrap().len()).sum();
        assert_eq!(covered, 40);
        assert!(o["totals"]["tsv_yield"].as_f64().unwrap() >= 0.997);
    }
}
