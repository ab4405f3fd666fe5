use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const PQGI: &str = env!("CARGO_BIN_EXE_pqgi");
const ALICE: &str = r#"{"grid":{"rows":4,"cols":4},"shapes":[{"rect":[0,0,1,1]}]}"#;
const BOB: &str = r#"{"grid":{"rows":4,"cols":4},"shapes":[{"rect":[1,1,2,2]}]}"#;
const FAR: &str = r#"{"grid":{"rows":4,"cols":4},"cells":[16,15,12]}"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn pqgi(args: &[&str]) -> (i32, String, String) {
    let Output { status, stdout, stderr } = Command::new(PQGI).args(args).output().unwrap();
    (
        status.code().unwrap_or(-1),
        String::from_utf8(stdout).unwrap(),
        String::from_utf8(stderr).unwrap(),
    )
}

struct Files {
    _dir: tempfile::TempDir,
    root: PathBuf,
    alice: String,
    bob: String,
    far: String,
}

fn files() -> Files {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let s = |name, text| write(&root, name, text).display().to_string();
    Files {
        alice: s("alice.json", ALICE),
        bob: s("bob.json", BOB),
        far: s("far.json", FAR),
        root,
        _dir: dir,
    }
}

#[test]
fn run_worked_example() {
    let f = files();
    let (code, out, _) = pqgi(&["run", "--alice", &f.alice, "--bob", &f.bob]);
    assert_eq!(code, 0);
    assert!(out.contains("verdict=INTERSECT t=1"), "{out}");
    assert!(out.contains("success probability"), "{out}");
    assert!(out.contains("qubits: A→B 6, B→A 12, total 18"), "{out}");
}

#[test]
fn run_disjoint_exits_zero() {
    let f = files();
    let (code, out, _) = pqgi(&["run", "--alice", &f.alice, "--bob", &f.far]);
    assert_eq!(code, 0);
    assert!(out.contains("verdict=DISJOINT t=0"), "{out}");
}

#[test]
fn tamper_aborts_with_exit_two() {
    let f = files();
    let trace = f.root.join("abort.json");
    let trace_s = trace.display().to_string();
    let (code, out, _) = pqgi(&[
        "run", "--alice", &f.alice, "--bob", &f.bob, "--adversary", "bob-tamper:1", "--trace", &trace_s,
    ]);
    assert_eq!(code, 2);
    assert!(out.contains("ABORT: cheat check failed"), "{out}");
    assert!(!out.contains("verdict="), "{out}");
    let t: serde_json::Value = serde_json::from_slice(&std::fs::read(&trace).unwrap()).unwrap();
    assert_eq!(t["verdict"], "ABORT");
    assert!(t["count_estimate"].is_null());
}

#[test]
fn rasterize_prints_serials() {
    let f = files();
    let (code, out, _) = pqgi(&["rasterize", &f.alice]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "cells=[1,2,5,6] M=4 m=2 r=4");
    let full = write(&f.root, "full.json", r#"{"grid":{"rows":4,"cols":4},"shapes":[{"rect":[0,0,3,3]}]}"#);
    let (_, out, _) = pqgi(&["rasterize", full.to_str().unwrap()]);
    assert!(out.starts_with("cells=[1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16] M=16"), "{out}");
}

#[test]
fn input_errors_exit_one_with_diagnostics() {
    let f = files();
    let empty = write(&f.root, "empty.json", r#"{"grid":{"rows":4,"cols":4},"shapes":[]}"#);
    let (code, _, err) = pqgi(&["rasterize", empty.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("no cells"), "{err}");

    let broken = write(&f.root, "broken.json", "{\"grid\":{\"rows\":4,\"cols\":4},\n\"shapes\":[{\"rect\":[0,0,1]}]}");
    let (code, _, err) = pqgi(&["rasterize", broken.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("line 2"), "{err}");

    let outside = write(&f.root, "outside.json", r#"{"grid":{"rows":4,"cols":4},"shapes":[{"rect":[0,0,1,1]},{"rect":[2,2,4,4]}]}"#);
    let (code, _, err) = pqgi(&["rasterize", outside.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("shapes[1]"), "{err}");

    let (code, _, err) = pqgi(&["rasterize", f.root.join("missing.json").to_str().unwrap()]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn invalid_run_config_exits_one_without_trace() {
    let f = files();
    let trace = f.root.join("t.json");
    let trace_s = trace.display().to_string();
    let base = ["run", "--alice", &f.alice, "--bob", &f.bob, "--trace", &trace_s];
    for extra in [
        &["--mode", "sample"][..],
        &["--counting-bits", "0"],
        &["--adversary", "bob-tamper:99"],
        &["--adversary", "eve"],
        &["--mode", "fuzzy"],
    ] {
        let mut args = base.to_vec();
        args.extend_from_slice(extra);
        let (code, _, err) = pqgi(&args);
        assert_eq!(code, 1, "{extra:?}: {err}");
        assert!(!trace.exists(), "{extra:?} left a trace");
    }
    let broken = write(&f.root, "broken.json", "{");
    let (code, _, _) = pqgi(&["run", "--alice", &f.alice, "--bob", broken.to_str().unwrap(), "--trace", &trace_s]);
    assert_eq!(code, 1);
    assert!(!trace.exists());
}

#[test]
fn mismatched_grids_are_input_errors() {
    let f = files();
    let small = write(&f.root, "small.json", r#"{"grid":{"rows":2,"cols":2},"cells":[1]}"#);
    let (code, _, err) = pqgi(&["run", "--alice", &f.alice, "--bob", small.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("different grids"), "{err}");
}

#[test]
fn traces_are_byte_identical_and_verbose_adds_amplitudes() {
    let f = files();
    let mut traces = Vec::new();
    for (k, verbose) in [false, false, true].into_iter().enumerate() {
        let path = f.root.join(format!("t{k}.json"));
        let path_s = path.display().to_string();
        let mut args = vec!["run", "--alice", &f.alice, "--bob", &f.bob, "--mode", "sample", "--seed", "5", "--trace", &path_s];
        if verbose {
            args.push("--verbose");
        }
        assert_eq!(pqgi(&args).0, 0);
        traces.push(std::fs::read_to_string(&path).unwrap());
    }
    assert_eq!(traces[0], traces[1]);
    assert!(traces[2].len() > traces[0].len());
    let t: serde_json::Value = serde_json::from_str(&traces[0]).unwrap();
    assert_eq!(t["format"], "pqgi-transcript/1");
    assert_eq!(t["complete"], true);
    let steps = t["steps"].as_array().unwrap();
    let moved: Vec<u64> = steps.iter().filter_map(|s| s["qubits_transferred"].as_u64()).filter(|&q| q > 0).collect();
    assert_eq!(moved, [6, 12]);
}

#[test]
fn analyze_sections() {
    let f = files();
    let (code, out, _) = pqgi(&["analyze", "--alice", &f.alice, "--bob", &f.bob, "--cost"]);
    assert_eq!(code, 0);
    assert!(out.contains("qubits: A→B 6, B→A 12, total 18 (paper formula: 22)"), "{out}");
    assert!(!out.contains("entropy"));
    let (_, out, _) = pqgi(&["analyze", "--alice", &f.alice, "--bob", &f.bob, "--leakage"]);
    assert!(out.contains("entropy 2.0 bits (paper bound log(MR) = 6.0 bits)"), "{out}");
    let (_, out, _) = pqgi(&["analyze", "--alice", &f.alice, "--bob", &f.bob, "--attacks", "--mask", "7"]);
    let row = |name: &str| out.lines().find(|l| l.starts_with(name)).unwrap().to_owned();
    assert!(row("honest").contains("0.000000"));
    assert!(row("bob-tamper:7").contains("1.000000"));
    assert!(row("bob-measure-all").contains("flag:"));
    let (_, all, _) = pqgi(&["analyze", "--alice", &f.alice, "--bob", &f.bob]);
    assert!(all.contains("qubits:") && all.contains("entropy") && all.contains("detection"));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(pqgi(&["--help"]).0, 0);
    assert_eq!(pqgi(&["--version"]).0, 0);
    assert_eq!(pqgi(&[]).0, 1);
}
