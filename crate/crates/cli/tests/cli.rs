use std::path::Path;
use std::process::{Command, Output};

fn miaroute(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_miaroute"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn write_topology(dir: &Path, name: &str, json: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn gen_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let c = dir.path().join("c.json");
    for (p, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
        let out = miaroute(&["gen", "--seed", seed, "--n", "20", "--out", p.to_str().unwrap()]);
        assert!(out.status.success());
    }
    let (a, b, c) = (
        std::fs::read(a).unwrap(),
        std::fs::read(b).unwrap(),
        std::fs::read(c).unwrap(),
    );
    assert_eq!(a, b);
    assert_ne!(a, c);
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["n_relays"], 20);
    assert_eq!(v["capacity"].as_array().unwrap().len(), 22);
}

#[test]
fn shortest_path_on_two_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let t = write_topology(
        dir.path(),
        "t.json",
        r#"{"n_relays":0,"i_max":2.0,"capacity":[[0,4],[4,0]]}"#,
    );
    let v = stdout_json(&miaroute(&["solve", &t, "--mode", "sp"]));
    assert_eq!(v["delay"], 0.5);
    assert_eq!(v["method"], "sp");
}

#[test]
fn every_mode_emits_a_delay() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.json");
    assert!(
        miaroute(&["gen", "--seed", "1", "--n", "4", "--out", t.to_str().unwrap()])
            .status
            .success()
    );
    let t = t.to_str().unwrap();
    let mut delays = std::collections::HashMap::new();
    for mode in ["optimal", "h1", "h2", "sp", "broadcast"] {
        let v = stdout_json(&miaroute(&["solve", t, "--mode", mode]));
        delays.insert(mode, v["delay"].as_f64().unwrap());
    }
    assert!(delays["optimal"] <= delays["h1"] * (1.0 + 1e-9));
    assert!(delays["h1"] <= delays["sp"] * (1.0 + 1e-9));
    let e = stdout_json(&miaroute(&["solve", t, "--mode", "energy", "--dmax", "3"]));
    assert!((e["delay"].as_f64().unwrap() - 3.0).abs() < 1e-9);
    let l = stdout_json(&miaroute(&["solve", "--mode", "line", "--n", "1"]));
    assert_eq!(l["delay"], 1.75);
}

#[test]
fn optimal_at_ten_relays() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.json");
    assert!(
        miaroute(&["gen", "--seed", "2", "--n", "10", "--out", t.to_str().unwrap()])
            .status
            .success()
    );
    stdout_json(&miaroute(&["solve", t.to_str().unwrap(), "--mode", "optimal"]));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.json");
    assert!(
        miaroute(&["gen", "--seed", "1", "--n", "12", "--out", t.to_str().unwrap()])
            .status
            .success()
    );
    let t = t.to_str().unwrap();
    assert_eq!(miaroute(&["solve", t, "--mode", "energy"]).status.code(), Some(2));
    assert_eq!(miaroute(&["solve", t, "--mode", "bogus"]).status.code(), Some(2));
    assert_eq!(miaroute(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        miaroute(&["solve", t, "--mode", "optimal", "--budget-cap", "8"])
            .status
            .code(),
        Some(4)
    );
    assert_eq!(miaroute(&["solve", t, "--mode", "broadcast"]).status.code(), Some(4));
    assert_eq!(
        miaroute(&["cdf", "--n", "23", "--instances", "1"]).status.code(),
        Some(4)
    );

    // the destination has no incoming link
    let cut = write_topology(
        dir.path(),
        "cut.json",
        r#"{"n_relays":1,"i_max":1.0,"capacity":[[0,1,0],[1,0,0],[1,1,0]]}"#,
    );
    for mode in ["optimal", "sp", "h1", "h2"] {
        assert_eq!(
            miaroute(&["solve", &cut, "--mode", mode]).status.code(),
            Some(3),
            "{mode}"
        );
    }
    let bad = write_topology(
        dir.path(),
        "bad.json",
        r#"{"n_relays":1,"i_max":1.0,"capacity":[[0,1],[1,0]]}"#,
    );
    assert_eq!(miaroute(&["solve", &bad, "--mode", "sp"]).status.code(), Some(1));
}

#[test]
fn cdf_matches_golden_file() {
    let out = miaroute(&["cdf", "--n", "6", "--instances", "5", "--seed", "7"]);
    assert!(out.status.success());
    let golden =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/cdf_n6_seed7.csv")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden);
    let serial = miaroute(&[
        "cdf",
        "--n",
        "6",
        "--instances",
        "5",
        "--seed",
        "7",
        "--parallel",
        "false",
    ]);
    assert_eq!(String::from_utf8(serial.stdout).unwrap(), golden);
}

#[test]
fn cdf_single_instance() {
    let out = miaroute(&["cdf", "--n", "5", "--instances", "1", "--seed", "3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "seed,delay_opt,delay_h1,delay_h2,delay_sp,r_h1,r_h2,r_sp");
    assert_eq!(lines.len(), 2 + 5);
    assert!(lines[1].starts_with("3,"));
    assert!(lines[2].starts_with("mean,"));
}

#[test]
fn line_ratio_csv() {
    let out = miaroute(&["line-ratio", "--n", "4"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,mia_delay,trad_delay,ratio,bound");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("1,1.75,2.0,0.875,"));
}
