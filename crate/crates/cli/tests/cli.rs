use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hm"))
        .args(args)
        .env("HM_THREADS", "2")
        .output()
        .expect("hm runs")
}

fn json_of(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_then_spectral_on_k4() {
    let dir = tempfile::tempdir().unwrap();
    let chain = dir.path().join("k4.json");
    let out = hm(&[
        "gen",
        "--family",
        "complete",
        "--n",
        "4",
        "-o",
        path(&chain),
    ]);
    assert!(out.status.success());
    let v = json_of(&hm(&["spectral", path(&chain), "--eigenvalues"]));
    assert!((v["gap"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(v["cheeger"]["mode"], "exact");
    assert_eq!(v["eigenvalues"].as_array().unwrap().len(), 4);
}

#[test]
fn harmonic_from_state_and_stationary() {
    let dir = tempfile::tempdir().unwrap();
    let chain = dir.path().join("k4.json");
    hm(&[
        "gen",
        "--family",
        "complete",
        "--n",
        "4",
        "-o",
        path(&chain),
    ]);
    let v = json_of(&hm(&[
        "harmonic",
        path(&chain),
        "--states",
        "0,1",
        "--from",
        "3",
    ]));
    for w in v["measure"]["weights"].as_array().unwrap() {
        assert!((w.as_f64().unwrap() - 0.5).abs() < 1e-12);
    }
    let set = dir.path().join("s.json");
    std::fs::write(&set, r#"{"indices": [2]}"#).unwrap();
    let v = json_of(&hm(&[
        "harmonic",
        path(&chain),
        "--set",
        path(&set),
        "--bounds",
    ]));
    assert_eq!(v["from"], "stationary");
    assert_eq!(v["bounds"]["har"]["violations"], 0);
}

#[test]
fn hitting_reports_return_times() {
    let dir = tempfile::tempdir().unwrap();
    let chain = dir.path().join("c.json");
    hm(&["gen", "--family", "cycle", "--n", "5", "-o", path(&chain)]);
    let v = json_of(&hm(&[
        "hitting",
        path(&chain),
        "--states",
        "0",
        "--u",
        "full",
    ]));
    // Kac: E_0[T_0^+] = 1 / pi(0).
    assert!((v["return"][0].as_f64().unwrap() - 5.0).abs() < 1e-9);
    let avg: f64 = v["return"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| 0.2 * r.as_f64().unwrap())
        .sum();
    assert!((v["stationary_return"].as_f64().unwrap() - avg).abs() < 1e-9);
    assert!(v["u"]["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn dla_traces_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for n in ["8", "16", "32"] {
        let chain = dir.path().join(format!("k{n}.json"));
        hm(&["gen", "--family", "complete", "--n", n, "-o", path(&chain)]);
        let traces = dir.path().join(format!("t{n}.jsonl"));
        let out = hm(&[
            "dla",
            path(&chain),
            "--start",
            "0",
            "--end",
            "1",
            "--mode",
            "walk",
            "--replicas",
            "150",
            "--seed",
            "3",
            "-o",
            path(&traces),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert_eq!(
            std::fs::read_to_string(&traces).unwrap().lines().count(),
            150
        );
        files.push(traces);
    }
    let mut args = vec!["dla-fit"];
    args.extend(files.iter().map(|p| path(p)));
    let v = json_of(&hm(&args));
    let ci = v["ci"].as_array().unwrap();
    assert!(
        ci[0].as_f64().unwrap() <= 1.0 && 1.0 <= ci[1].as_f64().unwrap(),
        "{v}"
    );
}

#[test]
fn dla_fit_rejects_single_size() {
    let dir = tempfile::tempdir().unwrap();
    let chain = dir.path().join("k.json");
    hm(&[
        "gen",
        "--family",
        "complete",
        "--n",
        "6",
        "-o",
        path(&chain),
    ]);
    let traces = dir.path().join("t.jsonl");
    hm(&[
        "dla",
        path(&chain),
        "--replicas",
        "100",
        "-o",
        path(&traces),
    ]);
    let out = hm(&["dla-fit", path(&traces)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least 3 sizes"));
}

#[test]
fn verify_writes_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let curves = dir.path().join("curves");
    for (p, threads) in [(&a, "1"), (&b, "3")] {
        let out = hm(&[
            "verify",
            "--suite",
            "identities",
            "--sizes",
            "12",
            "--seed",
            "5",
            "--threads",
            threads,
            "-o",
            path(p),
            "--curves",
            path(&curves),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(curves.join("identities_return_tail.csv").exists());
    let report: Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(report["seed"], 5);
    assert_eq!(report["pass"], true);
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"suite": "bounds", "tolerances": {"identity": -1.0}}"#,
    )
    .unwrap();
    let out = hm(&["verify", "--config", path(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tolerances.identity"));

    let out = hm(&["verify", "--suite", "torus-gap", "--sizes", "8,16"]);
    assert_eq!(out.status.code(), Some(2));

    let strict = dir.path().join("strict.json");
    std::fs::write(
        &strict,
        r#"{"suite": "tree_tightness", "tree": {"ks": [3], "seed_count": 1, "uniform_factor": 1000.0}}"#,
    )
    .unwrap();
    let out = hm(&[
        "verify",
        "--config",
        path(&strict),
        "-o",
        path(&dir.path().join("r.json")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(dir.path().join("r.json").exists());

    let out = hm(&["verify", "--suite", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_family_is_an_error() {
    let out = hm(&["gen", "--family", "hypercube", "--n", "4"]);
    assert!(!out.status.success());
}
