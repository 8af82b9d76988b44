//! The `qdiv` binary: exit codes, output layout and determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn qdiv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdiv"))
        .args(args)
        .output()
        .unwrap()
}

fn write_scenario(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = r#"{
  "model": {"name": "pauli", "params": {"rates": [
    {"form": "constant", "c": 1.0},
    {"form": "constant", "c": 1.0},
    {"form": "sinusoid", "a": 1.5, "omega": 2.0, "phi": 0.0}
  ]}},
  "grid": {"t_max": 3.0, "steps": 30},
  "witnesses": [
    {"witness": {"kind": "blp_trace_distance"}, "random_probes": 3},
    {"witness": {"kind": "fidelity"}, "ancilla_k": 2, "random_probes": 2},
    {"witness": {"kind": "negativity"}, "ancilla_k": 2, "random_probes": 2}
  ],
  "seed": 11
}"#;

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn version_and_listing() {
    let v = qdiv(&["--version"]);
    assert!(v.status.success());
    assert!(String::from_utf8_lossy(&v.stdout).contains(env!("CARGO_PKG_VERSION")));
    let l = qdiv(&["list-models"]);
    assert_eq!(l.status.code(), Some(0));
    let text = String::from_utf8_lossy(&l.stdout);
    assert!(text.contains("eternal"));
    assert!(text.contains("blp_trace_distance"));
}

#[test]
fn malformed_file_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cases = [
        ("syntax.json", "{\"model\": "),
        (
            "unknown_field.json",
            &SMALL.replace("\"seed\": 11", "\"seed\": 11, \"colour\": 1"),
        ),
        (
            "bad_grid.json",
            &SMALL.replace("\"steps\": 30", "\"steps\": 1"),
        ),
        (
            "bad_kind.json",
            &SMALL.replace("\"fidelity\"", "\"fidelty\""),
        ),
        (
            "bad_alpha.json",
            &SMALL.replace(
                "{\"kind\": \"fidelity\"}",
                "{\"kind\": \"sandwiched\", \"alpha\": 0.2}",
            ),
        ),
        ("bad_model.json", &SMALL.replace("\"pauli\"", "\"eternal\"")),
    ];
    for (name, body) in cases {
        let path = write_scenario(dir.path(), name, body);
        let o = qdiv(&[
            "run",
            path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{name}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(!out.exists(), "{name} wrote outputs");
    }
    let o = qdiv(&["run", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3_and_keeps_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"model": {"name": "dephasing", "params": {"rate": {"form": "constant", "c": 1e308}}},
        "grid": {"t_max": 1.0, "steps": 4},
        "witnesses": [{"witness": {"kind": "blp_trace_distance"}, "random_probes": 1}],
        "seed": 1}"#;
    let path = write_scenario(dir.path(), "overflow.json", body);
    let out = dir.path().join("out");
    let o = qdiv(&[
        "run",
        path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(out.join("manifest.json").exists());
}

#[test]
fn runs_are_byte_identical_and_seeds_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), "small.json", SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = qdiv(&[
            "run",
            path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let (fa, fb) = (files(&a), files(&b));
    assert_eq!(fa.len(), fb.len());
    for ((na, ca), (nb, cb)) in fa.iter().zip(&fb) {
        assert_eq!(na, nb);
        if na != Path::new("manifest.json") {
            assert_eq!(ca, cb, "{} differs", na.display());
        }
    }
    for name in [
        "divisibility.json",
        "reconciliation.json",
        "summary.json",
        "manifest.json",
    ] {
        assert!(a.join(name).exists(), "{name}");
    }
    let csvs: Vec<_> = fa
        .iter()
        .filter(|(n, _)| n.extension().is_some_and(|e| e == "csv"))
        .collect();
    assert_eq!(csvs.len(), 7);
    for (_, c) in csvs {
        let text = String::from_utf8_lossy(c);
        assert!(text.starts_with("time,value,derivative,violation_flag\n"));
        assert_eq!(text.lines().count(), 32);
    }

    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    let seeds = &manifest["seeds"];
    assert_eq!(seeds["master"], 11);
    assert_eq!(seeds["divisibility"], qdiv::random::sub_seed(11, 0));
    let w: Vec<u64> = seeds["witnesses"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert_eq!(
        w,
        (1..=3)
            .map(|i| qdiv::random::sub_seed(11, i))
            .collect::<Vec<_>>()
    );

    let reseeded = dir.path().join("c");
    let o = qdiv(&[
        "run",
        path.to_str().unwrap(),
        "--out",
        reseeded.to_str().unwrap(),
        "--seed",
        "12",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_ne!(
        fs::read(a.join("divisibility.json")).unwrap(),
        fs::read(reseeded.join("divisibility.json")).unwrap()
    );
}
