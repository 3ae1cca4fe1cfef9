//! End-to-end tests of the `covertree` binary through its CLI surface.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_covertree"))
}

fn write_csv(dir: &Path, name: &str, rows: &[&[f64]]) -> std::path::PathBuf {
    let path = dir.join(name);
    let body: String = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n");
    fs::write(&path, body + "\n").unwrap();
    path
}

fn line15_csv(dir: &Path) -> std::path::PathBuf {
    let rows: Vec<Vec<f64>> = (1..=15).map(|v| vec![v as f64]).collect();
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    write_csv(dir, "points.csv", &refs)
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no exit code")
}

#[test]
fn build_query_pipeline_on_line15() {
    let dir = tempfile::tempdir().unwrap();
    let points = line15_csv(dir.path());
    let queries = write_csv(dir.path(), "queries.csv", &[&[0.0]]);
    let tree = dir.path().join("tree.json");

    let out = bin()
        .args(["build", "--input"])
        .arg(&points)
        .args(["--root", "7", "--output"])
        .arg(&tree)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tree.exists());

    let out = bin()
        .args(["validate", "--tree"])
        .arg(&tree)
        .arg("--points")
        .arg(&points)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["ok"], true);

    let out = bin()
        .args(["query", "--tree"])
        .arg(&tree)
        .arg("--points")
        .arg(&points)
        .arg("--queries")
        .arg(&queries)
        .args(["--k", "5"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let ids: Vec<u64> = v[0]["ids"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_u64().unwrap())
        .collect();
    assert_eq!(ids, vec![0, 1, 2, 3, 4]);
}

#[test]
fn query_audit_mode_passes_on_line15() {
    let dir = tempfile::tempdir().unwrap();
    let points = line15_csv(dir.path());
    let queries = write_csv(dir.path(), "queries.csv", &[&[0.0], &[7.5], &[16.0]]);
    let tree = dir.path().join("tree.json");
    let out = bin()
        .args(["build", "--input"])
        .arg(&points)
        .args(["--root", "7", "--output"])
        .arg(&tree)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let out = bin()
        .env("COVERTREE_DEBUG_ASSERTS", "1")
        .args(["query", "--tree"])
        .arg(&tree)
        .arg("--points")
        .arg(&points)
        .arg("--queries")
        .arg(&queries)
        .args(["--k", "3"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn approximate_query_reports_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let points = line15_csv(dir.path());
    let queries = write_csv(dir.path(), "queries.csv", &[&[0.0]]);
    let tree = dir.path().join("tree.json");
    bin()
        .args(["build", "--input"])
        .arg(&points)
        .args(["--output"])
        .arg(&tree)
        .output()
        .unwrap();
    let out = bin()
        .args(["query", "--tree"])
        .arg(&tree)
        .arg("--points")
        .arg(&points)
        .arg("--queries")
        .arg(&queries)
        .args(["--k", "4", "--epsilon", "0.5"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["epsilon"], 0.5);
    assert_eq!(v[0]["ids"].as_array().unwrap().len(), 4);
}

#[test]
fn builds_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let points = line15_csv(dir.path());
    let t1 = dir.path().join("a.json");
    let t2 = dir.path().join("b.json");
    for (t, seed) in [(&t1, "9"), (&t2, "9")] {
        let out = bin()
            .args(["build", "--input"])
            .arg(&points)
            .args(["--root", "random", "--seed", seed, "--output"])
            .arg(t)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0);
    }
    assert_eq!(fs::read(&t1).unwrap(), fs::read(&t2).unwrap());
}

#[test]
fn validate_flags_corrupted_tree_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let points = line15_csv(dir.path());
    let tree = dir.path().join("tree.json");
    bin()
        .args(["build", "--input"])
        .arg(&points)
        .args(["--root", "7", "--output"])
        .arg(&tree)
        .output()
        .unwrap();
    // lift value 10 (id 9) to level 1 under the root: breaks separation
    let mut doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&tree).unwrap()).unwrap();
    for node in doc["nodes"].as_array_mut().unwrap() {
        if node["id"] == 9 {
            node["level"] = serde_json::json!(1);
            node["parent"] = serde_json::json!(7);
        }
    }
    fs::write(&tree, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = bin()
        .args(["validate", "--tree"])
        .arg(&tree)
        .arg("--points")
        .arg(&points)
        .output()
        .unwrap();
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stdout));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["ok"], false);
    assert!(!v["violations"].as_array().unwrap().is_empty());
}

#[test]
fn stats_reports_expansion_constant() {
    let dir = tempfile::tempdir().unwrap();
    let points = write_csv(
        dir.path(),
        "outlier.csv",
        &[&[1.0], &[2.0], &[3.0], &[4.0], &[9.0]],
    );
    let out = bin()
        .args(["stats", "--input"])
        .arg(&points)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["expansion_constant"], 5.0);
    assert_eq!(v["size"], 5);
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let points = line15_csv(dir.path());
    let tree = dir.path().join("tree.json");

    // missing input file -> 3
    let out = bin()
        .args(["build", "--input", "/nonexistent/points.csv", "--output"])
        .arg(&tree)
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);

    // unknown metric -> 2
    let out = bin()
        .args(["build", "--input"])
        .arg(&points)
        .args(["--metric", "cosine", "--output"])
        .arg(&tree)
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);

    // malformed CSV -> 3
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "1,2\n3\n").unwrap();
    let out = bin()
        .args(["build", "--input"])
        .arg(&bad)
        .arg("--output")
        .arg(&tree)
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);

    // k out of range -> 2
    bin()
        .args(["build", "--input"])
        .arg(&points)
        .arg("--output")
        .arg(&tree)
        .output()
        .unwrap();
    let queries = write_csv(dir.path(), "queries.csv", &[&[0.0]]);
    let out = bin()
        .args(["query", "--tree"])
        .arg(&tree)
        .arg("--points")
        .arg(&points)
        .arg("--queries")
        .arg(&queries)
        .args(["--k", "99"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn bench_emits_rows() {
    let out = bin()
        .args(["bench", "--sizes", "64,128", "--dim", "2", "--queries", "5"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["size"], 64);
    assert!(rows[0]["build_evals"].as_u64().unwrap() > 0);
}
