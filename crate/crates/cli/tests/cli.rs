use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn greenlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_greenlab")).args(args).output().expect("spawn greenlab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Data rows of a CSV output, without the manifest comment and header.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn henon_degrees_double() {
    let o = greenlab(&["degrees", "henon", "--N", "6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let degrees: Vec<String> = csv_rows(&stdout(&o)).into_iter().map(|r| r[1].clone()).collect();
    assert_eq!(degrees, ["2", "4", "8", "16", "32", "64"]);
}

#[test]
fn degree_drop_fails_the_stability_check() {
    let o = greenlab(&["degrees", "cremona", "--N", "2", "--require-stable"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("n = 2"), "{}", stderr(&o));
    // The table is still printed.
    assert_eq!(csv_rows(&stdout(&o)).len(), 2);
}

#[test]
fn catalog_show_reports_both_degrees() {
    let o = greenlab(&["catalog", "show", "p3_example"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["report"]["d"], 2);
    assert_eq!(doc["report"]["delta"], 2);
}

#[test]
fn unknown_label_is_a_usage_error() {
    let o = greenlab(&["degrees", "no_such_map"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn truncated_json_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"k": 1, "forward": ["#).unwrap();
    let o = greenlab(&["degrees", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 1") && err.contains("column"), "{err}");
}

#[test]
fn common_factor_loads_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cubic.json");
    let map = r#"{"k": 1, "label": "cubic_with_factor", "forward": [
        {"degree": 3, "k": 1, "terms": [{"num": "1", "den": "1", "exp": [3, 0]}]},
        {"degree": 3, "k": 1, "terms": [{"num": "1", "den": "1", "exp": [1, 2]}]}]}"#;
    fs::write(&path, map).unwrap();
    let o = greenlab(&["degrees", path.to_str().unwrap(), "--N", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("common factor"));
    let degrees: Vec<String> = csv_rows(&stdout(&o)).into_iter().map(|r| r[1].clone()).collect();
    assert_eq!(degrees, ["2", "4", "8"]);
}

#[test]
fn catalog_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let shown = greenlab(&["catalog", "show", "henon"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&shown)).unwrap();
    let path = dir.path().join("henon.json");
    fs::write(&path, doc["report"]["map"].to_string()).unwrap();
    let from_file = greenlab(&["degrees", path.to_str().unwrap(), "--N", "4"]);
    let from_label = greenlab(&["degrees", "henon", "--N", "4"]);
    assert_eq!(from_file.status.code(), Some(0), "{}", stderr(&from_file));
    assert_eq!(stdout(&from_file), stdout(&from_label));
}

fn read_outputs(dir: &Path) -> (String, serde_json::Value) {
    let mixing = fs::read_to_string(dir.join("mixing.csv")).unwrap();
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    (mixing, manifest)
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let root = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for threads in ["1", "4"] {
        let dir = root.path().join(threads);
        let o = greenlab(&[
            "mixing",
            "power_map",
            "--N",
            "3",
            "--M",
            "4000",
            "--seed",
            "9",
            "--threads",
            threads,
            "--out-dir",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        runs.push(read_outputs(&dir));
    }
    let (csv1, man1) = &runs[0];
    let (csv4, man4) = &runs[1];
    assert_eq!(csv1, csv4);
    assert_eq!(man1["hash"], man4["hash"]);
    assert_eq!(man1["threads"], 1);
    assert_eq!(man4["threads"], 4);
    let hash = man1["hash"].as_str().unwrap();
    assert!(csv1.starts_with(&format!("# manifest {hash}\n")));
    assert_eq!(man1["outputs"], serde_json::json!(["mixing.csv"]));
}

#[test]
fn seed_changes_the_manifest_hash() {
    let a = greenlab(&["degrees", "henon", "--N", "2", "--seed", "1"]);
    let b = greenlab(&["degrees", "henon", "--N", "2", "--seed", "2"]);
    let first = |o: &Output| stdout(o).lines().next().unwrap().to_string();
    assert_ne!(first(&a), first(&b));
}

#[test]
fn failed_contraction_exits_with_check_code() {
    // Without the coordinate change the subspace meets I+.
    let o = greenlab(&["contract", "p3_example", "--lambda", "1/2", "--samples", "100"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["report"]["verified"], false);
}
