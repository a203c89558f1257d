//! End-to-end checks of the `qanneal` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qanneal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qanneal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const PATH4: &str =
    r#"{"n": 4, "weights": [0.5, 0.2, 0.7, 0.1], "edges": [[0, 1, 1.5], [1, 2, 1.2], [2, 3, 1.9]]}"#;

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn list_names_every_preset() {
    let o = qanneal(&["list"]);
    assert!(o.status.success());
    let names: Vec<String> = stdout(&o).lines().map(str::to_owned).collect();
    assert_eq!(names, ["fig2", "fig3", "fig4", "fig5", "fig6", "fig8", "appB", "appC"]);
}

#[test]
fn mwis_of_a_path() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "g.json", PATH4);
    let o = qanneal(&["mwis", &graph]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["vertices"], serde_json::json!([0, 2]));
    assert!((v["weight"].as_f64().unwrap() - 1.2).abs() < 1e-12);
}

#[test]
fn filter_keeps_loop_free_triples() {
    let dir = tempfile::tempdir().unwrap();
    let triangle = r#"{"n": 4, "weights": [1, 1, 1, 1], "edges": [[0, 1, 3], [1, 2, 3], [0, 2, 3], [2, 3, 3]]}"#;
    let graph = write(dir.path(), "t.json", triangle);
    let o = qanneal(&["filter", &graph, "--n", "3"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["n"], 3);
    assert_eq!(v["rejected"], serde_json::json!([[0, 1, 2]]));
    let kept = v["kept"].as_array().unwrap().len();
    assert_eq!(kept as u64 + 1, v["candidates"].as_u64().unwrap());
}

#[test]
fn unknown_preset_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = qanneal(&["preset", "fig7", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn missing_file_is_an_io_error() {
    let o = qanneal(&["mwis", "/nonexistent/graph.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn malformed_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "c.json", r#"{"instance": {"graph": {"n": 2, "weights": [1, 1], "edges": [[0, 0, 2]]}}}"#);
    let o = qanneal(&["custom", &config, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn custom_run_writes_its_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "c.json",
        &format!(r#"{{"label": "path", "instance": {{"graph": {PATH4}}}, "catalysts": [{{"family": "edges", "n": 2}}]}}"#),
    );
    let out = dir.path().join("out");
    let o = qanneal(&["custom", &config, "--out", out.to_str().unwrap(), "--grid-points", "41"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["path_graph.json", "path_xx.csv", "path_summary.csv", "manifest.json"] {
        assert!(out.join(name).exists(), "{name}");
    }
    assert_eq!(stdout(&o).lines().count(), 4);
}

#[test]
fn fig2_preset_writes_its_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = qanneal(&["preset", "fig2", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["fig2_graph.json", "fig2_none.csv", "fig2_xx.csv", "fig2_product.csv", "fig2_summary.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 20_240_917);
}
