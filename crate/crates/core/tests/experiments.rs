//! Presets and custom runs through the file-emitting pipeline.

use std::fs;
use std::path::Path;

use qanneal::experiments::{
    run_custom, run_preset, CatalystSpec, ExperimentConfig, InstanceSpec, RunOptions,
};
use qanneal::graph::{erdos_renyi_instance, BipartiteToySpec, ErdosRenyiSpec, GraphJson};
use qanneal::hamiltonian::problem_hamiltonian;
use qanneal::spectrum::problem_gap;
use qanneal::Error;
use serde_json::Value;

fn opts(dir: &Path) -> RunOptions {
    RunOptions {
        out: dir.to_path_buf(),
        ..RunOptions::default()
    }
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&read(dir, "manifest.json")).unwrap()
}

fn toy_config(label: &str, catalysts: Vec<CatalystSpec>) -> ExperimentConfig {
    ExperimentConfig {
        label: label.into(),
        instance: InstanceSpec::Bipartite(BipartiteToySpec::standard(3)),
        catalysts,
        partition: None,
        seed: None,
        grid_points: None,
        tol: None,
    }
}

#[test]
fn custom_product_reproduces_the_preset_row() {
    let preset_dir = tempfile::tempdir().unwrap();
    run_preset("fig2", &opts(preset_dir.path())).unwrap();
    let custom_dir = tempfile::tempdir().unwrap();
    let config = toy_config(
        "fig2",
        vec![CatalystSpec::Product {
            sign: Default::default(),
        }],
    );
    run_custom(&config, &opts(custom_dir.path())).unwrap();
    assert_eq!(
        read(preset_dir.path(), "fig2_product.csv"),
        read(custom_dir.path(), "fig2_product.csv")
    );
    let header = read(preset_dir.path(), "fig2_none.csv");
    assert!(header.starts_with("s,gap,order_param,flag_degenerate\n"));
    // 101 grid rows plus any points inserted while bisecting jumps.
    let s: Vec<f64> = header
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(s.len() >= 101);
    for k in 0..=100 {
        let grid = k as f64 / 100.0;
        assert!(s.iter().any(|x| (x - grid).abs() < 1e-12), "missing s={grid}");
    }
    let summary = read(preset_dir.path(), "fig2_summary.csv");
    assert!(summary.starts_with("catalyst,delta_min,s_star,problem_gap,ratio,max_jump,classification\n"));
}

#[test]
fn empty_placement_equals_no_catalyst() {
    let dir = tempfile::tempdir().unwrap();
    let config = toy_config(
        "toy",
        vec![
            CatalystSpec::None,
            CatalystSpec::Explicit {
                subsets: vec![],
                sign: Default::default(),
                label: "empty".into(),
            },
        ],
    );
    run_custom(&config, &opts(dir.path())).unwrap();
    assert_eq!(read(dir.path(), "toy_none.csv"), read(dir.path(), "toy_empty.csv"));
}

#[test]
fn custom_random_instance_reports_the_problem_gap() {
    let spec = ErdosRenyiSpec::ensemble_default(8, 42);
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        label: "er".into(),
        instance: InstanceSpec::ErdosRenyi(spec.clone()),
        catalysts: vec![],
        partition: None,
        seed: Some(9),
        grid_points: Some(41),
        tol: None,
    };
    let report = run_custom(&config, &opts(dir.path())).unwrap();
    let standalone = problem_gap(&problem_hamiltonian(&erdos_renyi_instance(&spec).unwrap()).unwrap());
    let row = &report.manifest["results"]["er_summary"][0];
    assert_eq!(row["problem_gap"].as_f64().unwrap(), standalone);
    assert_eq!(report.manifest["options"]["seed"], 9);
    assert_eq!(report.manifest["config"]["label"], "er");
    assert_eq!(read(dir.path(), "er_none.csv").lines().count(), 42);
}

#[test]
fn custom_graph_file_round_trips() {
    let json: GraphJson = serde_json::from_str(
        r#"{"n": 4, "weights": [0.5, 0.2, 0.7, 0.1], "edges": [[0, 1, 1.5], [1, 2, 1.2], [2, 3, 1.9]]}"#,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        label: "path".into(),
        instance: InstanceSpec::Graph(json.clone()),
        catalysts: vec![CatalystSpec::Edges {
            n: 2,
            sign: Default::default(),
        }],
        partition: None,
        seed: None,
        grid_points: None,
        tol: None,
    };
    run_custom(&config, &opts(dir.path())).unwrap();
    let written: GraphJson = serde_json::from_str(&read(dir.path(), "path_graph.json")).unwrap();
    assert_eq!(written, json);
    let m = manifest(dir.path());
    assert_eq!(m["results"]["partition"]["b"], serde_json::json!([0, 2]));
}

#[test]
fn invalid_inputs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        run_preset("fig7", &opts(dir.path())),
        Err(Error::UnknownPreset(_))
    ));
    let config = toy_config(
        "bad",
        vec![CatalystSpec::Explicit {
            subsets: vec![vec![0, 9]],
            sign: Default::default(),
            label: String::new(),
        }],
    );
    let err = run_custom(&config, &opts(dir.path())).unwrap_err();
    assert!(matches!(err, Error::InvalidSubset { .. }));
    assert_eq!(err.exit_code(), 2);
    let coarse = ExperimentConfig {
        grid_points: Some(5),
        ..toy_config("coarse", vec![])
    };
    assert!(run_custom(&coarse, &opts(dir.path())).is_err());
}

#[test]
fn ensemble_is_reproducible() {
    let runs: Vec<_> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let o = RunOptions {
                instances: Some(10),
                ..opts(dir.path())
            };
            run_preset("appC", &o).unwrap();
            dir
        })
        .collect();
    let a = read(runs[0].path(), "appC.csv");
    assert_eq!(a, read(runs[1].path(), "appC.csv"));
    assert!(a.starts_with("index,seed,delta,delta_c1,delta_c2,delta_0\n"));
    assert_eq!(a.lines().count(), 11);

    // Ratios come from the serialized instances the run recorded.
    let graphs: Vec<GraphJson> = serde_json::from_str(&read(runs[0].path(), "appC_instances.json")).unwrap();
    for (line, g) in a.lines().skip(1).zip(&graphs) {
        let delta_0: f64 = line.split(',').nth(5).unwrap().parse().unwrap();
        let graph = qanneal::graph::WeightedGraph::from_json(g).unwrap();
        let expected = problem_gap(&problem_hamiltonian(&graph).unwrap());
        assert!((delta_0 - expected).abs() <= 1e-12 * expected.abs().max(1.0));
    }
}

#[test]
fn tabulated_instance_with_given_weights() {
    let dir = tempfile::tempdir().unwrap();
    let o = RunOptions {
        weights: Some(vec![0.61, 0.35, 0.82, 0.14, 0.47, 0.93, 0.28, 0.55, 0.71, 0.39]),
        ..opts(dir.path())
    };
    run_preset("fig8", &o).unwrap();
    let m = manifest(dir.path());
    assert_eq!(m["results"]["weights"]["source"], "user");
    assert_eq!(m["results"]["triples"]["naive_connected_triples"], 57);
    for name in ["fig8_none.csv", "fig8_xx.csv", "fig8_xx_xxx.csv", "fig8_summary.csv", "fig8_graph.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn family_scaling_layout() {
    let dir = tempfile::tempdir().unwrap();
    let o = RunOptions {
        sizes: Some(vec![5, 7, 9]),
        ..opts(dir.path())
    };
    run_preset("fig6", &o).unwrap();
    for family in ["all", "edges", "complement", "optimal"] {
        for n in [2, 3] {
            let csv = read(dir.path(), &format!("fig6_{family}_n{n}.csv"));
            let lines: Vec<&str> = csv.lines().collect();
            assert_eq!(lines[0], "L,delta_min");
            assert_eq!(lines.len(), 1 + 3 + 3);
            assert!(lines[4].starts_with("#A="));
        }
    }
    let m = manifest(dir.path());
    assert!(m["results"]["optimal_n2"]["delta_min_L5"].as_f64().unwrap() > 0.0);
}
