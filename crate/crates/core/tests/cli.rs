use std::path::Path;
use std::process::{Command, Output};

fn graphmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphmix"))
        .args(args)
        .env_remove("GRAPHMIX_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = graphmix(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

const LOCAL_CONFIG: &str = r#"{
  "graph": "cycle:60",
  "field": {"kind": "local_average", "radius": 1, "noise": {"kind": "uniform", "lo": 0, "hi": 1}},
  "partition": {"source": "residue"},
  "d": {"mode": "fixed", "d": 3},
  "hypotheses": {"m": 4},
  "beta": 0.1,
  "delta": 0.05,
  "trials": 300,
  "seed": 17,
  "audit_trials": 3
}"#;

#[test]
fn bound_commands_print_expected_values() {
    let v: serde_json::Value = serde_json::from_str(&stdout(&[
        "bound", "pacbayes-iid", "--n", "900", "--kl", "0", "--delta", "0.1353352832366127", "--format", "json",
    ]))
    .unwrap();
    assert!((v["value"].as_f64().unwrap() - 0.1333333).abs() <= 1e-7, "{v}");

    let v: serde_json::Value = serde_json::from_str(&stdout(&[
        "bound", "pacbayes-graph", "--n", "400", "--delta", "0.05", "--kl", "1", "--phi", "0.02", "--w", "9",
        "--format", "json",
    ]))
    .unwrap();
    assert!((v["value"].as_f64().unwrap() - 0.7231966).abs() <= 1e-6, "{v}");

    let text = stdout(&["bound", "tune-d", "--c", "1", "--tau", "2", "--n", "100000"]);
    assert!(text.contains("24"), "{text}");
}

#[test]
fn infinite_phi_gives_vacuous_bound() {
    let out = stdout(&[
        "bound", "concentration", "--n", "100", "--delta", "0.05", "--phi", "inf", "--format", "json",
    ]);
    assert!(out.contains("inf"), "{out}");
}

#[test]
fn partitions_report_weight_sums() {
    let v: serde_json::Value =
        serde_json::from_str(&stdout(&["partition", "exact", "--graph", "cycle:5", "--d", "2", "--format", "json"]))
            .unwrap();
    assert_eq!(v["weight_sum"], "5/2", "{v}");

    let v: serde_json::Value = serde_json::from_str(&stdout(&[
        "partition", "residue", "--graph", "torus:12x12", "--d", "3", "--validate", "--format", "json",
    ]))
    .unwrap();
    assert_eq!(v["weight_sum"], "9", "{v}");
}

#[test]
fn invalid_family_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let fam = stdout(&["partition", "greedy", "--graph", "path:6", "--d", "2", "--format", "json"]);
    let fam_path = write_config(dir.path(), "fam.json", &fam);
    let ok = graphmix(&["partition", "validate", "--graph", "path:6", "--family", &fam_path]);
    assert_eq!(ok.status.code(), Some(0));
    // the same family is too coarse for d = 2 on a denser graph
    let bad = graphmix(&["partition", "validate", "--graph", "complete:6", "--family", &fam_path]);
    assert_eq!(bad.status.code(), Some(1), "{}", String::from_utf8_lossy(&bad.stdout));
}

#[test]
fn bad_arguments_exit_with_two() {
    assert_eq!(graphmix(&["bound", "concentration", "--n", "10"]).status.code(), Some(2));
    assert_eq!(
        graphmix(&["bound", "concentration", "--n", "10", "--delta", "1.5"]).status.code(),
        Some(2)
    );
    assert_eq!(graphmix(&["graph", "info", "--graph", "blob:3"]).status.code(), Some(2));
    assert_eq!(graphmix(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn experiment_writes_artifacts_to_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", LOCAL_CONFIG);
    let out = dir.path().join("run");
    let status = graphmix(&["run-generalization", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["trials"], 300);
    assert_eq!(report["d"], 3);
    assert_eq!(report["audit"]["shelter_violations"], 0);
    let csv = std::fs::read_to_string(out.join("trials.csv")).unwrap();
    assert_eq!(csv.lines().count(), 301);
    assert!(std::fs::read_to_string(out.join("histogram.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn seed_override_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", LOCAL_CONFIG);
    let a = stdout(&["verify-concentration", "--config", &cfg, "--format", "csv"]);
    let b = stdout(&["verify-concentration", "--config", &cfg, "--format", "csv", "--seed", "18"]);
    assert_ne!(a, b);
}

#[test]
fn config_normalize_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", LOCAL_CONFIG);
    let once = stdout(&["config", "normalize", "--config", &cfg]);
    let again_path = write_config(dir.path(), "norm.json", &once);
    assert_eq!(stdout(&["config", "normalize", "--config", &again_path]), once);
}

#[test]
fn game_play_outputs_csv_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", LOCAL_CONFIG);
    let csv = stdout(&["game", "play", "--config", &cfg, "--format", "csv"]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("round,vertex,cost,cumulative_m"));
    assert_eq!(lines.count(), 60);
}
