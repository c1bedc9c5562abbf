//! CLI-level behavior: scenario runs, determinism, manifest round-trips.

use std::fs;
use std::path::Path;

use rolling_billiards::config::ScenarioConfig;
use rolling_billiards::scenario;

fn read_sorted_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .filter(|(name, _)| !name.ends_with("_manifest.json"))
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

#[test]
fn identical_configs_give_byte_identical_outputs() {
    let text = r#"{"scenario":"edge_convergence",
        "plate":{"family":"disc","radius":1.0},
        "radii":[0.1,0.03,0.01,0.003,0.001],
        "eta":0.358752,"seed":7,"n_states":2,"steps_per_crossing":400}"#;
    let config = ScenarioConfig::from_json(text).unwrap();
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    scenario::run(&config, dir_a.path(), true).unwrap();
    scenario::run(&config, dir_b.path(), true).unwrap();
    let a = read_sorted_outputs(dir_a.path());
    let b = read_sorted_outputs(dir_b.path());
    assert_eq!(a.len(), b.len());
    for ((name_a, bytes_a), (name_b, bytes_b)) in a.iter().zip(&b) {
        assert_eq!(name_a, name_b);
        assert_eq!(bytes_a, bytes_b, "{name_a} differs between runs");
    }
}

#[test]
fn manifest_config_echo_reproduces_the_run() {
    let text = r#"{"scenario":"billiard_orbit",
        "domain":{"family":"disc","radius":1.0},
        "gamma_b":0.6324555320336759,
        "n_collisions":120,
        "initial":{"x":[0.3,0.0],"u":[0.6,0.8],"spin_scalar":0.5}}"#;
    let config = ScenarioConfig::from_json(text).unwrap();
    let dir_a = tempfile::tempdir().unwrap();
    let summary = scenario::run(&config, dir_a.path(), true).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&summary.manifest).unwrap()).unwrap();
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    let echoed: ScenarioConfig =
        serde_json::from_value(manifest["config"].clone()).unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    scenario::run(&echoed, dir_b.path(), true).unwrap();
    let a = read_sorted_outputs(dir_a.path());
    let b = read_sorted_outputs(dir_b.path());
    for ((name_a, bytes_a), (name_b, bytes_b)) in a.iter().zip(&b) {
        assert_eq!(name_a, name_b);
        assert_eq!(bytes_a, bytes_b, "{name_a} differs after manifest round-trip");
    }
}

#[test]
fn roll_trajectory_scenario_writes_csv_and_events() {
    let text = r#"{"scenario":"roll_trajectory",
        "plate":{"family":"disc","radius":1.0},
        "r":0.05,"eta":0.3,"T":2.0,"h":0.0005,
        "initial":{"x":[0.0,0.0,0.05],"u":[1.0,0.1,0.0],"spin_scalar":0.4},
        "output":"roll"}"#;
    let config = ScenarioConfig::from_json(text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = scenario::run(&config, dir.path(), true).unwrap();
    let csv = fs::read_to_string(dir.path().join("roll.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,x1,x2,x3,u1,u2,u3,S12,S13,S23,energy,region"
    );
    let first = lines.next().unwrap();
    let fields: Vec<&str> = first.split(',').collect();
    assert_eq!(fields.len(), 12);
    assert_eq!(fields[0].parse::<f64>().unwrap(), 0.0);
    assert_eq!(fields[11], "flat_plus");
    // energy column is constant
    let energies: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(10).unwrap().parse::<f64>().unwrap())
        .collect();
    for e in &energies {
        assert!((e - energies[0]).abs() < 1e-12);
    }
    // events log has the sheet/tube crossings in time order
    let events = fs::read_to_string(dir.path().join("roll_events.jsonl")).unwrap();
    let mut last_t = 0.0;
    let mut n_events = 0;
    for line in events.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let t = v["t"].as_f64().unwrap();
        assert!(t > last_t);
        last_t = t;
        assert!(v["from"].is_string() && v["to"].is_string());
        n_events += 1;
    }
    assert!(n_events >= 2, "disc crossing should produce events");
    assert_eq!(summary.outputs.len(), 2);
}

#[test]
fn edge_convergence_scenario_reports_monotone_errors() {
    let text = r#"{"scenario":"edge_convergence",
        "plate":{"family":"half_plane"},
        "radii":[0.1,0.03,0.01,0.003,0.001],
        "eta":0.43,
        "incoming":{"u_bar":[0.55],"u_perp":-0.8,"w":[0.35]},
        "steps_per_crossing":800,
        "output":"conv"}"#;
    let config = ScenarioConfig::from_json(text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    scenario::run(&config, dir.path(), true).unwrap();
    let csv = fs::read_to_string(dir.path().join("conv.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "r,error,traversal_time,exit_side");
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        // straight edge: the measured map is exact at every radius
        assert!(fields[1].parse::<f64>().unwrap() < 1e-10);
        assert_eq!(fields[3], "opposite");
    }
    let summary: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("conv_summary.json")).unwrap(),
    )
    .unwrap();
    // errors at measurement precision: the rate fit is skipped
    assert!(summary["states"][0]["fitted_rate"].is_null());
}

#[test]
fn oracle_check_scenario_passes_its_own_gates() {
    let text = r#"{"scenario":"oracle_check","output":"oracle"}"#;
    let config = ScenarioConfig::from_json(text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    scenario::run(&config, dir.path(), true).unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("oracle.json")).unwrap())
            .unwrap();
    for key in [
        "cod2_pass",
        "sphere_invariant_pass",
        "edge_map_pass",
        "edge_duration_pass",
        "correspondence_pass",
    ] {
        assert_eq!(report[key], true, "{key} failed: {report}");
    }
}

#[test]
fn disc_caustics_scenario_emits_two_clusters() {
    let text = r#"{"scenario":"figure_disc_caustics","output":"fig3"}"#;
    let config = ScenarioConfig::from_json(text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    scenario::run(&config, dir.path(), true).unwrap();
    let caustics: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("fig3_caustics.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(caustics["clusters"].as_array().unwrap().len(), 2);
    let csv = fs::read_to_string(dir.path().join("fig3.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "n,x1,x2,u1,u2,W1,chord_dist");
    assert_eq!(csv.lines().count(), 501);
}

#[test]
fn csv_lines_are_crlf_terminated() {
    // RFC 4180 line endings
    let text = r#"{"scenario":"figure_disc_caustics","n_collisions":60,"output":"fig"}"#;
    let config = ScenarioConfig::from_json(text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    scenario::run(&config, dir.path(), true).unwrap();
    let bytes = fs::read(dir.path().join("fig.csv")).unwrap();
    let text = String::from_utf8(bytes).unwrap();
    assert!(text.contains("\r\n"));
    assert!(!text.replace("\r\n", "").contains('\r'));
}
