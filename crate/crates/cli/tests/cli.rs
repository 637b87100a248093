use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn qd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qd")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn identity_on_the_disc_passes() {
    let out = qd(&["identity", "--scenario", "disc-mean-value", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], "qd-report/1");
    assert_eq!(v["status"], "pass");
    assert!(v.get("timestamp").is_none());
    let r = v["result"]["verification"][0]["max_residual"].as_f64().unwrap();
    assert!(r < 1e-8, "{r}");
}

#[test]
fn timestamp_present_by_default() {
    let v = json(&qd(&["catalog"]));
    assert!(v["timestamp"].as_u64().is_some());
}

#[test]
fn catalog_lists_required_ids() {
    let v = json(&qd(&["catalog", "--no-timestamp"]));
    let ids: Vec<&str> = v["result"]["scenarios"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["id"].as_str().unwrap())
        .collect();
    for id in [
        "disc-mean-value",
        "bidisc-product",
        "cardioid",
        "bergman-coordinate-not-qd",
        "exp-qd-not-qdp",
        "nonalgebraic-kernel",
        "one-point-qdp",
        "dilation-homotopy",
        "straight-line-epsilon",
        "convex-deform",
    ] {
        assert!(ids.contains(&id), "{id}");
    }
}

#[test]
fn unknown_scenario_is_an_error() {
    let out = qd(&["identity", "--scenario", "no-such-thing", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["status"], "error");
    assert!(v["error"].as_str().unwrap().contains("no-such-thing"));
}

#[test]
fn malformed_spec_is_an_error() {
    let out = qd(&["identity", "--spec", "{\"id\": 3}", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unsupported_operation_is_an_error() {
    let out = qd(&["deform", "--scenario", "disc-mean-value", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn expected_negative_qdp_run_passes() {
    let out = qd(&["qdp-check", "--scenario", "exp-qd-not-qdp", "--max-degree", "3", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["raw_exit_code"], 2);
    assert_eq!(v["result"]["annotation"], "expected-negative");
    let rows = v["result"]["rows"].as_array().unwrap();
    assert!(rows.iter().any(|r| r["verdict"] == "in_span"));
    assert!(rows.iter().any(|r| r["verdict"] == "not_in_span"));
}

#[test]
fn verification_failure_exits_two() {
    let out = qd(&["membership", "--scenario", "bergman-coordinate-not-qd", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["status"], "fail");
}

#[test]
fn inline_spec_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = qd_cli::find("cardioid").unwrap();
    let path = dir.path().join("cardioid.json");
    fs::write(&path, serde_json::to_string(&spec).unwrap()).unwrap();
    let report = dir.path().join("report.json");
    let out = qd(&[
        "identity",
        "--spec",
        path.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
        "--no-timestamp",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let from_file: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let direct = json(&qd(&["identity", "--scenario", "cardioid", "--no-timestamp"]));
    assert_eq!(from_file, direct);
}

#[test]
fn dilation_frames_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = qd(&[
        "homotopy",
        "--scenario",
        "dilation-homotopy",
        "--frames",
        "20",
        "--svg",
        dir.path().to_str().unwrap(),
        "--no-timestamp",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let frames: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(frames.len(), 20);
    let v = json(&out);
    assert_eq!(v["result"]["trace"]["entries"].as_array().unwrap().len(), 20);
    let first = fs::read_to_string(dir.path().join("frame_000.svg")).unwrap();
    assert!(first.starts_with("<svg"));
}

#[test]
fn chord_arc_svg_uses_even_odd_fill() {
    let dir = tempfile::tempdir().unwrap();
    let out = qd(&["chord-arc", "--scenario", "two-hole-chord-arc", "--svg", dir.path().to_str().unwrap(), "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0));
    let svg = fs::read_to_string(dir.path().join("two-hole-chord-arc.svg")).unwrap();
    assert!(svg.contains("fill-rule=\"evenodd\""));
}

#[test]
fn seed_flag_changes_sampled_reports_only_through_the_seed() {
    let a = qd(&["chord-arc", "--scenario", "annulus-chord-arc", "--seed", "5", "--no-timestamp"]);
    let b = qd(&["chord-arc", "--scenario", "annulus-chord-arc", "--seed", "5", "--no-timestamp"]);
    let c = qd(&["chord-arc", "--scenario", "annulus-chord-arc", "--seed", "6", "--no-timestamp"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(json(&a)["seed"], 5);
}

#[test]
fn schedule_mode_from_synthetic_profile() {
    let mut spec = qd_cli::find("dilation-homotopy").unwrap();
    let mut h = spec.homotopy.clone().unwrap();
    h.mode = "schedule".into();
    h.frames = 101;
    h.radius_profile = Some(qd_cli::scenario::RadiusProfile {
        dip: 0.5,
        from: 0.3,
        to: 0.7,
    });
    spec.homotopy = Some(h);
    let text = serde_json::to_string(&spec).unwrap();
    let out = qd(&["homotopy", "--spec", &text, "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["m"], 0.5);
    let k = v["result"]["k"].as_array().unwrap();
    assert_eq!(k[0], 1.0);
    assert_eq!(k[100], 1.0);
    assert_eq!(k[50], 0.25);
}
