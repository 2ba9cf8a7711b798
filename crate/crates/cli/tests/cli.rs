use std::process::{Command, Output};

use serde_json::Value;

fn revjuggle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_revjuggle"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn has_float(v: &Value) -> bool {
    match v {
        Value::Number(n) => n.is_f64(),
        Value::Array(items) => items.iter().any(has_float),
        Value::Object(map) => map.values().any(has_float),
        _ => false,
    }
}

fn rows(doc: &Value) -> Vec<(String, String)> {
    doc["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            (
                r["state"].as_str().unwrap().to_string(),
                r["probability"].as_str().unwrap().to_string(),
            )
        })
        .collect()
}

#[test]
fn two_site_stationary_table() {
    let out = revjuggle(&["stationary", "--chain", "rjmc", "--m", "2", "--b", "1", "--x", "1/2,1/2"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let expected = [("00", "1/4"), ("01", "1/4"), ("10", "1/2")];
    let got = rows(&doc);
    assert_eq!(got.len(), 3);
    for ((s, p), (es, ep)) in got.iter().zip(expected) {
        assert_eq!((s.as_str(), p.as_str()), (es, ep));
    }
    assert_eq!(doc["config"]["m"], 2);
    assert!(!has_float(&doc));
}

#[test]
fn six_state_multispecies_table() {
    let out = revjuggle(&[
        "stationary", "--chain", "mrjmc", "--content", "1,1,1", "--alpha", "1/2,1/3", "--s", "1/3,1/3,1/3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    // (1, a1, a1, a1^2, a1 a2, a1^2 a2) / ((1 + a1)(1 + a1 + a1 a2)) at (1/2, 1/3)
    let expected = [
        ("123", "2/5"),
        ("132", "1/5"),
        ("213", "1/5"),
        ("231", "1/10"),
        ("312", "1/15"),
        ("321", "1/30"),
    ];
    let got = rows(&json(&out));
    assert_eq!(got.len(), 6);
    for ((s, p), (es, ep)) in got.iter().zip(expected) {
        assert_eq!((s.as_str(), p.as_str()), (es, ep));
    }
}

#[test]
fn half_line_table_reports_tail() {
    let out = revjuggle(&["stationary", "--chain", "irjmc", "--b", "1", "--knutson", "--q", "2", "--cutoff", "3"]);
    let doc = json(&out);
    assert_eq!(doc["tail"], "1/8");
    assert_eq!(doc["total"], "1/1");
    assert_eq!(doc["config"]["cutoff"], 3);
}

#[test]
fn zero_last_jump_is_rejected_with_reason() {
    let out = revjuggle(&["stationary", "--chain", "irjmc", "--x", "1/2,1/2,0"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not positive recurrent"), "{err}");
}

#[test]
fn simulation_allows_zero_last_jump_with_warning() {
    let out = revjuggle(&["simulate", "--chain", "irjmc", "--x", "1/2,1/2,0", "--steps", "500"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("x_b = 0"));
    assert!(json(&out).get("tv_distance").is_none());
}

#[test]
fn exit_codes() {
    assert_eq!(revjuggle(&["stationary"]).status.code(), Some(1));
    assert_eq!(revjuggle(&["stationary", "--chain", "rjmc", "--m", "3"]).status.code(), Some(1));
    assert_eq!(revjuggle(&["bogus"]).status.code(), Some(1));
    assert_eq!(revjuggle(&["--help"]).status.code(), Some(0));
    let big = revjuggle(&["stationary", "--chain", "rjmc", "--m", "14", "--b", "7", "--x", "1/8,1/8,1/8,1/8,1/8,1/8,1/8,1/8"]);
    assert_eq!(big.status.code(), Some(3));
    let capped = revjuggle(&["matrix", "--chain", "rjmc", "--m", "4", "--b", "2", "--x", "1/3,1/3,1/3", "--cap", "5"]);
    assert_eq!(capped.status.code(), Some(3));
    assert_eq!(revjuggle(&["verify", "--mode", "float"]).status.code(), Some(1));
}

#[test]
fn default_suite_passes_and_perturbation_fails() {
    let ok = revjuggle(&["verify"]);
    assert_eq!(ok.status.code(), Some(0));
    let doc = json(&ok);
    assert_eq!(doc["passed"], true);
    let checks = doc["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["name"] == "rjmc.lumping" && c["parameters"].as_str().unwrap().starts_with("m=3 b=2")));
    assert!(checks.iter().filter_map(|c| c.get("max_residual")).all(|r| r == "0/1"));

    let bad = revjuggle(&["verify", "--chain", "mrjmc", "--content", "1,1,1", "--perturb"]);
    assert_eq!(bad.status.code(), Some(2));
    let doc = json(&bad);
    let failed: Vec<&Value> = doc["checks"].as_array().unwrap().iter().filter(|c| c["passed"] == false).collect();
    assert!(failed.iter().any(|c| c["name"] == "mrjmc.formula_vs_oracle" && c["max_residual"] != "0/1"));
}

#[test]
fn partition_factor_lists() {
    let doc = json(&revjuggle(&[
        "partition", "--chain", "mrjmc", "--content", "1,1,1", "--s", "1/3,1/3,1/3", "--alpha", "1/2,1/3",
    ]));
    let factors: Vec<&str> = doc["factors"].as_array().unwrap().iter().map(|f| f["value"].as_str().unwrap()).collect();
    // 1 + a1 and 1 + a1 + a1 a2
    assert_eq!(factors, ["3/2", "5/3"]);
    assert_eq!(doc["value"], "5/2");

    let doc = json(&revjuggle(&["partition", "--chain", "irjmc", "--x", "1/4,1/4,1/2"]));
    let factors: Vec<&str> = doc["factors"].as_array().unwrap().iter().map(|f| f["value"].as_str().unwrap()).collect();
    // zbar_i = x_{i+1} + ... + x_b: 1/zbar_0 = 4/3 and 1/zbar_1 = 2
    assert_eq!(factors, ["4/3", "2/1"]);

    let doc = json(&revjuggle(&[
        "partition", "--chain", "imrjmc", "--content", "1,1,1", "--x", "1/4,1/4,1/4,1/4", "--alpha", "1/2,1/3",
    ]));
    assert_eq!(doc["factors"].as_array().unwrap().len(), 5);
    assert_eq!(doc["content_part"], "5/2");
    assert_eq!(revjuggle(&["partition", "--chain", "rjmc", "--m", "2", "--x", "1/2,1/2"]).status.code(), Some(1));
}

#[test]
fn float_mode_and_csv() {
    let out = revjuggle(&["stationary", "--chain", "rjmc", "--m", "2", "--b", "1", "--x", "1/2,1/2", "--mode", "float"]);
    let doc = json(&out);
    assert_eq!(doc["rows"][2]["probability"], 0.5);

    let out = revjuggle(&["simulate", "--chain", "rjmc", "--m", "3", "--b", "2", "--x", "1/3,1/3,1/3", "--steps", "50", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,state"));
    assert_eq!(lines.next(), Some("0,000"));
    assert_eq!(text.lines().count(), 52);
}

#[test]
fn config_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"chain": "rjmc", "m": 3, "x": ["1/3", 0.5, "1/6"]}"#).unwrap();
    let from_file = revjuggle(&["stationary", "--config", path.to_str().unwrap()]);
    let from_flags = revjuggle(&["stationary", "--chain", "rjmc", "--m", "3", "--x", "1/3,1/2,1/6"]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(from_file.stdout, from_flags.stdout);

    std::fs::write(&path, r#"{"chain": "rjmc", "bogus": 1}"#).unwrap();
    assert_eq!(revjuggle(&["stationary", "--config", path.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn out_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    let out = revjuggle(&[
        "matrix", "--chain", "rjmc", "--m", "2", "--b", "1", "--x", "1/3,2/3", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next(), Some("state,00,01,10"));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn matrix_model_report() {
    let out = revjuggle(&["matrixmodel", "--b", "2", "--q", "2", "--steps", "20000", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["report"]["first_projection"][0]["expected"], "1/4");
    assert_eq!(revjuggle(&["matrixmodel", "--b", "2", "--q", "4"]).status.code(), Some(1));
}
