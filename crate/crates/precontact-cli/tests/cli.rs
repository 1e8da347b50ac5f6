use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_precontact"));
    c.env_remove("PRECONTACT_SCENARIO_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn bundled() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("precontact-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn failing_checks(r: &Value) -> Vec<String> {
    r["records"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|x| !x["pass"].as_bool().unwrap())
        .map(|x| x["check"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn all_on_the_1dim_example_passes() {
    let out = run(&["all", "example-1dim"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["schema"], "precontact-report/1");
    assert_eq!(r["pass"], true);
    let records = r["records"].as_array().unwrap();
    for section in ["structures/", "prequantizations/", "groupoids/", "actions/", "apaths/"] {
        assert!(records.iter().any(|x| x["check"].as_str().unwrap().starts_with(section)), "no {section} records");
    }
    for x in records {
        assert!(!x["anchor"].as_str().unwrap().is_empty(), "{x}");
        assert!(x.get("wall_time_s").is_none());
    }
}

#[test]
fn every_bundled_scenario_passes() {
    let mut names: Vec<_> = std::fs::read_dir(bundled())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    names.sort();
    assert!(names.len() >= 7);
    for p in names {
        let out = run(&["all", p.to_str().unwrap(), "--samples", "30"]);
        let r = report(&out);
        assert_eq!(out.status.code(), Some(0), "{}: {:?}", p.display(), failing_checks(&r));
    }
}

#[test]
fn negative_controls_are_reported_as_expected_failures() {
    let r = report(&run(&["check-structure", "structures"]));
    let rec = r["records"]
        .as_array()
        .unwrap()
        .iter()
        .find(|x| x["check"] == "structures/not-closed/not-a-structure")
        .expect("control record");
    assert_eq!(rec["expect_failure"], true);
    assert_eq!(rec["pass"], true);
    // d(x dy^dz) = dx^dy^dz
    assert!((rec["max_residual"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn unknown_identifier_exits_2_with_its_location() {
    let src = std::fs::read_to_string(bundled().join("example-1dim.json")).unwrap();
    let bad = src.replace("\"0.3 - 0.6 * t\"", "\"0.3 - 0.6 * w\"");
    assert_ne!(src, bad);
    let path = scratch("unknown-identifier.json");
    std::fs::write(&path, bad).unwrap();
    let out = run(&["all", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("apaths[1].coefficients[2]") && err.contains("column 13") && err.contains("`w`"), "{err}");
}

#[test]
fn schema_errors_exit_2() {
    let cases = [
        ("unknown-field.json", r#"{"name": "x", "bogus": 1}"#, "bogus"),
        ("syntax.json", "{\"name\": \"x\",\n \"charts\": }", "line 2"),
        (
            "unknown-chart.json",
            r#"{"name": "x", "structures": [{"name": "s", "chart": "nowhere", "kind": "two-form", "form": {}}]}"#,
            "structures[0].chart",
        ),
        (
            "repeated-index.json",
            r#"{"name": "x", "charts": {"p": {"coords": ["x", "y"], "domain": [[0, 1], [0, 1]]}},
                "structures": [{"name": "s", "chart": "p", "kind": "two-form", "form": {"x^x": "1"}}]}"#,
            "structures[0].form[\"x^x\"]",
        ),
        (
            "odd-nodes.json",
            r#"{"name": "x", "config": {"rk4_nodes": 7}}"#,
            "config",
        ),
    ];
    for (file, text, needle) in cases {
        let path = scratch(file);
        std::fs::write(&path, text).unwrap();
        let out = run(&["all", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{file}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{file}: {err}");
    }
    assert_eq!(run(&["all", "no-such-scenario"]).status.code(), Some(2));
}

#[test]
fn tiny_tolerance_on_ode_checks_fails_in_a_controlled_way() {
    let out = run(&["apath", "example-1dim", "--tol", "1e-15"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["pass"], false);
    assert_eq!(r["tol_override"], 1e-15);
    let failing = failing_checks(&r);
    assert!(failing.iter().any(|c| c.ends_with("rk4-refinement") || c.ends_with("f-tilde")), "{failing:?}");
    for x in r["records"].as_array().unwrap() {
        assert_eq!(x["threshold"], 1e-15);
        assert!(x["max_residual"].as_f64().unwrap() < 1e-10, "{x}");
    }
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let a = run(&["all", "example-sympl", "--samples", "20"]);
    let b = run(&["all", "example-sympl", "--samples", "20"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["all", "example-sympl", "--samples", "20", "--seed", "9"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn timing_adds_wall_times() {
    let r = report(&run(&["groupoid", "example-sympl", "--samples", "10", "--timing"]));
    for x in r["records"].as_array().unwrap() {
        assert!(x["wall_time_s"].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn out_writes_the_report_to_a_file() {
    let path = scratch("report.json");
    let out = run(&["prequantize", "example-1dim", "--samples", "10", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r["command"], "prequantize");
    assert_eq!(r["config"]["samples"], 10);
    assert!(r["records"].as_array().unwrap().iter().all(|x| x["check"].as_str().unwrap().starts_with("prequantizations/")));
}

#[test]
fn scenario_directory_comes_from_the_environment() {
    let dir = scratch("dir-lookup.json").parent().unwrap().join("scenarios");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("only-here.json"), r#"{"name": "only-here"}"#).unwrap();
    assert_eq!(run(&["all", "only-here"]).status.code(), Some(2));
    let out = bin().args(["all", "only-here"]).env("PRECONTACT_SCENARIO_DIR", &dir).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["scenario"], "only-here");
}

#[test]
fn reversed_component_keys_flip_the_sign() {
    let src = std::fs::read_to_string(bundled().join("example-sympl.json")).unwrap();
    let path = scratch("reversed.json");
    std::fs::write(&path, src.replace("\"omega\": { \"x^y\": \"1\" }", "\"omega\": { \"y^x\": \"-1\" }")).unwrap();
    assert_eq!(run(&["prequantize", path.to_str().unwrap(), "--samples", "20"]).status.code(), Some(0));
    // same key order with the wrong sign breaks the curvature condition
    std::fs::write(&path, src.replace("\"omega\": { \"x^y\": \"1\" }", "\"omega\": { \"y^x\": \"1\" }")).unwrap();
    let out = run(&["prequantize", path.to_str().unwrap(), "--samples", "20"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(failing_checks(&report(&out)).iter().any(|c| c.contains("preq")));
}

#[test]
fn fourth_bracket_law_is_a_documented_control() {
    let r = report(&run(&["prequantize", "example-1dim", "--samples", "20"]));
    let records = r["records"].as_array().unwrap();
    let literal = records.iter().find(|x| x["check"] == "prequantizations/line/bracket-law-4-as-stated").unwrap();
    assert_eq!(literal["expect_failure"], true);
    assert!(literal["max_residual"].as_f64().unwrap() > 1.0);
    let corrected = records.iter().find(|x| x["check"] == "prequantizations/line/bracket-law-4-sign").unwrap();
    assert_eq!(corrected["expect_failure"], false);
    assert_eq!(corrected["pass"], true);
}
