//! End-to-end runs of the compiled binary against the scene fixtures.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use finewalk::measure::EmpiricalMeasure;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_finewalk"))
}

fn scene(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenes")
        .join(name)
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("finewalk-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn classify_prints_bare_label_for_a_single_point() {
    let out = bin()
        .args(["classify", "--scene"])
        .arg(scene("ball.json"))
        .args(["--point", "0,0,0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "FineInterior");
}

#[test]
fn classify_separates_thin_from_fat_accumulation() {
    for (file, expected) in [
        ("roadrunner_thin.json", "NotFineBoundary"),
        ("roadrunner_fat.json", "FineBoundary"),
    ] {
        let out = bin()
            .args(["classify", "--scene"])
            .arg(scene(file))
            .args(["--point", "0,0,0"])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{file}: {}", stderr(&out));
        assert_eq!(stdout(&out).trim(), expected, "{file}");
    }
}

#[test]
fn sphere_points_are_fine_boundary() {
    let out = bin()
        .args(["classify", "--scene"])
        .arg(scene("ball.json"))
        .args(["--point", "1,0,0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "FineBoundary");
}

#[test]
fn shallow_series_depth_is_honestly_indeterminate() {
    // Six terms prove neither divergence nor a summable tail here.
    let out = bin()
        .args(["classify", "--scene"])
        .arg(scene("roadrunner_fat.json"))
        .args(["--point", "0,0,0", "--depth", "6"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "Indeterminate");
}

#[test]
fn points_file_gets_one_labeled_line_each() {
    let pts = tmp("classify-points.txt");
    std::fs::write(&pts, "0.5,0,0\n# a comment\n\n2,0,0\n").unwrap();
    let out = bin()
        .args(["classify", "--scene"])
        .arg(scene("ball.json"))
        .arg("--points-file")
        .arg(&pts)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "0.5,0,0 FineInterior");
    assert_eq!(lines[1], "2,0,0 Exterior");
}

#[test]
fn classify_writes_a_json_report_with_header() {
    let report = tmp("classify-report.json");
    let out = bin()
        .args(["classify", "--scene"])
        .arg(scene("roadrunner_thin.json"))
        .args(["--point", "0,0,0", "--output"])
        .arg(&report)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(parsed["header"]["command"], "classify");
    assert!(parsed["header"]["scene_hash"].is_string());
    assert_eq!(parsed["results"][0]["label"], "NotFineBoundary");
    assert!(parsed["results"][0]["upper_sum"].as_f64().unwrap() > 0.0);
}

#[test]
fn malformed_scene_exits_one_with_a_message() {
    let bad = tmp("bad-scene.json");
    std::fs::write(&bad, "not a scene").unwrap();
    let out = bin()
        .args(["classify", "--scene"])
        .arg(&bad)
        .args(["--point", "0,0,0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error:"), "{}", stderr(&out));
}

#[test]
fn monte_carlo_commands_require_a_seed() {
    let out = bin()
        .args(["hmeasure", "--scene"])
        .arg(scene("ball.json"))
        .args(["--point", "0,0,0", "--samples", "100"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--seed"), "{}", stderr(&out));
}

#[test]
fn bad_schedule_and_unknown_data_exit_one() {
    let out = bin()
        .args(["hmeasure", "--scene"])
        .arg(scene("ball.json"))
        .args(["--point", "0,0,0", "--seed", "1", "--schedule", "0.1:2:4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    let out = bin()
        .args(["solve", "--scene"])
        .arg(scene("ball.json"))
        .args(["--point", "0,0,0", "--seed", "1", "--data", "nope"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("nope"), "{}", stderr(&out));
}

#[test]
fn point_and_points_file_are_mutually_exclusive() {
    let pts = tmp("solo.txt");
    std::fs::write(&pts, "0,0,0\n").unwrap();
    let out = bin()
        .args(["solve", "--scene"])
        .arg(scene("ball.json"))
        .args(["--point", "0,0,0", "--data", "coord1", "--seed", "1"])
        .arg("--points-file")
        .arg(&pts)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("mutually exclusive"), "{}", stderr(&out));
}

#[test]
fn hmeasure_reruns_are_byte_identical() {
    let args = |out_path: Option<&Path>| {
        let mut c = bin();
        c.args(["hmeasure", "--scene"])
            .arg(scene("ball.json"))
            .args([
                "--point",
                "0.5,0,0",
                "--seed",
                "7",
                "--samples",
                "400",
                "--schedule",
                "0.2:0.5:2",
            ]);
        if let Some(p) = out_path {
            c.arg("--output").arg(p);
        }
        c
    };

    let first = args(None).output().unwrap();
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let second = args(None).output().unwrap();
    assert_eq!(first.stdout, second.stdout);

    // The file form writes exactly the stdout bytes.
    let path = tmp("hmeasure.csv");
    let third = args(Some(&path)).output().unwrap();
    assert_eq!(third.status.code(), Some(0));
    assert_eq!(std::fs::read(&path).unwrap(), first.stdout);

    let text = stdout(&first);
    let header = text.lines().next().unwrap();
    for key in ["version=", "scene_hash=", "seed=7", "schedule=0.2:0.5:2"] {
        assert!(header.contains(key), "{header}");
    }

    // The extra header line must not break the CSV schema.
    let measure = EmpiricalMeasure::from_csv(&text).unwrap();
    assert_eq!(measure.len(), 400);
    assert_eq!(measure.barycenter, vec![0.5, 0.0, 0.0]);
}

#[test]
fn solve_tracks_the_radial_oracle_on_the_shell() {
    let out = bin()
        .args(["solve", "--scene"])
        .arg(scene("shell.json"))
        .args([
            "--data",
            "outer1",
            "--point",
            "0.75,0,0",
            "--schedule",
            "0.1:0.5:3",
            "--samples",
            "2000",
            "--seed",
            "11",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(parsed["header"]["seed"], 11);
    let point = &parsed["report"]["points"][0];
    let value = point["value"].as_f64().unwrap();
    let stderr_v = point["stderr"].as_f64().unwrap();
    let gap = point["level_gap"].as_f64().unwrap();
    // Harmonic interpolant between the hole (0) and the outer sphere (1)
    // is 2 - 1/r; the finest neighborhood still biases upward a little.
    let oracle = 2.0 - 1.0 / 0.75;
    assert!(
        (value - oracle).abs() <= 3.0 * stderr_v + gap + 0.01,
        "value {value} oracle {oracle} stderr {stderr_v} gap {gap}"
    );
    assert_eq!(parsed["report"]["range_ok"], true);
}

#[test]
fn envelope_reproduces_harmonic_data_and_reports_the_gap() {
    let out = bin()
        .args(["envelope", "--scene"])
        .arg(scene("ball.json"))
        .args([
            "--point", "0.3,0,0", "--data", "coord1", "--grid", "400", "--seed", "3",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let report = &parsed["report"];
    assert_eq!(report["pass"], true);
    assert!((report["value"].as_f64().unwrap() - 0.3).abs() <= 1e-6);
    assert!(report["gap"].as_f64().unwrap() <= 1e-7);
    assert!(parsed["header"]["scene_hash"].is_string());
}

#[test]
fn envelope_reference_integral_is_reported_when_asked() {
    let out = bin()
        .args(["envelope", "--scene"])
        .arg(scene("ball.json"))
        .args([
            "--point", "0,0,0", "--data", "radial", "--grid", "400", "--seed", "5",
            "--samples", "800",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let reference = &parsed["reference"];
    assert_eq!(reference["samples"], 800);
    // |x| integrated over near-sphere exits sits close to 1; the convex
    // envelope of radial data from the center must stay below it.
    let ref_value = reference["value"].as_f64().unwrap();
    assert!(ref_value > 0.9, "{ref_value}");
    assert!(parsed["report"]["value"].as_f64().unwrap() <= ref_value + 1e-9);
}

#[test]
fn report_runs_the_acceptance_suite() {
    let json_path = tmp("acceptance.json");
    let out = bin()
        .args(["report", "--suite", "acceptance", "--output"])
        .arg(&json_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().filter(|l| l.starts_with("criterion")).collect();
    assert_eq!(lines.len(), 10);
    assert!(lines.iter().all(|l| l.contains("PASS")), "{text}");

    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(parsed["outcomes"].as_array().unwrap().len(), 10);
    assert_eq!(parsed["header"]["command"], "report");
}

#[test]
fn unknown_suite_exits_one() {
    let out = bin().args(["report", "--suite", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("acceptance"), "{}", stderr(&out));
}
