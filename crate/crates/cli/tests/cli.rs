use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use disloc_core::integrators::solve_constant_model;
use disloc_core::scenarios::{run_scenario, MaterialPreset, ScenarioConfig};
use disloc_core::harness::{CaseLabel, TestCase};
use disloc_core::{Method, SolverOptions};

fn disloc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_disloc"))
        .args(args)
        .current_dir(dir)
        .env_remove("DISLOC_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_track(path: &Path, rows: &[(f64, f64, f64)]) {
    let mut text = String::from("t,T_C,eps_dot\n");
    for (t, temp, rate) in rows {
        text.push_str(&format!("{t},{temp},{rate}\n"));
    }
    fs::write(path, text).unwrap();
}

fn final_order(csv: &str, method: &str) -> f64 {
    csv.lines()
        .filter(|l| l.split(',').nth(1) == Some(method))
        .filter_map(|l| l.rsplit(',').next().and_then(|o| o.parse().ok()))
        .next_back()
        .expect("an order")
}

#[test]
fn solve_writes_one_row_per_node() {
    let dir = tempfile::tempdir().unwrap();
    let out = disloc(dir.path(), &["solve", "--case", "ii", "--method", "euler", "--N", "1000"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("solve.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 10 * 1000 + 1);
    let summary = json(&dir.path().join("solve.json"));
    assert_eq!(summary["case"], "ii");
    assert_eq!(summary["steps"], 1000);
}

#[test]
fn solve_matches_the_library_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let out = disloc(dir.path(), &["solve", "--case", "vii", "--method", "rk4", "--N", "50"]);
    assert_eq!(code(&out), 0);
    let model = TestCase::standard(CaseLabel::Vii).model;
    let path = solve_constant_model(&model, Method::Rk4, 50, 10, &SolverOptions::default()).unwrap();
    let mut expected = Vec::new();
    path.write_csv(&mut expected).unwrap();
    assert_eq!(fs::read(dir.path().join("solve.csv")).unwrap(), expected);
}

#[test]
fn zero_hardening_stays_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = disloc(dir.path(), &["solve", "--A1", "0", "--N", "20"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("solve.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let y: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(y, 0.0);
    }
}

#[test]
fn divergence_exits_with_a_numerical_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = disloc(dir.path(), &["solve", "--case", "ii", "--A3", "1e200", "--N", "5"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("diverged"));
    assert!(files(dir.path()).is_empty());
}

#[test]
fn missing_track_exits_with_an_input_code_and_no_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = disloc(dir.path(), &["scenario", "--preset", "copper", "--track", "absent.csv"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.csv"));
    assert!(files(dir.path()).is_empty());
}

#[test]
fn unsorted_track_names_the_row() {
    let dir = tempfile::tempdir().unwrap();
    write_track(&dir.path().join("bad.csv"), &[(0.0, 600.0, 1.0), (0.2, 600.0, 1.0), (0.1, 600.0, 1.0)]);
    let out = disloc(dir.path(), &["scenario", "--preset", "copper", "--track", "bad.csv"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 4"));
    assert_eq!(files(dir.path()), ["bad.csv"]);
}

#[test]
fn usage_errors_exit_with_an_input_code() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&disloc(dir.path(), &["frobnicate"])), 3);
    assert_eq!(code(&disloc(dir.path(), &["solve", "--method", "leapfrog"])), 3);
    assert_eq!(code(&disloc(dir.path(), &["convergence", "--methods", ""])), 3);
    assert_eq!(code(&disloc(dir.path(), &["--help"])), 0);
    assert!(files(dir.path()).is_empty());
}

#[test]
fn convergence_orders_match_the_methods() {
    let dir = tempfile::tempdir().unwrap();
    let out = disloc(
        dir.path(),
        &["convergence", "--case", "ii", "--methods", "euler", "--ladder", "100,1000,10000"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    let p = final_order(&csv, "explicit-euler");
    assert!((0.9..=1.1).contains(&p), "euler order {p}");

    let out = disloc(dir.path(), &["convergence", "--case", "vii", "--methods", "rk4"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    let p = final_order(&csv, "rk4");
    assert!((3.5..=4.5).contains(&p), "rk4 order {p}");
}

#[test]
fn stability_flags_growth_for_case_v() {
    let dir = tempfile::tempdir().unwrap();
    let out = disloc(dir.path(), &["stability", "--A3-values", "0.5,5", "--N", "200"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("stability.csv")).unwrap();
    let classes: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(classes.len(), 2);
    assert_eq!(classes[0], "monotone-saturating");
    assert_eq!(classes[1], "growing-oscillatory");
}

#[test]
fn copper_scenario_reaches_its_plateau() {
    let dir = tempfile::tempdir().unwrap();
    let out = disloc(dir.path(), &["scenario", "--preset", "copper-575"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&dir.path().join("scenario.json"));
    let plateau = summary["plateau"].as_f64().unwrap();
    assert!((plateau / 4.813e13 - 1.0).abs() < 1e-3, "plateau {plateau}");
    let preset = MaterialPreset::copper_at(575.0).unwrap();
    let expected = run_scenario(&preset, &preset.track(None).unwrap(), &ScenarioConfig::default()).unwrap();
    let mut csv = Vec::new();
    expected.write_csv(&mut csv).unwrap();
    assert_eq!(fs::read(dir.path().join("scenario.csv")).unwrap(), csv);
}

#[test]
fn cooler_surface_recrystallizes_later() {
    let dir = tempfile::tempdir().unwrap();
    let times: Vec<f64> = (0..=28).map(|i| i as f64 * 0.01).collect();
    let center: Vec<_> = times.iter().map(|&t| (t, 650.0, 5.0)).collect();
    let surface: Vec<_> = times.iter().map(|&t| (t, 650.0 - 300.0 * t, 5.0)).collect();
    write_track(&dir.path().join("center.csv"), &center);
    write_track(&dir.path().join("surface.csv"), &surface);
    let out = disloc(
        dir.path(),
        &["scenario", "--preset", "copper", "--compare", "center.csv", "surface.csv"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let cmp = json(&dir.path().join("compare.json"));
    let (c, s) = (cmp["center_t_cr"].as_f64(), cmp["surface_t_cr"].as_f64());
    match (c, s) {
        (Some(c), Some(s)) => assert!(c <= s, "center {c} surface {s}"),
        (Some(_), None) => {}
        other => panic!("unexpected onsets {other:?}"),
    }
}

#[test]
fn config_file_and_environment_set_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    fs::write(dir.path().join("run.cfg"), "command = solve\ncase = vii\nmethod = rk4\nN = 40\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_disloc"))
        .args(["--config", "run.cfg", "solve", "--N", "30"])
        .current_dir(dir.path())
        .env("DISLOC_OUT_DIR", &out_dir)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&out_dir.join("solve.json"));
    assert_eq!(summary["case"], "vii");
    assert_eq!(summary["method"], "rk4");
    assert_eq!(summary["steps"], 30);

    let out = disloc(dir.path(), &["--config", "run.cfg"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&dir.path().join("solve.json"))["steps"], 40);
}
