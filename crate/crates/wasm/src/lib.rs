//! Browser bindings. Each export takes plain numbers and strings and returns
//! a JSON document; the page in `www/` draws them.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use disloc_core::analytic::{AnalyticConfig, AnalyticSolution};
use disloc_core::harness::{self, CaseLabel, RunOptions, StabilityEntry, TestCase};
use disloc_core::integrators::{solve_constant_model, PathFlags};
use disloc_core::{ConstantModel, Method, SolverOptions};

/// Points kept per curve for plotting.
const MAX_POINTS: usize = 2_000;

#[derive(Serialize)]
struct SolveOutput {
    method: Method,
    t_cr: f64,
    saturation: f64,
    /// Thinned numerical nodes.
    t: Vec<f64>,
    rho: Vec<f64>,
    /// Semi-analytic values at the same times, up to its horizon.
    analytic: Vec<f64>,
    /// Worst node error against the semi-analytic solution.
    error: Option<f64>,
    flags: PathFlags,
}

#[derive(Serialize)]
struct StabilityOutput {
    a3: Vec<f64>,
    entries: Vec<StabilityEntry>,
    /// Path of the last entry, for a preview.
    t: Vec<f64>,
    rho: Vec<f64>,
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

fn model(a1: f64, a2: f64, a3: f64, a8: f64, rho0: f64, rho_cr: f64) -> ConstantModel {
    ConstantModel {
        hardening: a1,
        recovery: a2,
        recrystallization: a3,
        a8,
        rho0,
        rho_cr,
    }
}

fn thin(path: &disloc_core::SolutionPath) -> (Vec<f64>, Vec<f64>) {
    let nodes: Vec<(f64, f64)> = path.nodes().map(|(_, _, t, y)| (t, y)).collect();
    let stride = nodes.len().div_ceil(MAX_POINTS).max(1);
    let mut kept: Vec<(f64, f64)> = nodes.iter().copied().step_by(stride).collect();
    if let Some(&last) = nodes.last() {
        if kept.last() != Some(&last) {
            kept.push(last);
        }
    }
    kept.into_iter().unzip()
}

/// Solves the constant-coefficient model and overlays the semi-analytic
/// solution where one exists.
#[allow(clippy::too_many_arguments)]
pub fn solve_json(
    a1: f64,
    a2: f64,
    a3: f64,
    a8: f64,
    rho0: f64,
    rho_cr: f64,
    method: &str,
    steps: usize,
    intervals: usize,
) -> Result<String, String> {
    let m = model(a1, a2, a3, a8, rho0, rho_cr);
    let method: Method = method.parse().map_err(|e: disloc_core::Error| e.to_string())?;
    if steps == 0 || intervals == 0 {
        return Err("N and intervals must be at least 1".into());
    }
    let t_cr = m.critical_time().map_err(|e| e.to_string())?;
    let path = solve_constant_model(&m, method, steps, intervals, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let (t, rho) = thin(&path);

    let analytic_intervals = if a8 == 0.0 {
        intervals
    } else if a8 == 1.0 {
        intervals.min(2)
    } else {
        0
    };
    let (analytic, error) = if analytic_intervals > 0 {
        let sol = AnalyticSolution::constant(&m, analytic_intervals, &AnalyticConfig::default())
            .map_err(|e| e.to_string())?;
        let horizon = sol.horizon();
        let values = t.iter().take_while(|&&s| s <= horizon).map(|&s| sol.eval(s)).collect();
        let error = harness::worst_case_until(&path, |s| sol.eval(s), horizon).error;
        (values, Some(error))
    } else {
        (Vec::new(), None)
    };

    to_json(&SolveOutput {
        method,
        t_cr,
        saturation: m.saturation(),
        t,
        rho,
        analytic,
        error,
        flags: path.flags,
    })
}

/// Error table of one test case; `methods` is a comma-separated list.
pub fn convergence_json(case: &str, methods: &str, tail: bool) -> Result<String, String> {
    let label: CaseLabel = case.parse().map_err(|e: disloc_core::Error| e.to_string())?;
    let methods = methods
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<Method>, _>>()
        .map_err(|e| e.to_string())?;
    let options = RunOptions {
        tail,
        ..RunOptions::default()
    };
    let report = harness::run_case_default(&TestCase::standard(label), &methods, &options).map_err(|e| e.to_string())?;
    to_json(&report)
}

/// Classifies RK4 solutions over `count` values of `A₃` in `[a3_min, a3_max]`.
#[allow(clippy::too_many_arguments)]
pub fn stability_json(
    a1: f64,
    a2: f64,
    rho_cr: f64,
    a3_min: f64,
    a3_max: f64,
    count: usize,
    steps: usize,
    intervals: usize,
) -> Result<String, String> {
    if count == 0 || count > 200 {
        return Err("count must lie in 1..=200".into());
    }
    let base = model(a1, a2, 0.0, 0.0, 0.0, rho_cr);
    let a3 = harness::linspace(a3_min, a3_max, count);
    let entries = harness::stability_scan(&base, &a3, steps, intervals).map_err(|e| e.to_string())?;
    let last = model(a1, a2, a3[a3.len() - 1], 0.0, 0.0, rho_cr);
    let path = solve_constant_model(&last, Method::Rk4, steps, intervals, &SolverOptions::default())
        .map_err(|e| e.to_string())?;
    let (t, rho) = thin(&path);
    to_json(&StabilityOutput { a3, entries, t, rho })
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn solve(
    a1: f64,
    a2: f64,
    a3: f64,
    a8: f64,
    rho0: f64,
    rho_cr: f64,
    method: &str,
    steps: usize,
    intervals: usize,
) -> Result<String, JsError> {
    solve_json(a1, a2, a3, a8, rho0, rho_cr, method, steps, intervals).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn convergence(case: &str, methods: &str, tail: bool) -> Result<String, JsError> {
    convergence_json(case, methods, tail).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn stability(
    a1: f64,
    a2: f64,
    rho_cr: f64,
    a3_min: f64,
    a3_max: f64,
    count: usize,
    steps: usize,
    intervals: usize,
) -> Result<String, JsError> {
    stability_json(a1, a2, rho_cr, a3_min, a3_max, count, steps, intervals).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn solve_overlays_the_analytic_curve() {
        let v = parse(&solve_json(10.0, 2.0, 1.0, 0.0, 0.0, 4.0, "rk4", 100, 10).unwrap());
        let t = v["t"].as_array().unwrap();
        assert_eq!(t.len(), 1001);
        assert_eq!(v["analytic"].as_array().unwrap().len(), t.len());
        assert!(v["error"].as_f64().unwrap() < 1e-8);
    }

    #[test]
    fn long_paths_are_thinned_but_keep_the_end() {
        let v = parse(&solve_json(10.0, 2.0, 1.0, 0.0, 0.0, 4.0, "euler", 1000, 10).unwrap());
        let t = v["t"].as_array().unwrap();
        assert!(t.len() <= MAX_POINTS + 1);
        let horizon = 10.0 * v["t_cr"].as_f64().unwrap();
        assert!((t.last().unwrap().as_f64().unwrap() - horizon).abs() < 1e-9);
    }

    #[test]
    fn nonlinear_overlay_covers_two_intervals() {
        let v = parse(&solve_json(10.0, 1.0, 0.9, 1.0, 0.0, 9.0, "rk4", 100, 4).unwrap());
        let n = v["analytic"].as_array().unwrap().len();
        assert!((200..=201).contains(&n), "{n}");
    }

    #[test]
    fn bad_input_is_reported() {
        assert!(solve_json(10.0, 2.0, 1.0, 0.0, 0.0, 6.0, "rk4", 100, 10).is_err());
        assert!(solve_json(10.0, 2.0, 1.0, 0.0, 0.0, 4.0, "leapfrog", 100, 10).is_err());
        assert!(convergence_json("viii", "rk4", false).is_err());
        assert!(convergence_json("ii", "", false).is_err());
        assert!(stability_json(10.0, 1.0, 4.0, 0.0, 1.0, 0, 100, 10).is_err());
    }

    #[test]
    fn convergence_reports_rk4_order() {
        let v = parse(&convergence_json("ii", "rk4", false).unwrap());
        let order = v["rows"].as_array().unwrap().last().unwrap()["order"].as_f64().unwrap();
        assert!((3.5..=4.5).contains(&order), "{order}");
    }

    #[test]
    fn stability_separates_damped_and_growing() {
        let v = parse(&stability_json(10.0, 1.0, 4.0, 0.0, 5.0, 2, 200, 10).unwrap());
        let classes: Vec<&str> = v["entries"]
            .as_array()
            .unwrap()
            .iter()
            .map(|e| e["class"].as_str().unwrap())
            .collect();
        assert_eq!(classes, ["monotone-saturating", "growing-oscillatory"]);
    }
}
