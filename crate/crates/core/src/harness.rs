//! Worst-case errors, empirical orders and oscillation classification for
//! the constant-coefficient test cases.

use std::fmt::{self, Write as _};
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytic::{AnalyticConfig, AnalyticSolution};
use crate::error::{Error, Result};
use crate::integrators::{explicit_euler, solve_constant_model, DdeProblem, Method, SolutionPath, SolverOptions};
use crate::model::{equilibrium, ConstantModel, DislocationField};

/// Default ladder of steps per interval.
pub const DEFAULT_LADDER: [usize; 5] = [10, 100, 1_000, 10_000, 100_000];

/// Default RK4 ladder; beyond `N = 10³` its errors reach rounding level.
pub const RK4_LADDER: [usize; 3] = [10, 100, 1_000];

/// Default ladder of `method`.
pub fn default_ladder(method: Method) -> &'static [usize] {
    match method {
        Method::Rk4 => &RK4_LADDER,
        _ => &DEFAULT_LADDER,
    }
}

/// Steps per interval of the brute-force explicit Euler oracle.
pub const ORACLE_STEPS: usize = 1_000_000;

/// Largest node error `|y_k^j − reference(t_k^j)|` and where it occurs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub error: f64,
    pub interval: usize,
    pub step: usize,
    pub t: f64,
}

/// Worst case over the nodes with `t ≤ until`.
pub fn worst_case_until<F: Fn(f64) -> f64>(path: &SolutionPath, reference: F, until: f64) -> WorstCase {
    let limit = until + 1e-9 * path.grid.delay;
    let mut worst = WorstCase {
        error: 0.0,
        interval: 0,
        step: 0,
        t: 0.0,
    };
    for (j, k, t, y) in path.nodes() {
        if t > limit {
            break;
        }
        let e = (y - reference(t)).abs();
        // NaN compares false, so test the negation to keep it
        if !(e <= worst.error) {
            worst = WorstCase {
                error: e,
                interval: j,
                step: k,
                t,
            };
        }
    }
    worst
}

/// `max_{j,k} |y_k^j − reference(t_k^j)|`.
pub fn worst_case_error<F: Fn(f64) -> f64>(path: &SolutionPath, reference: F) -> f64 {
    worst_case_until(path, reference, f64::INFINITY).error
}

/// Pairwise slopes `log(e_i/e_{i+1}) / log(N_{i+1}/N_i)`; `None` where an
/// error is zero.
pub fn empirical_order(errors: &[(usize, f64)]) -> Result<Vec<Option<f64>>> {
    if errors.len() < 2 {
        return Err(Error::domain("need at least two (N, error) pairs"));
    }
    if errors.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::domain("N must be strictly increasing"));
    }
    if errors.iter().any(|&(_, e)| !(e >= 0.0)) {
        return Err(Error::domain("errors must be nonnegative"));
    }
    Ok(errors
        .windows(2)
        .map(|w| {
            let ((n1, e1), (n2, e2)) = (w[0], w[1]);
            (e1 > 0.0 && e2 > 0.0).then(|| (e1 / e2).ln() / (n2 as f64 / n1 as f64).ln())
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseLabel {
    I,
    Ii,
    Iii,
    Iv,
    V,
    Vi,
    Vii,
}

impl CaseLabel {
    pub const ALL: [CaseLabel; 7] = [
        CaseLabel::I,
        CaseLabel::Ii,
        CaseLabel::Iii,
        CaseLabel::Iv,
        CaseLabel::V,
        CaseLabel::Vi,
        CaseLabel::Vii,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CaseLabel::I => "i",
            CaseLabel::Ii => "ii",
            CaseLabel::Iii => "iii",
            CaseLabel::Iv => "iv",
            CaseLabel::V => "v",
            CaseLabel::Vi => "vi",
            CaseLabel::Vii => "vii",
        }
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_matches(|c| c == '(' || c == ')').to_ascii_lowercase();
        CaseLabel::ALL
            .into_iter()
            .find(|c| c.as_str() == t)
            .ok_or_else(|| Error::domain(format!("unknown case `{s}` (expected i..vii)")))
    }
}

/// Where the reference values come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceSource {
    /// Semi-analytic solution on the whole horizon.
    Analytic,
    /// Semi-analytic solution on `[0, 2τ]`, explicit Euler oracle after.
    AnalyticThenOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub label: CaseLabel,
    pub model: ConstantModel,
    /// Horizon in delay intervals.
    pub intervals: usize,
    pub reference: ReferenceSource,
}

impl TestCase {
    /// Parameters of the named case, all with `A₁ = 10`, `ρ₀ = 0` and a
    /// horizon of ten delay intervals. Case (iv) takes `A₃ = 1.5`, the top
    /// of its range, and case (v) takes `A₃ = 5`.
    pub fn standard(label: CaseLabel) -> Self {
        let (a8, rho_cr, a2, a3) = match label {
            CaseLabel::I => (0.0, 1.0, 1.0, 0.9),
            CaseLabel::Ii => (0.0, 4.0, 2.0, 1.0),
            CaseLabel::Iii => (0.0, 9.0, 1.0, 0.9),
            CaseLabel::Iv => (0.0, 9.0, 1.0, 1.5),
            CaseLabel::V => (0.0, 4.0, 1.0, 5.0),
            CaseLabel::Vi => (1.0, 4.0, 2.0, 1.0),
            CaseLabel::Vii => (1.0, 9.0, 1.0, 0.9),
        };
        TestCase {
            label,
            model: ConstantModel {
                hardening: 10.0,
                recovery: a2,
                recrystallization: a3,
                a8,
                rho0: 0.0,
                rho_cr,
            },
            intervals: 10,
            reference: if a8 == 0.0 {
                ReferenceSource::Analytic
            } else {
                ReferenceSource::AnalyticThenOracle
            },
        }
    }

    pub fn delay(&self) -> Result<f64> {
        self.model.critical_time()
    }

    /// Intervals covered by the analytic reference.
    pub fn analytic_intervals(&self) -> usize {
        match self.reference {
            ReferenceSource::Analytic => self.intervals,
            ReferenceSource::AnalyticThenOracle => self.intervals.min(2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub solver: SolverOptions,
    pub analytic: AnalyticConfig,
    /// Steps per interval of the tail oracle.
    pub oracle_steps: usize,
    /// Compare against the oracle beyond the analytic window.
    pub tail: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            solver: SolverOptions::default(),
            analytic: AnalyticConfig::default(),
            oracle_steps: ORACLE_STEPS,
            tail: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub method: Method,
    pub steps: usize,
    /// Worst case against the analytic reference on its window.
    pub error: f64,
    /// Worst case against the oracle beyond the analytic window.
    pub tail_error: Option<f64>,
    /// Order against the previous row of the same method.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub case: String,
    /// End of the analytic comparison window.
    pub window: f64,
    pub horizon: f64,
    /// Error bound reported by the analytic reference.
    pub reference_error: f64,
    pub rows: Vec<ErrorRow>,
}

impl ErrorReport {
    pub fn methods(&self) -> Vec<Method> {
        let mut out: Vec<Method> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.method) {
                out.push(r.method);
            }
        }
        out
    }

    /// `(N, error)` pairs of one method in ladder order.
    pub fn errors(&self, method: Method) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter(|r| r.method == method)
            .map(|r| (r.steps, r.error))
            .collect()
    }

    /// Order between the last two ladder entries of `method`.
    pub fn final_order(&self, method: Method) -> Option<f64> {
        self.rows.iter().rev().find(|r| r.method == method).and_then(|r| r.order)
    }

    pub fn error_at(&self, method: Method, steps: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.steps == steps)
            .map(|r| r.error)
    }

    /// Rows as `case,method,N,error,order`; an undefined order is empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["case", "method", "N", "error", "order"])
            .map_err(csv_error)?;
        for r in &self.rows {
            w.write_record([
                self.case.clone(),
                r.method.name().to_string(),
                r.steps.to_string(),
                format!("{:.8e}", r.error),
                r.order.map(|o| format!("{o:.4}")).unwrap_or_default(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Aligned table with one row per method and one column per `N`, then
    /// the orders.
    pub fn to_table(&self) -> String {
        let mut ladder: Vec<usize> = self.rows.iter().map(|r| r.steps).collect();
        ladder.sort_unstable();
        ladder.dedup();
        let mut s = String::new();
        let _ = writeln!(s, "case ({})  window [0, {:.6}]  horizon {:.6}", self.case, self.window, self.horizon);
        let _ = write!(s, "{:<16}", "method");
        for n in &ladder {
            let _ = write!(s, "{:>16}", format!("N={n}"));
        }
        s.push('\n');
        for m in self.methods() {
            let _ = write!(s, "{:<16}", m.label());
            for n in &ladder {
                let cell = self.error_at(m, *n).map(|e| format!("{e:.8e}")).unwrap_or_default();
                let _ = write!(s, "{cell:>16}");
            }
            s.push('\n');
            let _ = write!(s, "{:<16}", "  order");
            for n in &ladder {
                let cell = self
                    .rows
                    .iter()
                    .find(|r| r.method == m && r.steps == *n)
                    .and_then(|r| r.order)
                    .map(|o| format!("{o:.3}"))
                    .unwrap_or_default();
                let _ = write!(s, "{cell:>16}");
            }
            s.push('\n');
        }
        if self.rows.iter().any(|r| r.tail_error.is_some()) {
            let _ = writeln!(s, "beyond the window, against the explicit Euler oracle:");
            for m in self.methods() {
                let _ = write!(s, "{:<16}", m.label());
                for n in &ladder {
                    let cell = self
                        .rows
                        .iter()
                        .find(|r| r.method == m && r.steps == *n)
                        .and_then(|r| r.tail_error)
                        .map(|e| format!("{e:.8e}"))
                        .unwrap_or_default();
                    let _ = write!(s, "{cell:>16}");
                }
                s.push('\n');
            }
        }
        s
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Explicit Euler solution of `model` used as the brute-force reference.
pub fn euler_oracle(model: &ConstantModel, intervals: usize, steps: usize) -> Result<SolutionPath> {
    let t_cr = model.critical_time()?;
    let problem = DdeProblem::new(DislocationField::new(*model, model.a8), t_cr, model.rho0, intervals.max(1) - 1)
        .with_history(0.0);
    explicit_euler(&problem, steps)
}

/// Value of `oracle` at node `(j, k)` of a grid with `steps` per interval.
fn oracle_at(oracle: &SolutionPath, steps: usize, j: usize, k: usize, t: f64) -> f64 {
    let fine = oracle.grid.steps;
    if fine.is_multiple_of(steps) {
        oracle.value(j, k * (fine / steps))
    } else {
        oracle.eval(t)
    }
}

/// Runs `methods × ladder` on `case` and assembles the report.
pub fn run_case(case: &TestCase, methods: &[Method], ladder: &[usize], options: &RunOptions) -> Result<ErrorReport> {
    let ladders: Vec<(Method, &[usize])> = methods.iter().map(|&m| (m, ladder)).collect();
    run_case_with(case, &ladders, options)
}

/// Runs each method on its [`default_ladder`].
pub fn run_case_default(case: &TestCase, methods: &[Method], options: &RunOptions) -> Result<ErrorReport> {
    let ladders: Vec<(Method, &[usize])> = methods.iter().map(|&m| (m, default_ladder(m))).collect();
    run_case_with(case, &ladders, options)
}

/// Runs every `(method, ladder)` pair on `case`.
pub fn run_case_with(case: &TestCase, ladders: &[(Method, &[usize])], options: &RunOptions) -> Result<ErrorReport> {
    if ladders.is_empty() {
        return Err(Error::domain("no methods requested"));
    }
    for (_, ladder) in ladders {
        if ladder.is_empty() || ladder.windows(2).any(|w| w[1] <= w[0]) || ladder[0] == 0 {
            return Err(Error::domain("the N ladder must be nonempty, positive and increasing"));
        }
    }
    let methods: Vec<Method> = ladders.iter().map(|(m, _)| *m).collect();
    let model = case.model;
    let t_cr = model.critical_time()?;
    let reference = AnalyticSolution::constant(
        &model,
        case.analytic_intervals(),
        &AnalyticConfig {
            max_intervals_a8_one: options.analytic.max_intervals_a8_one.max(case.analytic_intervals()),
            ..options.analytic
        },
    )?;
    let window = reference.horizon();
    let oracle = if options.tail && case.analytic_intervals() < case.intervals {
        Some(euler_oracle(&model, case.intervals, options.oracle_steps)?)
    } else {
        None
    };

    let jobs: Vec<(Method, usize)> = ladders
        .iter()
        .flat_map(|&(m, ladder)| ladder.iter().map(move |&n| (m, n)))
        .collect();
    let run = |&(method, steps): &(Method, usize)| -> Result<ErrorRow> {
        let path = solve_constant_model(&model, method, steps, case.intervals, &options.solver)?;
        let error = worst_case_until(&path, |t| reference.eval(t), window).error;
        let tail_error = oracle.as_ref().map(|o| {
            path.nodes()
                .filter(|&(_, _, t, _)| t > window + 1e-9 * t_cr)
                .map(|(j, k, t, y)| (y - oracle_at(o, steps, j, k, t)).abs())
                .fold(0.0, f64::max)
        });
        Ok(ErrorRow {
            method,
            steps,
            error,
            tail_error,
            order: None,
        })
    };
    #[cfg(feature = "parallel")]
    let results: Vec<Result<ErrorRow>> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<ErrorRow>> = jobs.iter().map(run).collect();

    let mut rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    for m in &methods {
        let idx: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].method == *m).collect();
        let pairs: Vec<(usize, f64)> = idx.iter().map(|&i| (rows[i].steps, rows[i].error)).collect();
        if pairs.len() >= 2 {
            for (w, order) in idx[1..].iter().zip(empirical_order(&pairs)?) {
                rows[*w].order = order;
            }
        }
    }
    Ok(ErrorReport {
        case: case.label.to_string(),
        window,
        horizon: case.intervals as f64 * t_cr,
        reference_error: reference.error_bound(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Oscillation {
    MonotoneSaturating,
    DampedOscillatory,
    GrowingOscillatory,
}

impl Oscillation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Oscillation::MonotoneSaturating => "monotone-saturating",
            Oscillation::DampedOscillatory => "damped-oscillatory",
            Oscillation::GrowingOscillatory => "growing-oscillatory",
        }
    }
}

impl fmt::Display for Oscillation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Growth factor above which oscillations count as growing.
pub const GROWTH_THRESHOLD: f64 = 1.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityEntry {
    pub a3: f64,
    /// `A₃/A₂`.
    pub ratio: f64,
    pub class: Oscillation,
    /// Steady value `ρ*` the deviations are measured from.
    pub steady: f64,
    pub sign_changes: usize,
    /// Largest `|ρ − ρ*|` on each complete lobe between sign changes.
    pub amplitudes: Vec<f64>,
    /// Mean amplitude ratio per lobe over the last four lobes.
    pub growth: Option<f64>,
    pub min: f64,
    pub max: f64,
}

/// Classifies an RK4 path by sign changes of `ρ − ρ*` and the trend of the
/// lobe amplitudes.
pub fn classify(path: &SolutionPath, steady: f64) -> (Oscillation, usize, Vec<f64>, Option<f64>) {
    let scale = steady.abs().max(path.max().abs()).max(1e-300);
    let floor = 1e-9 * scale;
    let mut sign = 0i8;
    let mut changes = 0;
    let mut lobe = 0.0f64;
    let mut amplitudes = Vec::new();
    for (_, _, _, y) in path.nodes() {
        let d = y - steady;
        if d.abs() <= floor {
            continue;
        }
        let s = if d > 0.0 { 1 } else { -1 };
        if sign != 0 && s != sign {
            changes += 1;
            // the lobe before the first change is the approach, not a swing
            if changes > 1 {
                amplitudes.push(lobe);
            }
            lobe = 0.0;
        }
        sign = s;
        lobe = lobe.max(d.abs());
    }
    if changes <= 1 {
        return (Oscillation::MonotoneSaturating, changes, amplitudes, None);
    }
    let k = amplitudes.len().min(4);
    let growth = (k >= 2).then(|| {
        let last = amplitudes[amplitudes.len() - 1];
        let first = amplitudes[amplitudes.len() - k];
        (last / first).powf(1.0 / (k - 1) as f64)
    });
    let class = match growth {
        Some(g) if g > GROWTH_THRESHOLD => Oscillation::GrowingOscillatory,
        _ => Oscillation::DampedOscillatory,
    };
    (class, changes, amplitudes, growth)
}

/// Classifies the solution for each `A₃` in `a3_values`, solving with RK4
/// at `steps` per interval on `intervals` delay intervals.
pub fn stability_scan(
    base: &ConstantModel,
    a3_values: &[f64],
    steps: usize,
    intervals: usize,
) -> Result<Vec<StabilityEntry>> {
    let scan = |&a3: &f64| -> Result<StabilityEntry> {
        if !a3.is_finite() {
            return Err(Error::domain("A3 values must be finite"));
        }
        let model = base.with_recrystallization(a3);
        let path = solve_constant_model(&model, Method::Rk4, steps, intervals, &SolverOptions::default())?;
        let steady = equilibrium(&model);
        let (class, sign_changes, amplitudes, growth) = classify(&path, steady);
        Ok(StabilityEntry {
            a3,
            ratio: model.ratio(),
            class,
            steady,
            sign_changes,
            amplitudes,
            growth,
            min: path.min(),
            max: path.max(),
        })
    };
    #[cfg(feature = "parallel")]
    let out = {
        use rayon::prelude::*;
        a3_values.par_iter().map(scan).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let out = a3_values.iter().map(scan).collect();
    out
}

/// `count` evenly spaced values on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| if i + 1 == count { hi } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 })
            .collect(),
    }
}
