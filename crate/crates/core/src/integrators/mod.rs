//! Method-of-steps integrators on the delay-aligned grid
//! `t_k^j = j·τ + k·h`, `h = τ/N`.
//!
//! Every interval `[jτ, (j+1)τ]` is integrated as an ODE whose delayed
//! argument is read from the previous interval. Explicit and backward Euler
//! only touch grid nodes; RK4 also needs the previous interval at step
//! midpoints, which comes from cubic Hermite interpolation of stored values
//! and derivatives.

mod critical;
mod explicit;
mod full;
mod implicit;
mod rk4;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DislocationField, RateCoefficients};

pub use critical::{detect_critical_time, detect_t_cr, CriticalTime, CROSSING_REL_TOL};
pub use explicit::explicit_euler;
pub use full::{solve_constant_model, solve_full_model, FullModelRun, ModelSolution};
pub use implicit::{backward_euler, implicit_step};
pub use rk4::{hermite, rk4, HistoryInterp};

/// Right-hand side `f(t, y, z)` of `y'(t) = f(t, y(t), y(t − τ))`.
pub trait DelayRhs: Sync {
    fn eval(&self, t: f64, y: f64, z: f64) -> f64;
}

impl<F> DelayRhs for F
where
    F: Fn(f64, f64, f64) -> f64 + Sync,
{
    fn eval(&self, t: f64, y: f64, z: f64) -> f64 {
        self(t, y, z)
    }
}

impl<R: RateCoefficients> DelayRhs for DislocationField<R> {
    fn eval(&self, t: f64, y: f64, z: f64) -> f64 {
        DislocationField::eval(self, t, y, z)
    }
}

/// A delay problem with constant delay.
///
/// `initial` is `y(0)`; `history` is the delayed value seen while
/// `t − τ < 0`. The two coincide for a constant pre-history; the
/// dislocation model uses `history = 0` because its delayed term is switched
/// off until `t_cr`.
#[derive(Debug, Clone)]
pub struct DdeProblem<F> {
    pub rhs: F,
    pub delay: f64,
    pub initial: f64,
    pub history: f64,
    pub horizon: f64,
}

impl<F: DelayRhs> DdeProblem<F> {
    /// Problem on `n + 1` delay intervals with constant pre-history `eta`.
    pub fn new(rhs: F, delay: f64, eta: f64, n: usize) -> Self {
        DdeProblem {
            rhs,
            delay,
            initial: eta,
            history: eta,
            horizon: (n + 1) as f64 * delay,
        }
    }

    pub fn with_history(mut self, history: f64) -> Self {
        self.history = history;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.delay > 0.0 && self.delay.is_finite()) {
            return Err(Error::domain(format!("delay must be positive, got {}", self.delay)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::domain(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !self.initial.is_finite() || !self.history.is_finite() {
            return Err(Error::domain("initial and history values must be finite"));
        }
        Ok(())
    }
}

/// Uniform grid aligned with the delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayGrid {
    /// Steps per delay interval `N`.
    pub steps: usize,
    pub delay: f64,
    /// `h = τ/N`.
    pub step: f64,
    pub horizon: f64,
    intervals: usize,
    last_steps: usize,
}

impl DelayGrid {
    pub fn new(delay: f64, steps: usize, horizon: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::domain("N must be at least 1"));
        }
        if !(delay > 0.0) || !(horizon > 0.0) {
            return Err(Error::domain("delay and horizon must be positive"));
        }
        let step = delay / steps as f64;
        let ratio = horizon / delay;
        let whole = ratio.round();
        let (intervals, last_steps) = if (ratio - whole).abs() <= 1e-9 * ratio.max(1.0) && whole >= 1.0 {
            (whole as usize, steps)
        } else {
            let full = ratio.floor() as usize;
            let rest = horizon - full as f64 * delay;
            let k = ((rest / step) * (1.0 + 1e-12)).floor() as usize;
            if k == 0 {
                (full.max(1), if full == 0 { 1 } else { steps })
            } else {
                (full + 1, k.min(steps))
            }
        };
        Ok(DelayGrid {
            steps,
            delay,
            step,
            horizon,
            intervals,
            last_steps,
        })
    }

    /// Number of (possibly partial) intervals.
    pub fn interval_count(&self) -> usize {
        self.intervals
    }

    /// Steps taken inside interval `j`.
    pub fn steps_in(&self, j: usize) -> usize {
        if j + 1 == self.intervals {
            self.last_steps
        } else {
            self.steps
        }
    }

    #[inline]
    pub fn node(&self, j: usize, k: usize) -> f64 {
        j as f64 * self.delay + k as f64 * self.step
    }

    /// Total number of distinct nodes.
    pub fn node_count(&self) -> usize {
        1 + (0..self.intervals).map(|j| self.steps_in(j)).sum::<usize>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExplicitEuler,
    BackwardEuler,
    Rk4,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::ExplicitEuler, Method::BackwardEuler, Method::Rk4];

    pub fn name(&self) -> &'static str {
        match self {
            Method::ExplicitEuler => "explicit-euler",
            Method::BackwardEuler => "backward-euler",
            Method::Rk4 => "rk4",
        }
    }

    /// Label used in the text tables.
    pub fn label(&self) -> &'static str {
        match self {
            Method::ExplicitEuler => "explicit Euler",
            Method::BackwardEuler => "backward Euler",
            Method::Rk4 => "RK4",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "explicit-euler" | "euler" | "ee" | "explicit" => Ok(Method::ExplicitEuler),
            "backward-euler" | "beuler" | "be" | "implicit" => Ok(Method::BackwardEuler),
            "rk4" | "runge-kutta" => Ok(Method::Rk4),
            other => Err(Error::domain(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Residual tolerance of the implicit step, relative to `max(1, |y|)`.
    pub newton_tol: f64,
    pub max_iter: usize,
    pub history: HistoryInterp,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            newton_tol: 1e-12,
            max_iter: 100,
            history: HistoryInterp::CubicHermite,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathFlags {
    pub went_negative: bool,
    pub exceeded_bound: bool,
}

/// Values `y_k^j` on a [`DelayGrid`]. Interval `j` stores nodes
/// `k = 0..=steps_in(j)`, so joints appear twice with identical values.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPath {
    pub grid: DelayGrid,
    pub method: Method,
    pub flags: PathFlags,
    values: Vec<Vec<f64>>,
}

impl SolutionPath {
    pub(crate) fn new(grid: DelayGrid, method: Method, values: Vec<Vec<f64>>) -> Self {
        let went_negative = values.iter().flatten().any(|&v| v < 0.0);
        SolutionPath {
            grid,
            method,
            flags: PathFlags {
                went_negative,
                exceeded_bound: false,
            },
            values,
        }
    }

    pub fn value(&self, j: usize, k: usize) -> f64 {
        self.values[j][k]
    }

    pub fn interval(&self, j: usize) -> &[f64] {
        &self.values[j]
    }

    pub fn intervals(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Distinct nodes `(j, k, t, y)` in time order. Joints are reported once:
    /// `k = 0` is skipped for every interval after the first.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        self.values.iter().enumerate().flat_map(move |(j, vals)| {
            let start = if j == 0 { 0 } else { 1 };
            vals.iter()
                .enumerate()
                .skip(start)
                .map(move |(k, &y)| (j, k, self.grid.node(j, k), y))
        })
    }

    pub fn final_value(&self) -> f64 {
        *self.values.last().and_then(|v| v.last()).expect("non-empty path")
    }

    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Piecewise-linear interpolation between nodes, clamped to the grid.
    pub fn eval(&self, t: f64) -> f64 {
        let g = &self.grid;
        let last_j = self.values.len() - 1;
        if t <= 0.0 {
            return self.values[0][0];
        }
        let mut j = ((t / g.delay).floor() as usize).min(last_j);
        let mut local = (t - j as f64 * g.delay) / g.step;
        if local < 0.0 && j > 0 {
            j -= 1;
            local = (t - j as f64 * g.delay) / g.step;
        }
        let vals = &self.values[j];
        let last_k = vals.len() - 1;
        if local >= last_k as f64 {
            return vals[last_k];
        }
        let k = local.floor() as usize;
        let w = local - k as f64;
        vals[k] + (vals[k + 1] - vals[k]) * w
    }

    /// Sets `exceeded_bound` if any value leaves `[lower, upper]`.
    pub fn check_bounds(&mut self, lower: f64, upper: f64) -> bool {
        let out = self.values.iter().flatten().any(|&v| v < lower || v > upper);
        self.flags.exceeded_bound |= out;
        out
    }

    /// Writes `j,k,t,y` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "j,k,t,y")?;
        for (j, k, t, y) in self.nodes() {
            writeln!(out, "{j},{k},{t:.16e},{y:.16e}")?;
        }
        Ok(())
    }
}

/// Dispatches to the requested method.
pub fn solve<F: DelayRhs>(
    problem: &DdeProblem<F>,
    method: Method,
    steps: usize,
    options: &SolverOptions,
) -> Result<SolutionPath> {
    match method {
        Method::ExplicitEuler => explicit_euler(problem, steps),
        Method::BackwardEuler => backward_euler(problem, steps, options.newton_tol, options.max_iter),
        Method::Rk4 => rk4(problem, steps, options.history),
    }
}

/// Delayed value at node `k` of interval `j`.
#[inline]
pub(crate) fn delayed(values: &[Vec<f64>], history: f64, j: usize, k: usize) -> f64 {
    if j == 0 {
        history
    } else {
        values[j - 1][k]
    }
}

pub(crate) fn check_finite(y: f64, j: usize, k: usize) -> Result<f64> {
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::Divergence { interval: j, step: k })
    }
}
