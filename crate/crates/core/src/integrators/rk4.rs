use serde::{Deserialize, Serialize};

use super::{check_finite, delayed, DdeProblem, DelayGrid, DelayRhs, Method, SolutionPath};
use crate::error::Result;

/// How RK4 reads the previous interval between grid nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HistoryInterp {
    /// Cubic Hermite through stored values and derivatives.
    #[default]
    CubicHermite,
    /// Linear between stored values; limits RK4 to second order.
    Linear,
}

/// Cubic Hermite interpolant on `[x₀, x₀ + h]` at `x₀ + θh`.
#[inline]
pub fn hermite(y0: f64, y1: f64, d0: f64, d1: f64, h: f64, theta: f64) -> f64 {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + theta;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Classical four-stage Runge–Kutta method of steps.
///
/// Stage times `t + h/2` fall between nodes of the previous interval; their
/// delayed values come from `interp`. Derivatives are stored per interval
/// so the interpolant uses one-sided slopes at the joints.
pub fn rk4<F: DelayRhs>(problem: &DdeProblem<F>, steps: usize, interp: HistoryInterp) -> Result<SolutionPath> {
    problem.validate()?;
    let grid = DelayGrid::new(problem.delay, steps, problem.horizon)?;
    let h = grid.step;
    let f = &problem.rhs;
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(grid.interval_count());
    let mut slopes: Vec<Vec<f64>> = Vec::with_capacity(grid.interval_count());
    let mut start = problem.initial;

    for j in 0..grid.interval_count() {
        let n = grid.steps_in(j);
        let mut cur = Vec::with_capacity(n + 1);
        let mut der = Vec::with_capacity(n + 1);
        cur.push(start);
        let mut y = start;
        for k in 0..n {
            let t = grid.node(j, k);
            let z0 = delayed(&values, problem.history, j, k);
            let z1 = delayed(&values, problem.history, j, k + 1);
            let zm = if j == 0 {
                problem.history
            } else {
                let (pv, pd) = (&values[j - 1], &slopes[j - 1]);
                match interp {
                    HistoryInterp::CubicHermite => hermite(pv[k], pv[k + 1], pd[k], pd[k + 1], h, 0.5),
                    HistoryInterp::Linear => 0.5 * (pv[k] + pv[k + 1]),
                }
            };
            let k1 = f.eval(t, y, z0);
            let k2 = f.eval(t + 0.5 * h, y + 0.5 * h * k1, zm);
            let k3 = f.eval(t + 0.5 * h, y + 0.5 * h * k2, zm);
            let k4 = f.eval(t + h, y + h * k3, z1);
            der.push(k1);
            y = check_finite(y + h / 6.0 * (k1 + 2.0 * (k2 + k3) + k4), j, k + 1)?;
            cur.push(y);
        }
        // left-sided slope at the end of the interval
        der.push(f.eval(grid.node(j, n), y, delayed(&values, problem.history, j, n)));
        start = y;
        values.push(cur);
        slopes.push(der);
    }
    Ok(SolutionPath::new(grid, Method::Rk4, values))
}
