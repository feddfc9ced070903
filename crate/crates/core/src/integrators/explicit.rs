use super::{check_finite, delayed, DdeProblem, DelayGrid, DelayRhs, Method, SolutionPath};
use crate::error::Result;

/// Explicit Euler method of steps:
/// `y_{k+1}^j = y_k^j + h·f(t_k^j, y_k^j, y_k^{j−1})`, with the pre-history
/// value standing in for `y_k^{−1}`.
pub fn explicit_euler<F: DelayRhs>(problem: &DdeProblem<F>, steps: usize) -> Result<SolutionPath> {
    problem.validate()?;
    let grid = DelayGrid::new(problem.delay, steps, problem.horizon)?;
    let h = grid.step;
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(grid.interval_count());
    let mut start = problem.initial;
    for j in 0..grid.interval_count() {
        let n = grid.steps_in(j);
        let mut cur = Vec::with_capacity(n + 1);
        cur.push(start);
        let mut y = start;
        for k in 0..n {
            let z = delayed(&values, problem.history, j, k);
            y = check_finite(y + h * problem.rhs.eval(grid.node(j, k), y, z), j, k + 1)?;
            cur.push(y);
        }
        start = y;
        values.push(cur);
    }
    Ok(SolutionPath::new(grid, Method::ExplicitEuler, values))
}
