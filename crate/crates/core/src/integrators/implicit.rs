use super::{check_finite, delayed, DdeProblem, DelayGrid, DelayRhs, Method, SolutionPath};
use crate::error::{Error, Result};

/// Solves `y = y_prev + h·f(t, y, z)` for `y`.
///
/// For `f` nonincreasing in `y` the residual `g(y) = y − y_prev − h·f` is
/// strictly increasing, so the root is unique and lies between `y_prev` and
/// `y_prev + h·f(t, y_prev, z)`. Secant steps are taken inside that bracket
/// with bisection as the fallback.
pub fn implicit_step<F: DelayRhs>(
    rhs: &F,
    t: f64,
    y_prev: f64,
    z: f64,
    h: f64,
    tol: f64,
    max_iter: usize,
) -> std::result::Result<f64, f64> {
    let g = |y: f64| y - y_prev - h * rhs.eval(t, y, z);
    let scale = |y: f64| tol * y.abs().max(1.0);

    let g0 = g(y_prev);
    if !g0.is_finite() {
        return Err(f64::NAN);
    }
    if g0.abs() <= scale(y_prev) {
        return Ok(y_prev);
    }
    // expand from the explicit predictor until the residual changes sign
    let mut width = g0.abs().max(f64::MIN_POSITIVE);
    let dir = -g0.signum();
    let (mut lo, mut glo, mut hi, mut ghi);
    let mut expansions = 0;
    loop {
        let y1 = y_prev + dir * width;
        let g1 = g(y1);
        if !g1.is_finite() {
            return Err(g0);
        }
        if g1.signum() != g0.signum() || g1 == 0.0 {
            if dir > 0.0 {
                (lo, glo, hi, ghi) = (y_prev, g0, y1, g1);
            } else {
                (lo, glo, hi, ghi) = (y1, g1, y_prev, g0);
            }
            break;
        }
        expansions += 1;
        if expansions > 200 {
            return Err(g1);
        }
        width *= 2.0;
    }

    let mut x = lo - glo * (hi - lo) / (ghi - glo);
    let mut last_width = hi - lo;
    let mut best = if glo.abs() < ghi.abs() { glo } else { ghi };
    for _ in 0..max_iter {
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let gx = g(x);
        if !gx.is_finite() {
            return Err(best);
        }
        if gx.abs() < best.abs() {
            best = gx;
        }
        if gx.abs() <= scale(x) {
            return Ok(x);
        }
        if gx < 0.0 {
            (lo, glo) = (x, gx);
        } else {
            (hi, ghi) = (x, gx);
        }
        let width = hi - lo;
        if width <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            return Ok(if glo.abs() < ghi.abs() { lo } else { hi });
        }
        // secant through the bracket ends unless the bracket stalls
        x = if width > 0.5 * last_width {
            0.5 * (lo + hi)
        } else {
            lo - glo * (hi - lo) / (ghi - glo)
        };
        last_width = width;
    }
    Err(best)
}

/// Backward Euler method of steps:
/// `y_{k+1}^j = y_k^j + h·f(t_{k+1}^j, y_{k+1}^j, y_{k+1}^{j−1})`.
pub fn backward_euler<F: DelayRhs>(
    problem: &DdeProblem<F>,
    steps: usize,
    newton_tol: f64,
    max_iter: usize,
) -> Result<SolutionPath> {
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
            let z = delayed(&values, problem.history, j, k + 1);
            let t = grid.node(j, k + 1);
            y = implicit_step(&problem.rhs, t, y, z, h, newton_tol, max_iter).map_err(|residual| {
                if residual.is_finite() {
                    Error::Solver {
                        interval: j,
                        step: k + 1,
                        residual,
                    }
                } else {
                    Error::Divergence {
                        interval: j,
                        step: k + 1,
                    }
                }
            })?;
            y = check_finite(y, j, k + 1)?;
            cur.push(y);
        }
        start = y;
        values.push(cur);
    }
    Ok(SolutionPath::new(grid, Method::BackwardEuler, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_step_closed_form() {
        let f = |_: f64, y: f64, _: f64| 10.0 - 2.0 * y;
        let y1 = implicit_step(&f, 0.1, 0.0, 0.0, 0.1, 1e-12, 100).unwrap();
        assert!((y1 - 1.0 / 1.2).abs() < 1e-14);
    }

    #[test]
    fn zero_field_is_constant() {
        let p = DdeProblem::new(|_: f64, _: f64, _: f64| 0.0, 1.0, -0.5, 3);
        let path = backward_euler(&p, 20, 1e-12, 50).unwrap();
        assert!(path.intervals().iter().flatten().all(|&v| v == -0.5));
    }

    #[test]
    fn holder_field_converges() {
        // sqrt-type nonlinearity, not differentiable at zero
        let f = |_: f64, y: f64, z: f64| 1.0 - y - 0.5 * y.signum() * y.abs().sqrt() * z.abs();
        let y = implicit_step(&f, 0.0, -0.3, 0.8, 0.05, 1e-13, 100).unwrap();
        let res = y + 0.3 - 0.05 * f(0.0, y, 0.8);
        assert!(res.abs() < 1e-12);
    }

    #[test]
    fn matches_recurrence_on_first_interval() {
        let p = DdeProblem::new(|_: f64, y: f64, _: f64| 10.0 - 2.0 * y, 0.8, 0.0, 0);
        let path = backward_euler(&p, 8, 1e-14, 100).unwrap();
        let h = 0.1;
        let mut y = 0.0;
        for k in 1..=8 {
            y = (y + h * 10.0) / (1.0 + h * 2.0);
            assert!((path.value(0, k) - y).abs() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn implicit_steps_preserve_order(
            y in -5.0f64..5.0, dy in 0.0f64..3.0, z in -3.0f64..3.0,
            b in 0.0f64..5.0, c in 0.0f64..5.0, rho in 0.1f64..1.0, h in 1e-3f64..0.5,
        ) {
            // monotone field of the tilde-f family
            let f = move |_: f64, y: f64, z: f64| 2.0 - b * y - c * y.signum() * y.abs().powf(rho) * z.abs();
            let lo = implicit_step(&f, 0.0, y, z, h, 1e-13, 200).unwrap();
            let hi = implicit_step(&f, 0.0, y + dy, z, h, 1e-13, 200).unwrap();
            prop_assert!(lo <= hi + 1e-9);
        }
    }
}
