//! Adaptive Simpson quadrature with Richardson-corrected error control.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integrand evaluations allowed per call before giving up.
pub const MAX_EVALUATIONS: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_depth: 50,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.abs_tol > 0.0 && self.rel_tol > 0.0 && self.max_depth > 0 {
            Ok(())
        } else {
            Err(Error::domain("quadrature tolerances and depth must be positive"))
        }
    }

    /// Configuration with both tolerances halved.
    pub fn tightened(&self) -> Self {
        QuadratureConfig {
            abs_tol: self.abs_tol * 0.5,
            rel_tol: self.rel_tol * 0.5,
            max_depth: self.max_depth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Sum of the local Richardson error estimates.
    pub error: f64,
    pub evaluations: usize,
}

struct State<'a, F> {
    f: &'a F,
    evaluations: usize,
    error: f64,
    failed: bool,
}

impl<F: Fn(f64) -> f64> State<'_, F> {
    #[allow(clippy::too_many_arguments)]
    fn refine(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = (self.f)(lm);
        let frm = (self.f)(rm);
        self.evaluations += 2;
        // true half widths keep each child's estimate consistent with the
        // parent's even when the midpoint rounds
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        // differences at the rounding level of the sums cannot shrink
        let noise = 64.0 * f64::EPSILON * (left.abs() + right.abs());
        // the midpoint may round onto an endpoint before the tolerance is met
        let exhausted = depth == 0 || m <= a || m >= b || self.evaluations > MAX_EVALUATIONS;
        if delta.abs() <= (15.0 * tol).max(noise) || exhausted || !delta.is_finite() {
            if exhausted && delta.abs() > (15.0 * tol).max(noise) || !delta.is_finite() {
                self.failed = true;
            }
            self.error += delta.abs() / 15.0;
            return left + right + delta / 15.0;
        }
        self.refine(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + self.refine(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Integrates `f` over `[a, b]`. `a > b` integrates with reversed sign and
/// `a == b` yields zero.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, config: &QuadratureConfig) -> Result<Integral> {
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    if b < a {
        let r = integrate(f, b, a, config)?;
        return Ok(Integral { value: -r.value, ..r });
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let tol = config.abs_tol.max(config.rel_tol * whole.abs());
    let mut state = State {
        f: &f,
        evaluations: 3,
        error: 0.0,
        failed: false,
    };
    let value = state.refine(a, b, fa, fm, fb, whole, tol, config.max_depth);
    if state.failed || !value.is_finite() {
        return Err(Error::Accuracy {
            requested: tol,
            achieved: state.error,
            a,
            b,
        });
    }
    Ok(Integral {
        value,
        error: state.error,
        evaluations: state.evaluations,
    })
}
