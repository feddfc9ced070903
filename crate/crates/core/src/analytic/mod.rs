//! Reference solutions of the dislocation-density equation for `a₈ ∈ {0, 1}`.
//!
//! On interval `n` the delayed value is the already-known solution of
//! interval `n − 1`, so the equation is linear, `ρ' = a(s) − b(s)·ρ`:
//!
//! * `a₈ = 0`: `a = H − X·φ_{n−1}(s − τ)`, `b = R`;
//! * `a₈ = 1`: `a = H`, `b = R + X·φ_{n−1}(s − τ)`.
//!
//! Each interval is split into panels. The exponent `B = ∫b` and then `ρ`
//! are propagated from node to node with adaptive quadrature,
//! `ρ(s₁) = ρ(s₀)·e^{−(B(s₁)−B(s₀))} + ∫ e^{B(u)−B(s₁)}·a(u) du`,
//! and stored as Chebyshev–Lobatto tables. [`AnalyticSolution::eval_formula`]
//! evaluates the same variation-of-constants formula by plain nested
//! quadrature, as an independent route.

mod panels;

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrators::CriticalTime;
use crate::model::{ConstantModel, RateCoefficients};
use crate::quadrature::{integrate, QuadratureConfig};

use panels::{panel_edges, Panels};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticConfig {
    /// Tolerances for the accumulated quadrature error of one interval.
    pub quadrature: QuadratureConfig,
    /// Uniform panels per interval, before breakpoints are inserted.
    pub panels: usize,
    /// Polynomial degree on each panel.
    pub degree: usize,
    /// Interval limit for `a₈ = 1`.
    pub max_intervals_a8_one: usize,
}

impl Default for AnalyticConfig {
    fn default() -> Self {
        AnalyticConfig {
            quadrature: QuadratureConfig::default(),
            panels: 32,
            degree: 16,
            max_intervals_a8_one: 2,
        }
    }
}

impl AnalyticConfig {
    pub fn with_quadrature(self, quadrature: QuadratureConfig) -> Self {
        AnalyticConfig { quadrature, ..self }
    }

    fn validate(&self) -> Result<()> {
        self.quadrature.validate()?;
        if self.panels == 0 || self.degree < 2 {
            return Err(Error::domain("need at least one panel of degree two or more"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Construction {
    ClosedForm,
    Quadrature { abs_tol: f64, rel_tol: f64 },
}

#[derive(Debug, Clone)]
enum Repr {
    /// `A₁/A₂ + (ρ₀ − A₁/A₂)·e^{−A₂t}`.
    Linear { saturation: f64, rho0: f64, recovery: f64 },
    Table(Panels),
}

/// Solution on `[n·τ, (n+1)·τ]`.
#[derive(Debug, Clone)]
pub struct IntervalSolution {
    pub index: usize,
    pub start: f64,
    pub end: f64,
    pub construction: Construction,
    /// Quadrature error estimate of this interval plus the error inherited
    /// through the delayed term.
    pub error_bound: f64,
    repr: Repr,
}

impl IntervalSolution {
    pub fn eval(&self, t: f64) -> f64 {
        match &self.repr {
            Repr::Linear {
                saturation,
                rho0,
                recovery,
            } => saturation + (rho0 - saturation) * (-recovery * t).exp(),
            Repr::Table(p) => p.eval(t),
        }
    }

    pub fn start_value(&self) -> f64 {
        self.eval(self.start)
    }

    pub fn end_value(&self) -> f64 {
        match &self.repr {
            Repr::Table(p) => p.last_value(),
            _ => self.eval(self.end),
        }
    }
}

/// Semi-analytic solution on `[0, intervals·τ]`.
#[derive(Debug, Clone)]
pub struct AnalyticSolution<R> {
    rates: R,
    a8: f64,
    rho0: f64,
    delay: f64,
    config: AnalyticConfig,
    intervals: Vec<IntervalSolution>,
}

impl AnalyticSolution<ConstantModel> {
    /// Constant-coefficient solution with the closed-form critical time as
    /// the delay and the closed form on the first interval.
    pub fn constant(model: &ConstantModel, intervals: usize, config: &AnalyticConfig) -> Result<Self> {
        let delay = model.critical_time()?;
        let first = IntervalSolution {
            index: 0,
            start: 0.0,
            end: delay,
            construction: Construction::ClosedForm,
            error_bound: 0.0,
            repr: Repr::Linear {
                saturation: model.saturation(),
                rho0: model.rho0,
                recovery: model.recovery,
            },
        };
        let mut sol = Self::empty(*model, model.a8, model.rho0, delay, intervals, config)?;
        sol.intervals.push(first);
        sol.extend_to(intervals)?;
        Ok(sol)
    }
}

impl<R: RateCoefficients> AnalyticSolution<R> {
    /// Solution for time-dependent rates with a given delay.
    pub fn time_dependent(
        rates: R,
        a8: f64,
        rho0: f64,
        delay: f64,
        intervals: usize,
        config: &AnalyticConfig,
    ) -> Result<Self> {
        if !(rho0 >= 0.0 && rho0.is_finite()) {
            return Err(Error::domain(format!("rho0 must be nonnegative, got {rho0}")));
        }
        let mut sol = Self::empty(rates, a8, rho0, delay, intervals, config)?;
        sol.extend_to(intervals)?;
        Ok(sol)
    }

    fn empty(rates: R, a8: f64, rho0: f64, delay: f64, intervals: usize, config: &AnalyticConfig) -> Result<Self> {
        config.validate()?;
        if a8 != 0.0 && a8 != 1.0 {
            return Err(Error::domain(format!(
                "analytic solutions exist only for a8 = 0 or 1, got {a8}"
            )));
        }
        if !(delay > 0.0 && delay.is_finite()) {
            return Err(Error::domain(format!("delay must be positive, got {delay}")));
        }
        if intervals == 0 {
            return Err(Error::domain("need at least one interval"));
        }
        if a8 == 1.0 && intervals > config.max_intervals_a8_one {
            return Err(Error::domain(format!(
                "a8 = 1 is limited to {} intervals (requested {intervals})",
                config.max_intervals_a8_one
            )));
        }
        Ok(AnalyticSolution {
            rates,
            a8,
            rho0,
            delay,
            config: *config,
            intervals: Vec::with_capacity(intervals),
        })
    }

    fn extend_to(&mut self, intervals: usize) -> Result<()> {
        while self.intervals.len() < intervals {
            let next = self.build_interval(self.intervals.len())?;
            self.intervals.push(next);
        }
        Ok(())
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn a8(&self) -> f64 {
        self.a8
    }

    pub fn rates(&self) -> &R {
        &self.rates
    }

    pub fn horizon(&self) -> f64 {
        self.intervals.len() as f64 * self.delay
    }

    pub fn intervals(&self) -> &[IntervalSolution] {
        &self.intervals
    }

    /// Largest per-interval error bound.
    pub fn error_bound(&self) -> f64 {
        self.intervals.iter().map(|i| i.error_bound).fold(0.0, f64::max)
    }

    /// Interval holding `t`; joints belong to the interval they start.
    pub fn interval_of(&self, t: f64) -> usize {
        let n = (t / self.delay).floor();
        if n <= 0.0 {
            0
        } else {
            (n as usize).min(self.intervals.len() - 1)
        }
    }

    /// `ρ(t)` from the tables; `t` is clamped to `[0, horizon]`.
    pub fn eval(&self, t: f64) -> f64 {
        self.intervals[self.interval_of(t)].eval(t)
    }

    /// `ρ(t − τ)`, zero before the delay term switches on.
    pub fn delayed(&self, t: f64) -> f64 {
        let s = t - self.delay;
        if s < 0.0 {
            0.0
        } else {
            self.eval(s)
        }
    }

    /// `H − R·ρ − X·ρ^{a₈}·ρ(t − τ)` at `t` for the value `y`.
    pub fn rhs(&self, t: f64, y: f64) -> f64 {
        let p = if self.a8 == 0.0 { 1.0 } else { y };
        self.rates.hardening(t) - self.rates.recovery(t) * y - self.rates.recrystallization(t) * p * self.delayed(t)
    }

    /// Sum of the magnitudes of the three terms of [`Self::rhs`].
    pub fn rhs_scale(&self, t: f64, y: f64) -> f64 {
        let p = if self.a8 == 0.0 { 1.0 } else { y };
        self.rates.hardening(t).abs()
            + (self.rates.recovery(t) * y).abs()
            + (self.rates.recrystallization(t) * p * self.delayed(t)).abs()
    }

    /// Coefficients `(a, b)` of the linear equation on interval `n`.
    fn linear_coefficients(&self, n: usize, s: f64) -> (f64, f64) {
        let h = self.rates.hardening(s);
        let r = self.rates.recovery(s);
        if n == 0 {
            return (h, r);
        }
        let prev = &self.intervals[n - 1];
        let z = prev.eval((s - self.delay).clamp(prev.start, prev.end));
        let x = self.rates.recrystallization(s);
        if self.a8 == 0.0 {
            (h - x * z, r)
        } else {
            (h, r + x * z)
        }
    }

    fn breakpoints_in(&self, n: usize, start: f64, end: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for &bp in self.rates.breakpoints() {
            for m in 0..=n {
                let t = bp + m as f64 * self.delay;
                if t > start && t < end {
                    out.push(t);
                }
            }
        }
        out
    }

    fn build_interval(&self, n: usize) -> Result<IntervalSolution> {
        let start = n as f64 * self.delay;
        let end = (n + 1) as f64 * self.delay;
        let rho_start = match self.intervals.last() {
            Some(prev) => prev.end_value(),
            None => self.rho0,
        };
        let coef = |s: f64| self.linear_coefficients(n, s);
        let edges = panel_edges(start, end, self.config.panels, self.breakpoints_in(n, start, end).into_iter());
        let (table, local) = propagate(edges, self.config.degree, rho_start, &coef, &self.config.quadrature)?;

        let inherited = match self.intervals.last() {
            Some(prev) => {
                let x = self.rates.recrystallization(start).abs().max(self.rates.recrystallization(end).abs());
                let gain = if self.a8 == 0.0 {
                    1.0 + x * self.delay
                } else {
                    1.0 + x * self.delay * table.last_value().abs().max(1.0)
                };
                prev.error_bound * gain
            }
            None => 0.0,
        };
        Ok(IntervalSolution {
            index: n,
            start,
            end,
            construction: Construction::Quadrature {
                abs_tol: self.config.quadrature.abs_tol,
                rel_tol: self.config.quadrature.rel_tol,
            },
            error_bound: local + inherited,
            repr: Repr::Table(table),
        })
    }

    /// `ρ(t)` on interval `n` straight from the variation-of-constants
    /// formula: `e^{−B(t)}·(ρ(nτ) + ∫_{nτ}^t e^{B(s)}·a(s) ds)` with
    /// `B(s) = ∫_{nτ}^s b` by an inner quadrature at every outer node.
    pub fn eval_formula(&self, n: usize, t: f64) -> Result<f64> {
        let interval = self
            .intervals
            .get(n)
            .ok_or_else(|| Error::domain(format!("interval {n} has not been constructed")))?;
        let tol = 1e-9 * self.delay;
        if t < interval.start - tol || t > interval.end + tol {
            return Err(Error::domain(format!(
                "t = {t} lies outside interval {n} = [{}, {}]",
                interval.start, interval.end
            )));
        }
        let start = interval.start;
        let rho_start = if n == 0 { self.rho0 } else { self.intervals[n - 1].end_value() };
        let q = &self.config.quadrature;
        let inner_q = QuadratureConfig {
            abs_tol: q.abs_tol * 1e-2,
            rel_tol: q.rel_tol * 1e-2,
            max_depth: q.max_depth,
        };
        let big_b = |s: f64| integrate(|u| self.linear_coefficients(n, u).1, start, s, &inner_q).map(|r| r.value);
        let b_t = big_b(t)?;
        let failure = RefCell::new(None);
        let outer = integrate(
            |s| match big_b(s) {
                Ok(v) => (v - b_t).exp() * self.linear_coefficients(n, s).0,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            },
            start,
            t,
            q,
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(rho_start * (-b_t).exp() + outer?.value)
    }

    /// Table node values `(t, ρ)` of interval `n`; a closed-form interval
    /// yields nothing.
    pub fn table_nodes(&self, n: usize) -> Vec<(f64, f64)> {
        match &self.intervals[n].repr {
            Repr::Table(p) => p.node_values().collect(),
            Repr::Linear { .. } => Vec::new(),
        }
    }
}

/// Integrates `ρ' = a − b·ρ` across the panels, returning the table and the
/// summed quadrature error estimates.
fn propagate<C>(edges: Vec<f64>, degree: usize, rho_start: f64, coef: &C, q: &QuadratureConfig) -> Result<(Panels, f64)>
where
    C: Fn(f64) -> (f64, f64),
{
    let mut table = Panels::new(edges, degree);
    let segments = (table.panel_count() * degree) as f64;
    let seg_q = QuadratureConfig {
        abs_tol: q.abs_tol / segments,
        rel_tol: q.rel_tol / segments,
        max_depth: q.max_depth,
    };
    let (ref_nodes, weights) = panels::lobatto(degree);
    let mut error = 0.0;
    let mut rho = rho_start;
    let mut values = vec![0.0; degree + 1];
    let mut big_b = vec![0.0; degree + 1];
    let mut b_error = vec![0.0; degree];
    for p in 0..table.panel_count() {
        let nodes = table.nodes(p);
        let (a, b) = (nodes[0], nodes[degree]);
        for i in 0..degree {
            let r = integrate(|u| coef(u).1, nodes[i], nodes[i + 1], &seg_q)?;
            big_b[i + 1] = big_b[i] + r.value;
            b_error[i] = r.error;
        }
        let interp = |u: f64| {
            let x = ((2.0 * u - (a + b)) / (b - a)).clamp(-1.0, 1.0);
            panels::barycentric(&ref_nodes, &weights, &big_b, x)
        };
        values[0] = rho;
        for i in 0..degree {
            let b1 = big_b[i + 1];
            let r = integrate(|u| (interp(u) - b1).exp() * coef(u).0, nodes[i], nodes[i + 1], &seg_q)?;
            // an error δ in the exponent perturbs ρ by about |ρ|·δ
            error += r.error + rho.abs() * b_error[i];
            rho = rho * (big_b[i] - b1).exp() + r.value;
            if !rho.is_finite() {
                return Err(Error::Divergence { interval: p, step: i + 1 });
            }
            values[i + 1] = rho;
        }
        table.push_panel(&values);
    }
    Ok((table, error))
}

/// Closed-form critical time of the constant model.
pub fn t_cr_constant(model: &ConstantModel) -> Result<f64> {
    model.critical_time()
}

/// `A₁/A₂ + (ρ₀ − A₁/A₂)·e^{−A₂t}` on `[0, t_cr]`.
pub fn phi0_constant(model: &ConstantModel, t: f64) -> Result<f64> {
    let t_cr = model.critical_time()?;
    if !(0.0..=t_cr).contains(&t) {
        return Err(Error::domain(format!("t = {t} outside [0, t_cr = {t_cr}]")));
    }
    let sat = model.saturation();
    Ok(sat + (model.rho0 - sat) * (-model.recovery * t).exp())
}

/// `ρ(t)` for `a₈ = 0` on interval `n` through the literal formula.
pub fn analytic_a8_0(model: &ConstantModel, n: usize, t: f64, config: &AnalyticConfig) -> Result<f64> {
    if model.a8 != 0.0 {
        return Err(Error::domain("analytic_a8_0 needs a8 = 0"));
    }
    AnalyticSolution::constant(model, n + 1, config)?.eval_formula(n, t)
}

/// `ρ(t)` for `a₈ = 1` on interval `n` through the literal formula.
pub fn analytic_a8_1(model: &ConstantModel, n: usize, t: f64, config: &AnalyticConfig) -> Result<f64> {
    if model.a8 != 1.0 {
        return Err(Error::domain("analytic_a8_1 needs a8 = 1"));
    }
    AnalyticSolution::constant(model, n + 1, config)?.eval_formula(n, t)
}

/// Running integral `∫₀ˢ f` with cached values on a uniform grid, so each
/// query only integrates from the nearest grid point below.
struct Cumulative<F> {
    f: F,
    step: f64,
    cache: Vec<f64>,
    config: QuadratureConfig,
}

impl<F: Fn(f64) -> f64> Cumulative<F> {
    fn new(f: F, end: f64, cells: usize, config: QuadratureConfig) -> Result<Self> {
        let step = end / cells as f64;
        let mut cache = vec![0.0; cells + 1];
        for i in 0..cells {
            let r = integrate(&f, i as f64 * step, (i + 1) as f64 * step, &config)?;
            cache[i + 1] = cache[i] + r.value;
        }
        Ok(Cumulative { f, step, cache, config })
    }

    fn at(&self, s: f64) -> Result<f64> {
        if self.step == 0.0 {
            return Ok(0.0);
        }
        let i = ((s / self.step).floor() as usize).min(self.cache.len() - 1);
        let base = i as f64 * self.step;
        Ok(self.cache[i] + integrate(&self.f, base, s, &self.config)?.value)
    }
}

/// `e^{−∫₀ᵗR}·(ρ₀ + ∫₀ᵗ e^{∫₀ˢR}·H(s) ds)` by nested quadrature with a
/// cached cumulative inner integral.
pub fn phi0_timedep<R: RateCoefficients>(rates: &R, rho0: f64, t: f64, config: &QuadratureConfig) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("t must be nonnegative, got {t}")));
    }
    let inner = QuadratureConfig {
        abs_tol: config.abs_tol * 1e-2,
        rel_tol: config.rel_tol * 1e-2,
        max_depth: config.max_depth,
    };
    let big_r = Cumulative::new(|s| rates.recovery(s), t, 64, inner)?;
    let total = big_r.cache[big_r.cache.len() - 1];
    let failure = RefCell::new(None);
    let outer = integrate(
        |s| match big_r.at(s) {
            Ok(v) => (v - total).exp() * rates.hardening(s),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        0.0,
        t,
        config,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(rho0 * (-total).exp() + outer?.value)
}

/// First time the recrystallization-free solution reaches `rho_cr(t)`,
/// searched on `[0, horizon]`. Returns `t_cr = 0` when `ρ₀ ≥ ρ_cr(0)`.
///
/// The solution is tabulated on panels, the first node with `ρ ≥ ρ_cr`
/// brackets the crossing, and bisection on the table refines it to
/// `1e−12·horizon`.
pub fn t_cr_timedep<R, C>(rates: &R, rho0: f64, rho_cr: C, horizon: f64, config: &AnalyticConfig) -> Result<CriticalTime>
where
    R: RateCoefficients,
    C: Fn(f64) -> f64,
{
    config.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::domain("horizon must be positive"));
    }
    if rho0 >= rho_cr(0.0) {
        return Ok(CriticalTime::Crossing { t_cr: 0.0, rho: rho0 });
    }
    let breaks = rates.breakpoints().to_vec();
    let edges = panel_edges(0.0, horizon, config.panels * 4, breaks.into_iter());
    let coef = |s: f64| (rates.hardening(s), rates.recovery(s));
    let (table, _) = propagate(edges, config.degree, rho0, &coef, &config.quadrature)?;

    let mut prev_t = 0.0;
    for (t, rho) in table.node_values() {
        if rho - rho_cr(t) >= 0.0 {
            let (mut lo, mut hi) = (prev_t, t);
            let tol = 1e-12 * horizon;
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if table.eval(mid) - rho_cr(mid) >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(CriticalTime::Crossing {
                t_cr: hi,
                rho: table.eval(hi),
            });
        }
        prev_t = t;
    }
    Ok(CriticalTime::NoCrossing {
        horizon,
        rho_end: table.last_value(),
    })
}

/// `ρ(t)` on interval `n` for time-dependent rates, through the literal
/// formula.
pub fn analytic_timedep<R: RateCoefficients>(
    rates: R,
    a8: f64,
    rho0: f64,
    delay: f64,
    n: usize,
    t: f64,
    config: &AnalyticConfig,
) -> Result<f64> {
    AnalyticSolution::time_dependent(rates, a8, rho0, delay, n + 1, config)?.eval_formula(n, t)
}

/// Solution of the equation without hardening, `ρ' = −A₂ρ − A₃ρ^{a₈}·ρ(t−τ)`,
/// in the cases where it is elementary: zero for `ρ₀ = 0` and
/// `ρ₀·e^{−A₂t}` for `A₃ = 0`.
pub fn bernoulli_degenerate_check(recovery: f64, recrystallization: f64, rho0: f64, times: &[f64]) -> Result<Vec<f64>> {
    if rho0 == 0.0 {
        Ok(vec![0.0; times.len()])
    } else if recrystallization == 0.0 {
        Ok(times.iter().map(|&t| rho0 * (-recovery * t).exp()).collect())
    } else {
        Err(Error::domain(
            "without hardening a closed form is known only for rho0 = 0 or A3 = 0",
        ))
    }
}

#[cfg(test)]
mod tests;
