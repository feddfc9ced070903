use serde::{Deserialize, Serialize};

use super::critical::{detect_critical_time, CriticalTime};
use super::{solve, DdeProblem, Method, SolutionPath, SolverOptions};
use crate::coefficients::CoefficientTrack;
use crate::error::{Error, Result};
use crate::model::{ConstantModel, DislocationField, RateCoefficients, TrackRates};

/// Settings for a full-model run along a coefficient track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullModelRun {
    pub a8: f64,
    pub a9: f64,
    pub rho0: f64,
    pub horizon: f64,
    pub method: Method,
    /// Steps per delay interval.
    pub steps: usize,
    /// RK4 step of the critical-time search; `horizon·1e−5` when absent.
    pub detect_step: Option<f64>,
    /// Skips the search and uses this delay.
    pub t_cr: Option<f64>,
    pub options: SolverOptions,
}

impl FullModelRun {
    pub fn new(a8: f64, a9: f64, rho0: f64, horizon: f64, method: Method, steps: usize) -> Self {
        FullModelRun {
            a8,
            a9,
            rho0,
            horizon,
            method,
            steps,
            detect_step: None,
            t_cr: None,
            options: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSolution {
    pub critical: CriticalTime,
    pub path: SolutionPath,
}

/// Solves the dislocation-density equation along `track`.
///
/// The delay is the detected critical time and the delayed term reads zero
/// on the first interval. Without a crossing the whole horizon is one
/// recrystallization-free interval with `steps` steps.
pub fn solve_full_model(track: &CoefficientTrack, run: &FullModelRun) -> Result<ModelSolution> {
    let rates = TrackRates::new(track, run.a9);
    solve_with_rates(rates, |t| track.at(t).critical_density, run)
}

pub(crate) fn solve_with_rates<R, C>(rates: R, rho_cr: C, run: &FullModelRun) -> Result<ModelSolution>
where
    R: RateCoefficients,
    C: Fn(f64) -> f64,
{
    if !(0.0..=1.0).contains(&run.a8) || !(0.0..=1.0).contains(&run.a9) {
        return Err(Error::domain("a8 and a9 must lie in [0, 1]"));
    }
    if !(run.horizon > 0.0 && run.horizon.is_finite()) {
        return Err(Error::domain("horizon must be positive"));
    }
    let critical = match run.t_cr {
        Some(t_cr) if t_cr > 0.0 => CriticalTime::Crossing {
            t_cr,
            rho: f64::NAN,
        },
        Some(t_cr) => return Err(Error::domain(format!("t_cr must be positive, got {t_cr}"))),
        None => {
            let step = run.detect_step.unwrap_or(run.horizon * 1e-5);
            detect_critical_time(&rates, &rho_cr, run.rho0, step, run.horizon)?
        }
    };
    let delay = critical.t_cr().unwrap_or(run.horizon);
    let field = DislocationField::new(rates, run.a8);
    let problem = DdeProblem {
        rhs: field,
        delay,
        initial: run.rho0,
        history: 0.0,
        horizon: run.horizon,
    };
    let mut path = solve(&problem, run.method, run.steps, &run.options)?;
    flag_bounds(&problem.rhs.rates, &mut path);
    Ok(ModelSolution { critical, path })
}

/// Sets `exceeded_bound` when the path leaves
/// `[−10h·S, S·(1 + 10h)]`, `S = max H / min R` over the grid nodes.
fn flag_bounds<R: RateCoefficients>(rates: &R, path: &mut SolutionPath) {
    let (mut h_max, mut r_min) = (0.0f64, f64::INFINITY);
    let nodes: Vec<f64> = path.nodes().map(|(_, _, t, _)| t).collect();
    for t in nodes {
        h_max = h_max.max(rates.hardening(t));
        r_min = r_min.min(rates.recovery(t));
    }
    let sat = h_max / r_min;
    if sat.is_finite() {
        let slack = 10.0 * path.grid.step;
        path.check_bounds(-slack * sat, sat * (1.0 + slack));
    }
}

/// Solves the constant-coefficient model on `intervals` delay intervals with
/// the closed-form critical time as the delay.
pub fn solve_constant_model(
    model: &ConstantModel,
    method: Method,
    steps: usize,
    intervals: usize,
    options: &SolverOptions,
) -> Result<SolutionPath> {
    let t_cr = model.critical_time()?;
    let problem = DdeProblem::new(DislocationField::new(*model, model.a8), t_cr, model.rho0, intervals.max(1) - 1)
        .with_history(0.0);
    let mut path = solve(&problem, method, steps, options)?;
    flag_bounds(model, &mut path);
    Ok(path)
}
