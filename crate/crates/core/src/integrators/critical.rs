use serde::{Deserialize, Serialize};

use super::rk4::hermite;
use crate::coefficients::CoefficientTrack;
use crate::error::{Error, Result};
use crate::model::{RateCoefficients, TrackRates};

/// Guaranteed relative time tolerance of the crossing bisection, which in
/// practice runs until the bracket cannot be split further.
pub const CROSSING_REL_TOL: f64 = 1e-10;

/// Outcome of the search for the first time `ρ` reaches `ρ_cr`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum CriticalTime {
    Crossing { t_cr: f64, rho: f64 },
    NoCrossing { horizon: f64, rho_end: f64 },
}

impl CriticalTime {
    pub fn t_cr(&self) -> Option<f64> {
        match *self {
            CriticalTime::Crossing { t_cr, .. } => Some(t_cr),
            CriticalTime::NoCrossing { .. } => None,
        }
    }
}

/// First time the recrystallization-free solution of `ρ' = H(t) − R(t)·ρ`
/// reaches `rho_cr(t)`.
///
/// RK4 with step `step` up to `horizon`; a sign change of `ρ − ρ_cr` is
/// refined by bisection on the Hermite dense output.
pub fn detect_critical_time<R, C>(rates: &R, rho_cr: C, rho0: f64, step: f64, horizon: f64) -> Result<CriticalTime>
where
    R: RateCoefficients + ?Sized,
    C: Fn(f64) -> f64,
{
    if !(step > 0.0 && horizon > 0.0 && step.is_finite() && horizon.is_finite()) {
        return Err(Error::domain("step and horizon must be positive"));
    }
    if !(rho0 >= 0.0) {
        return Err(Error::domain(format!("rho0 must be nonnegative, got {rho0}")));
    }
    if rho0 >= rho_cr(0.0) {
        return Err(Error::domain(format!(
            "rho0 = {rho0} is not below the critical density {} at t = 0",
            rho_cr(0.0)
        )));
    }
    let f = |t: f64, y: f64| rates.hardening(t) - rates.recovery(t) * y;
    let steps = (horizon / step).ceil().max(1.0) as usize;
    let (mut t, mut y) = (0.0, rho0);
    let mut d = f(t, y);
    for i in 0..steps {
        let t1 = if i + 1 == steps { horizon } else { (i + 1) as f64 * step };
        let h = t1 - t;
        let k1 = d;
        let k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
        let k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
        let k4 = f(t1, y + h * k3);
        let y1 = y + h / 6.0 * (k1 + 2.0 * (k2 + k3) + k4);
        if !y1.is_finite() {
            return Err(Error::Divergence { interval: 0, step: i + 1 });
        }
        let d1 = f(t1, y1);
        if y1 - rho_cr(t1) >= 0.0 {
            let dense = |s: f64| hermite(y, y1, d, d1, h, (s - t) / h);
            let (mut lo, mut hi) = (t, t1);
            loop {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if dense(mid) - rho_cr(mid) >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(CriticalTime::Crossing {
                t_cr: hi,
                rho: dense(hi),
            });
        }
        (t, y, d) = (t1, y1, d1);
    }
    Ok(CriticalTime::NoCrossing { horizon, rho_end: y })
}

/// [`detect_critical_time`] for a coefficient track, with `ρ_cr(t)` taken
/// from the track.
pub fn detect_t_cr(track: &CoefficientTrack, a9: f64, rho0: f64, step: f64, horizon: f64) -> Result<CriticalTime> {
    let rates = TrackRates::new(track, a9);
    detect_critical_time(&rates, |t| track.at(t).critical_density, rho0, step, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::CoefficientValues;
    use crate::model::ConstantModel;

    fn model(a2: f64, rho_cr: f64) -> ConstantModel {
        ConstantModel {
            hardening: 10.0,
            recovery: a2,
            recrystallization: 1.0,
            a8: 0.0,
            rho0: 0.0,
            rho_cr,
        }
    }

    #[test]
    fn matches_closed_form() {
        for m in [model(2.0, 4.0), model(1.0, 9.0), model(1.0, 1.0)] {
            let exact = m.critical_time().unwrap();
            let found = detect_critical_time(&m, |_| m.rho_cr, 0.0, 1e-3, 10.0).unwrap();
            let t = found.t_cr().unwrap();
            assert!((t - exact).abs() < 1e-8, "{t} vs {exact}");
        }
    }

    #[test]
    fn threshold_above_saturation_never_crosses() {
        let m = model(2.0, 4.0);
        let r = detect_critical_time(&m, |_| 5.0, 0.0, 1e-2, 20.0).unwrap();
        match r {
            CriticalTime::NoCrossing { rho_end, .. } => assert!(rho_end < 5.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn start_above_threshold_is_rejected() {
        let m = model(2.0, 4.0);
        assert!(detect_critical_time(&m, |_| 4.0, 4.0, 1e-2, 1.0).is_err());
    }

    #[test]
    fn doubled_strain_rate_halves_critical_time() {
        let values = |rate: f64| CoefficientValues {
            hardening: 10.0,
            recovery: 2.0,
            recrystallization: 1.0,
            strain_rate: rate,
            temperature: 1000.0,
            critical_density: 4.0,
        };
        let base = CoefficientTrack::constant(values(1.0)).unwrap();
        let fast = CoefficientTrack::constant(values(2.0)).unwrap();
        let t1 = detect_t_cr(&base, 0.0, 0.0, 1e-3, 5.0).unwrap().t_cr().unwrap();
        let t2 = detect_t_cr(&fast, 0.0, 0.0, 1e-3, 5.0).unwrap().t_cr().unwrap();
        assert!((t1 - 0.5 * 5f64.ln()).abs() < 1e-8);
        assert!((t2 - 0.5 * t1).abs() < 1e-8);
    }
}
