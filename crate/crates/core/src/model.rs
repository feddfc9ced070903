//! The dislocation-density right-hand side and its coefficient sources.

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientTrack;
use crate::error::{Error, Result};

/// Effective time-dependent rates of the evolution equation
/// `ρ' = H(t) − R(t)·ρ − X(t)·ρ^a₈·ρ(t − t_cr)`.
///
/// For a process track `H = A₁ε̇`, `R = A₂ε̇^(1−a₉)` and `X = A₃`.
pub trait RateCoefficients: Sync {
    fn hardening(&self, t: f64) -> f64;
    fn recovery(&self, t: f64) -> f64;
    fn recrystallization(&self, t: f64) -> f64;

    /// Times where the rates may have kinks.
    fn breakpoints(&self) -> &[f64] {
        &[]
    }
}

/// Constant-coefficient model with constant critical density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantModel {
    /// A₁
    pub hardening: f64,
    /// A₂
    pub recovery: f64,
    /// A₃
    pub recrystallization: f64,
    pub a8: f64,
    pub rho0: f64,
    pub rho_cr: f64,
}

impl ConstantModel {
    /// Checks `A₁, A₂ > 0`, `A₃ ≥ 0`, `a₈ ∈ [0, 1]` and
    /// `0 ≤ ρ₀ < ρ_cr < A₁/A₂`.
    pub fn validate(&self) -> Result<()> {
        if !(self.hardening > 0.0 && self.recovery > 0.0) {
            return Err(Error::domain(format!(
                "A1 and A2 must be positive (A1={}, A2={})",
                self.hardening, self.recovery
            )));
        }
        if !(self.recrystallization >= 0.0) {
            return Err(Error::domain("A3 must be nonnegative"));
        }
        if !(0.0..=1.0).contains(&self.a8) {
            return Err(Error::domain(format!("a8 must lie in [0, 1], got {}", self.a8)));
        }
        let sat = self.saturation();
        if !(0.0 <= self.rho0 && self.rho0 < self.rho_cr && self.rho_cr < sat) {
            return Err(Error::domain(format!(
                "need 0 <= rho0 < rho_cr < A1/A2, got rho0={}, rho_cr={}, A1/A2={}",
                self.rho0, self.rho_cr, sat
            )));
        }
        Ok(())
    }

    /// Saturation density `A₁/A₂`.
    pub fn saturation(&self) -> f64 {
        self.hardening / self.recovery
    }

    pub fn ratio(&self) -> f64 {
        self.recrystallization / self.recovery
    }

    /// Whether `A₃/A₂ < 1`, under which solutions stay in `[0, A₁/A₂]`.
    pub fn is_stable_regime(&self) -> bool {
        self.ratio() < 1.0
    }

    /// Closed-form critical time `(1/A₂)·ln((ρ₀ − A₁/A₂)/(ρ_cr − A₁/A₂))`.
    pub fn critical_time(&self) -> Result<f64> {
        self.validate()?;
        let sat = self.saturation();
        Ok(((self.rho0 - sat) / (self.rho_cr - sat)).ln() / self.recovery)
    }

    pub fn with_recrystallization(self, a3: f64) -> Self {
        ConstantModel {
            recrystallization: a3,
            ..self
        }
    }
}

impl RateCoefficients for ConstantModel {
    fn hardening(&self, _t: f64) -> f64 {
        self.hardening
    }
    fn recovery(&self, _t: f64) -> f64 {
        self.recovery
    }
    fn recrystallization(&self, _t: f64) -> f64 {
        self.recrystallization
    }
}

/// Rates derived from a coefficient track and the recovery exponent `a₉`.
#[derive(Debug, Clone, Copy)]
pub struct TrackRates<'a> {
    pub track: &'a CoefficientTrack,
    pub a9: f64,
}

impl<'a> TrackRates<'a> {
    pub fn new(track: &'a CoefficientTrack, a9: f64) -> Self {
        TrackRates { track, a9 }
    }
}

impl RateCoefficients for TrackRates<'_> {
    fn hardening(&self, t: f64) -> f64 {
        let v = self.track.at(t);
        v.hardening * v.strain_rate
    }
    fn recovery(&self, t: f64) -> f64 {
        let v = self.track.at(t);
        v.recovery * v.strain_rate.powf(1.0 - self.a9)
    }
    fn recrystallization(&self, t: f64) -> f64 {
        self.track.at(t).recrystallization
    }
    fn breakpoints(&self) -> &[f64] {
        self.track.breakpoints()
    }
}

impl<R: RateCoefficients + ?Sized> RateCoefficients for &R {
    fn hardening(&self, t: f64) -> f64 {
        (**self).hardening(t)
    }
    fn recovery(&self, t: f64) -> f64 {
        (**self).recovery(t)
    }
    fn recrystallization(&self, t: f64) -> f64 {
        (**self).recrystallization(t)
    }
    fn breakpoints(&self) -> &[f64] {
        (**self).breakpoints()
    }
}

/// `sgn(y)·|y|^a₈`, with the `a₈ = 0` case taken as the constant 1 so the
/// field reduces to the linear delay equation.
#[inline]
pub fn signed_power(y: f64, a8: f64) -> f64 {
    if a8 == 0.0 {
        1.0
    } else if a8 == 1.0 {
        y
    } else {
        y.signum() * y.abs().powf(a8)
    }
}

/// Right-hand side `f(t, y, z)` of the dislocation-density equation once
/// recrystallization is active, extended monotonically to negative `y`.
///
/// For `a₈ > 0` the delayed value enters as `|z|`, which keeps the field
/// nonincreasing in `y`.
#[derive(Debug, Clone, Copy)]
pub struct DislocationField<R> {
    pub rates: R,
    pub a8: f64,
}

impl<R: RateCoefficients> DislocationField<R> {
    pub fn new(rates: R, a8: f64) -> Self {
        DislocationField { rates, a8 }
    }

    #[inline]
    pub fn eval(&self, t: f64, y: f64, z: f64) -> f64 {
        let delayed = if self.a8 == 0.0 { z } else { z.abs() };
        self.rates.hardening(t)
            - self.rates.recovery(t) * y
            - self.rates.recrystallization(t) * signed_power(y, self.a8) * delayed
    }

    /// Sum of the magnitudes of the three terms, the natural scale for
    /// residual checks.
    pub fn scale(&self, t: f64, y: f64, z: f64) -> f64 {
        self.rates.hardening(t).abs()
            + (self.rates.recovery(t) * y).abs()
            + (self.rates.recrystallization(t) * signed_power(y, self.a8) * z).abs()
    }
}

/// Equilibrium `ρ*` of `A₁ − A₂ρ − A₃ρ^a₈·ρ = 0` in `[0, A₁/A₂]`.
pub fn equilibrium(model: &ConstantModel) -> f64 {
    let g = |r: f64| {
        model.hardening - model.recovery * r - model.recrystallization * signed_power(r, model.a8) * r
    };
    let (mut lo, mut hi) = (0.0, model.saturation());
    if g(hi) >= 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
