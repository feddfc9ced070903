//! Physical coefficient formulas of the dislocation-density model and
//! time-parametrised coefficient tracks.
//!
//! All quantities are SI: densities in m⁻², time in s, temperature in K,
//! activation energies in J/mol. Stresses are in MPa with the shear modulus
//! also given in MPa.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Universal gas constant [J/(mol·K)].
pub const GAS_CONSTANT: f64 = 8.314;

/// Offset between the Celsius and Kelvin scales.
pub const CELSIUS_OFFSET: f64 = 273.15;

/// Full coefficient record of a material.
///
/// `a6`/`a7` only enter the flow stress; `a8`/`a9` are the exponents of the
/// recrystallization and recovery terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialCoefficients {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub a6: f64,
    pub a7: f64,
    pub a8: f64,
    pub a9: f64,
    pub a10: f64,
    pub a11: f64,
    pub a12: f64,
    pub a13: f64,
    /// Burgers vector length [m].
    pub b: f64,
    /// Shear modulus [MPa].
    pub mu: f64,
    /// Activation energy for deformation [J/mol].
    pub q: f64,
    /// Grain size [m].
    pub grain_size: f64,
}

/// Coefficients evaluated at one process state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientValues {
    /// Hardening coefficient A₁ [m⁻²].
    pub hardening: f64,
    /// Recovery coefficient A₂.
    pub recovery: f64,
    /// Recrystallization coefficient A₃.
    pub recrystallization: f64,
    /// Strain rate [1/s].
    pub strain_rate: f64,
    /// Temperature [K].
    pub temperature: f64,
    /// Critical dislocation density [m⁻²].
    pub critical_density: f64,
}

/// Local process conditions of a material point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessState {
    pub t: f64,
    /// Absolute temperature [K].
    pub temperature: f64,
    pub strain_rate: f64,
    pub strain: f64,
}

impl ProcessState {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0) {
            return Err(Error::domain(format!(
                "temperature must be positive, got {} K",
                self.temperature
            )));
        }
        if !(self.strain_rate >= 0.0) {
            return Err(Error::domain(format!(
                "strain rate must be nonnegative, got {}",
                self.strain_rate
            )));
        }
        Ok(())
    }
}

fn check_temperature(temperature: f64) -> Result<()> {
    if temperature > 0.0 && temperature.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "temperature must be positive, got {temperature} K"
        )))
    }
}

/// Zener–Hollomon parameter `ε̇·exp(Q/(R·T))`.
pub fn zener_hollomon(strain_rate: f64, temperature: f64, activation_energy: f64) -> Result<f64> {
    check_temperature(temperature)?;
    if !(strain_rate >= 0.0) {
        return Err(Error::domain(format!(
            "strain rate must be nonnegative, got {strain_rate}"
        )));
    }
    if strain_rate == 0.0 {
        return Ok(0.0);
    }
    Ok(strain_rate * (activation_energy / (GAS_CONSTANT * temperature)).exp())
}

/// Average free path of dislocations; zero when there is no deformation.
pub fn free_path(strain_rate: f64, zener: f64, a1: f64, a13: f64) -> f64 {
    if strain_rate > 0.0 {
        a1 * zener.powf(-a13)
    } else {
        0.0
    }
}

/// Hardening coefficient A₁ = 1/(b·l), switched off when ε̇ = 0.
pub fn hardening_coefficient(b: f64, free_path: f64, strain_rate: f64) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::domain(format!("Burgers vector must be positive, got {b}")));
    }
    if strain_rate > 0.0 {
        if !(free_path > 0.0) {
            return Err(Error::domain(
                "free path must be positive while the material deforms",
            ));
        }
        Ok(1.0 / (b * free_path))
    } else {
        Ok(0.0)
    }
}

/// Recovery coefficient A₂ = a₂·exp(−a₃/(R·T)).
pub fn recovery_coefficient(a2: f64, a3: f64, temperature: f64) -> Result<f64> {
    check_temperature(temperature)?;
    Ok(a2 * (-a3 / (GAS_CONSTANT * temperature)).exp())
}

/// Recrystallization coefficient A₃ = a₄·(μb²/(2D))·exp(−a₅/(R·T)).
pub fn recrystallization_coefficient(
    a4: f64,
    a5: f64,
    mu: f64,
    b: f64,
    grain_size: f64,
    temperature: f64,
) -> Result<f64> {
    check_temperature(temperature)?;
    if !(grain_size > 0.0) {
        return Err(Error::domain(format!(
            "grain size must be positive, got {grain_size}"
        )));
    }
    Ok(a4 * (mu * b * b / (2.0 * grain_size)) * (-a5 / (GAS_CONSTANT * temperature)).exp())
}

/// Critical dislocation density `a₁₁ + a₁₂·Z^a₁₀`.
pub fn critical_density(a10: f64, a11: f64, a12: f64, zener: f64) -> f64 {
    if zener == 0.0 {
        // 0^a10 with a10 > 0
        return if a10 == 0.0 { a11 + a12 } else { a11 };
    }
    a11 + a12 * zener.powf(a10)
}

/// Flow stress `a₇ + a₆·b·μ·√ρ` [MPa].
pub fn flow_stress(density: f64, a6: f64, a7: f64, b: f64, mu: f64) -> Result<f64> {
    if !(density >= 0.0) {
        return Err(Error::domain(format!(
            "dislocation density must be nonnegative, got {density}"
        )));
    }
    Ok(a7 + a6 * b * mu * density.sqrt())
}

impl MaterialCoefficients {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.a8) || !(0.0..=1.0).contains(&self.a9) {
            return Err(Error::domain(format!(
                "a8 and a9 must lie in [0, 1], got a8={} a9={}",
                self.a8, self.a9
            )));
        }
        for (name, v) in [("b", self.b), ("mu", self.mu), ("D", self.grain_size)] {
            if !(v > 0.0) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Evaluates every model coefficient at temperature `temperature` [K] and
    /// strain rate `strain_rate`.
    pub fn evaluate(&self, temperature: f64, strain_rate: f64) -> Result<CoefficientValues> {
        let z = zener_hollomon(strain_rate, temperature, self.q)?;
        let l = free_path(strain_rate, z, self.a1, self.a13);
        Ok(CoefficientValues {
            hardening: hardening_coefficient(self.b, l, strain_rate)?,
            recovery: recovery_coefficient(self.a2, self.a3, temperature)?,
            recrystallization: recrystallization_coefficient(
                self.a4,
                self.a5,
                self.mu,
                self.b,
                self.grain_size,
                temperature,
            )?,
            strain_rate,
            temperature,
            critical_density: critical_density(self.a10, self.a11, self.a12, z),
        })
    }

    pub fn flow_stress(&self, density: f64) -> Result<f64> {
        flow_stress(density, self.a6, self.a7, self.b, self.mu)
    }

    /// Parses the flat `key=value` preset format. `a6` and `a7` default to
    /// 1 and 0; every other key is required.
    pub fn from_key_values(text: &str) -> Result<Self> {
        let map = parse_key_values(text)?;
        Self::from_map(&map)
    }

    pub(crate) fn from_map(map: &BTreeMap<String, (usize, f64)>) -> Result<Self> {
        let get = |key: &str| -> Result<f64> {
            map.get(key)
                .map(|&(_, v)| v)
                .ok_or_else(|| Error::format(None, format!("missing key `{key}`")))
        };
        let opt = |key: &str, default: f64| map.get(key).map(|&(_, v)| v).unwrap_or(default);
        let m = MaterialCoefficients {
            a1: get("a1")?,
            a2: get("a2")?,
            a3: get("a3")?,
            a4: get("a4")?,
            a5: get("a5")?,
            a6: opt("a6", 1.0),
            a7: opt("a7", 0.0),
            a8: get("a8")?,
            a9: get("a9")?,
            a10: get("a10")?,
            a11: get("a11")?,
            a12: get("a12")?,
            a13: get("a13")?,
            b: get("b")?,
            mu: get("mu")?,
            q: get("Q")?,
            grain_size: get("D")?,
        };
        m.validate()?;
        Ok(m)
    }

    /// Serialises to the `key=value` preset format.
    pub fn to_key_values(&self) -> String {
        let entries = [
            ("a1", self.a1),
            ("a2", self.a2),
            ("a3", self.a3),
            ("a4", self.a4),
            ("a5", self.a5),
            ("a6", self.a6),
            ("a7", self.a7),
            ("a8", self.a8),
            ("a9", self.a9),
            ("a10", self.a10),
            ("a11", self.a11),
            ("a12", self.a12),
            ("a13", self.a13),
            ("b", self.b),
            ("mu", self.mu),
            ("Q", self.q),
            ("D", self.grain_size),
        ];
        entries
            .iter()
            .map(|(k, v)| format!("{k}={v:e}\n"))
            .collect()
    }
}

/// Splits flat `key=value` text into numeric entries, keyed by name with the
/// 1-based line number kept for diagnostics. `#` starts a comment; the
/// non-numeric key `name` is skipped.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, (usize, f64)>> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::format(Some(line), format!("expected key=value, got `{content}`")))?;
        let key = key.trim();
        if key == "name" {
            continue;
        }
        let value: f64 = value.trim().parse().map_err(|_| {
            Error::format(Some(line), format!("value of `{key}` is not a number"))
        })?;
        if map.insert(key.to_string(), (line, value)).is_some() {
            return Err(Error::format(Some(line), format!("duplicate key `{key}`")));
        }
    }
    Ok(map)
}

/// One row of a process track: time, absolute temperature and strain rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackSample {
    pub t: f64,
    /// Temperature [K].
    pub temperature: f64,
    pub strain_rate: f64,
}

/// Where the values of a [`CoefficientTrack`] come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Constant,
    FormulaFromTrack,
    Tabulated,
}

/// Closed range `[min, max]` observed for a coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        values.fold(
            Range {
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
            },
            |r, v| Range {
                min: r.min.min(v),
                max: r.max.max(v),
            },
        )
    }
}

/// Bounds `α_i ≤ A_i(t) ≤ β_i` taken over the track nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientBounds {
    pub hardening: Range,
    pub recovery: Range,
    pub recrystallization: Range,
    pub strain_rate: Range,
}

#[derive(Debug, Clone)]
enum TrackKind {
    Constant(CoefficientValues),
    Formula {
        samples: Vec<TrackSample>,
        material: MaterialCoefficients,
    },
    Tabulated {
        values: Vec<CoefficientValues>,
    },
}

/// Time-parametrised coefficients `t ↦ (A₁, A₂, A₃, ε̇, T, ρ_cr)`.
///
/// Sampled tracks interpolate linearly between nodes and clamp to the end
/// values outside the sampled window. Immutable once built.
#[derive(Debug, Clone)]
pub struct CoefficientTrack {
    kind: TrackKind,
    times: Vec<f64>,
    bounds: CoefficientBounds,
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::format(None, "a track needs at least two samples"));
    }
    for (i, w) in times.windows(2).enumerate() {
        if !w[0].is_finite() || !w[1].is_finite() {
            return Err(Error::format(Some(i + 1), "non-finite time"));
        }
        if w[1] <= w[0] {
            return Err(Error::format(
                Some(i + 2),
                format!("times must be strictly increasing ({} after {})", w[1], w[0]),
            ));
        }
    }
    Ok(())
}

fn check_values(v: &CoefficientValues) -> Result<()> {
    let all = [
        v.hardening,
        v.recovery,
        v.recrystallization,
        v.strain_rate,
        v.temperature,
        v.critical_density,
    ];
    if all.iter().all(|x| x.is_finite() && *x >= 0.0) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "coefficients must be finite and nonnegative: {v:?}"
        )))
    }
}

/// Index `i` with `times[i] <= t < times[i+1]` and the weight of `times[i+1]`.
fn locate(times: &[f64], t: f64) -> (usize, f64) {
    let last = times.len() - 1;
    if t <= times[0] {
        return (0, 0.0);
    }
    if t >= times[last] {
        return (last - 1, 1.0);
    }
    let i = times.partition_point(|&x| x <= t) - 1;
    let w = (t - times[i]) / (times[i + 1] - times[i]);
    (i, w)
}

fn lerp(a: f64, b: f64, w: f64) -> f64 {
    a + (b - a) * w
}

impl CoefficientTrack {
    /// Track with time-independent coefficients.
    pub fn constant(values: CoefficientValues) -> Result<Self> {
        check_values(&values)?;
        let r = |x: f64| Range { min: x, max: x };
        Ok(CoefficientTrack {
            kind: TrackKind::Constant(values),
            times: Vec::new(),
            bounds: CoefficientBounds {
                hardening: r(values.hardening),
                recovery: r(values.recovery),
                recrystallization: r(values.recrystallization),
                strain_rate: r(values.strain_rate),
            },
        })
    }

    /// Builds a track from sampled temperature and strain rate; coefficients
    /// follow from the material formulas applied to interpolated values.
    pub fn from_samples(samples: &[TrackSample], material: &MaterialCoefficients) -> Result<Self> {
        material.validate()?;
        let times: Vec<f64> = samples.iter().map(|s| s.t).collect();
        check_times(&times)?;
        let mut values = Vec::with_capacity(samples.len());
        for (i, s) in samples.iter().enumerate() {
            let v = material.evaluate(s.temperature, s.strain_rate).map_err(|e| match e {
                Error::Domain(m) => Error::format(Some(i + 1), m),
                other => other,
            })?;
            check_values(&v)?;
            values.push(v);
        }
        Ok(CoefficientTrack {
            bounds: bounds_of(&values),
            kind: TrackKind::Formula {
                samples: samples.to_vec(),
                material: material.clone(),
            },
            times,
        })
    }

    /// Track interpolating user-supplied coefficient values directly.
    pub fn tabulated(times: Vec<f64>, values: Vec<CoefficientValues>) -> Result<Self> {
        check_times(&times)?;
        if times.len() != values.len() {
            return Err(Error::format(None, "times and values differ in length"));
        }
        for v in &values {
            check_values(v)?;
        }
        Ok(CoefficientTrack {
            bounds: bounds_of(&values),
            kind: TrackKind::Tabulated { values },
            times,
        })
    }

    pub fn provenance(&self) -> Provenance {
        match self.kind {
            TrackKind::Constant(_) => Provenance::Constant,
            TrackKind::Formula { .. } => Provenance::FormulaFromTrack,
            TrackKind::Tabulated { .. } => Provenance::Tabulated,
        }
    }

    /// Sampled time window, `None` for constant tracks.
    pub fn domain(&self) -> Option<(f64, f64)> {
        match (self.times.first(), self.times.last()) {
            (Some(&a), Some(&b)) => Some((a, b)),
            _ => None,
        }
    }

    /// Sample times, where the interpolated coefficients have kinks.
    pub fn breakpoints(&self) -> &[f64] {
        &self.times
    }

    pub fn bounds(&self) -> &CoefficientBounds {
        &self.bounds
    }

    /// Coefficients at time `t`.
    pub fn at(&self, t: f64) -> CoefficientValues {
        match &self.kind {
            TrackKind::Constant(v) => *v,
            TrackKind::Formula { samples, material } => {
                let (i, w) = locate(&self.times, t);
                let (a, b) = (&samples[i], &samples[i + 1]);
                let temperature = lerp(a.temperature, b.temperature, w);
                let strain_rate = lerp(a.strain_rate, b.strain_rate, w);
                // Inputs were validated at construction and interpolation
                // stays inside the sampled ranges.
                material
                    .evaluate(temperature, strain_rate)
                    .expect("interpolated state within validated range")
            }
            TrackKind::Tabulated { values, .. } => {
                let (i, w) = locate(&self.times, t);
                let (a, b) = (&values[i], &values[i + 1]);
                CoefficientValues {
                    hardening: lerp(a.hardening, b.hardening, w),
                    recovery: lerp(a.recovery, b.recovery, w),
                    recrystallization: lerp(a.recrystallization, b.recrystallization, w),
                    strain_rate: lerp(a.strain_rate, b.strain_rate, w),
                    temperature: lerp(a.temperature, b.temperature, w),
                    critical_density: lerp(a.critical_density, b.critical_density, w),
                }
            }
        }
    }

    /// Same track with every temperature shifted by `delta` kelvin. Only
    /// formula tracks depend on temperature; other kinds are returned as is.
    pub fn with_temperature_shift(&self, delta: f64) -> Result<Self> {
        match &self.kind {
            TrackKind::Formula { samples, material } => {
                let shifted: Vec<TrackSample> = samples
                    .iter()
                    .map(|s| TrackSample {
                        temperature: s.temperature + delta,
                        ..*s
                    })
                    .collect();
                Self::from_samples(&shifted, material)
            }
            _ => Ok(self.clone()),
        }
    }
}

fn bounds_of(values: &[CoefficientValues]) -> CoefficientBounds {
    CoefficientBounds {
        hardening: Range::of(values.iter().map(|v| v.hardening)),
        recovery: Range::of(values.iter().map(|v| v.recovery)),
        recrystallization: Range::of(values.iter().map(|v| v.recrystallization)),
        strain_rate: Range::of(values.iter().map(|v| v.strain_rate)),
    }
}

/// Convenience wrapper for [`CoefficientTrack::from_samples`].
pub fn track_from_samples(
    samples: &[TrackSample],
    material: &MaterialCoefficients,
) -> Result<CoefficientTrack> {
    CoefficientTrack::from_samples(samples, material)
}

/// Reads a process track CSV with header `t,T_C,eps_dot` (Celsius input,
/// converted to kelvin). Row numbers in errors count the header as row 1.
pub fn read_track_csv<R: Read>(reader: R) -> Result<Vec<TrackSample>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::format(Some(1), e.to_string()))?
        .clone();
    let expected = ["t", "T_C", "eps_dot"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::format(
            Some(1),
            format!("expected header `t,T_C,eps_dot`, got `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut samples = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::format(Some(row), e.to_string()))?;
        let field = |k: usize| -> Result<f64> {
            rec.get(k)
                .ok_or_else(|| Error::format(Some(row), "missing column"))?
                .parse::<f64>()
                .map_err(|_| Error::format(Some(row), format!("column `{}` is not a number", expected[k])))
        };
        let sample = TrackSample {
            t: field(0)?,
            temperature: field(1)? + CELSIUS_OFFSET,
            strain_rate: field(2)?,
        };
        if !(sample.temperature > 0.0) || !(sample.strain_rate >= 0.0) {
            return Err(Error::format(Some(row), "temperature below absolute zero or negative strain rate"));
        }
        if let Some(prev) = samples.last().map(|s: &TrackSample| s.t) {
            if !(sample.t > prev) {
                return Err(Error::format(
                    Some(row),
                    format!("times must be strictly increasing ({} after {prev})", sample.t),
                ));
            }
        }
        samples.push(sample);
    }
    if samples.len() < 2 {
        return Err(Error::format(None, "a track needs at least two samples"));
    }
    Ok(samples)
}

pub fn read_track_file(path: impl AsRef<Path>) -> Result<Vec<TrackSample>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| with_path(e, path))?;
    read_track_csv(file)
}

pub(crate) fn with_path(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Writes samples in the `t,T_C,eps_dot` format.
pub fn write_track_csv<W: std::io::Write>(mut out: W, samples: &[TrackSample]) -> Result<()> {
    writeln!(out, "t,T_C,eps_dot")?;
    for s in samples {
        writeln!(out, "{},{},{}", s.t, s.temperature - CELSIUS_OFFSET, s.strain_rate)?;
    }
    Ok(())
}
