//! Material presets and full-model runs along process tracks.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coefficients::{
    parse_key_values, read_track_file, with_path, CoefficientTrack, CoefficientValues, MaterialCoefficients, TrackSample,
    CELSIUS_OFFSET,
};
use crate::error::{Error, Result};
use crate::integrators::{
    solve_full_model, CriticalTime, FullModelRun, Method, PathFlags, SolutionPath, SolverOptions,
};
use crate::model::ConstantModel;

/// Initial density of the rolling runs [m⁻²].
pub const DEFAULT_RHO0: f64 = 1e4;

/// Critical density of the composite presets as a fraction of `A₁/A₂`, so
/// the density saturates before recrystallization starts.
pub const COMPOSITE_THRESHOLD: f64 = 0.995;

/// Coefficients given directly at one temperature and strain rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeCoefficients {
    /// A₁ [m⁻²]
    pub hardening: f64,
    /// A₂
    pub recovery: f64,
    /// A₃
    pub recrystallization: f64,
    pub critical_density: f64,
    /// Temperature [K].
    pub temperature: f64,
    pub strain_rate: f64,
}

impl CompositeCoefficients {
    pub fn values(&self) -> CoefficientValues {
        CoefficientValues {
            hardening: self.hardening,
            recovery: self.recovery,
            recrystallization: self.recrystallization,
            strain_rate: self.strain_rate,
            temperature: self.temperature,
            critical_density: self.critical_density,
        }
    }
}

/// A material: formula constants plus, for laboratory cases, composite
/// coefficients that bypass the formulas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialPreset {
    pub name: String,
    pub material: MaterialCoefficients,
    pub composite: Option<CompositeCoefficients>,
}

const COPPER: MaterialCoefficients = MaterialCoefficients {
    a1: 2.0482e-3,
    a2: 175.9428,
    a3: 19_463.28,
    a4: 7.08795e6,
    a5: 151_332.4,
    a6: 1.0,
    a7: 0.0,
    a8: 1.0,
    a9: 0.0,
    a10: 0.3,
    a11: 1e4,
    a12: 6.617e9,
    a13: 0.20182,
    b: 2.56e-10,
    mu: 45_000.0,
    q: 197_000.0,
    grain_size: 50e-6,
};

const DP_STEEL: MaterialCoefficients = MaterialCoefficients {
    a1: 9.31493e-5,
    a2: 18_880.51,
    a3: 83_362.91,
    a4: 9.412682e8,
    a5: 123_140.4,
    a6: 1.0,
    a7: 0.0,
    a8: 0.45239,
    a9: 0.13751,
    a10: 0.34,
    a11: 1e4,
    a12: 1.455e9,
    a13: 0.074873,
    b: 2.48e-10,
    mu: 75_000.0,
    q: 312_000.0,
    grain_size: 30e-6,
};

/// Laboratory coefficients at `ε̇ = 1`: `(T [°C], A₁, A₂, A₃)`.
const COPPER_COMPOSITES: [(f64, f64, f64, f64); 3] = [
    (575.0, 5.35882e14, 11.134, 9.9962e-14),
    (625.0, 3.91516e14, 12.9833, 3.30145e-13),
    (675.0, 2.95672e14, 14.8963, 9.61261e-13),
];

const DP_STEEL_COMPOSITES: [(f64, f64, f64, f64); 3] = [
    (1000.0, 3.93394e14, 7.17277, 6.41439e-7),
    (1100.0, 3.34986e14, 12.7284, 1.49657e-6),
    (1200.0, 2.91544e14, 20.895, 3.11231e-6),
];

impl MaterialPreset {
    /// Names accepted by [`MaterialPreset::by_name`].
    pub const NAMES: [&'static str; 8] = [
        "copper",
        "copper-575",
        "copper-625",
        "copper-675",
        "dp-steel",
        "dp-steel-1000",
        "dp-steel-1100",
        "dp-steel-1200",
    ];

    pub fn copper() -> Self {
        MaterialPreset {
            name: "copper".into(),
            material: COPPER,
            composite: None,
        }
    }

    pub fn dp_steel() -> Self {
        MaterialPreset {
            name: "dp-steel".into(),
            material: DP_STEEL,
            composite: None,
        }
    }

    /// Copper laboratory preset at 575, 625 or 675 °C.
    pub fn copper_at(celsius: f64) -> Result<Self> {
        Self::composite_preset("copper", COPPER, &COPPER_COMPOSITES, celsius)
    }

    /// DP steel laboratory preset at 1000, 1100 or 1200 °C.
    pub fn dp_steel_at(celsius: f64) -> Result<Self> {
        Self::composite_preset("dp-steel", DP_STEEL, &DP_STEEL_COMPOSITES, celsius)
    }

    fn composite_preset(
        base: &str,
        material: MaterialCoefficients,
        table: &[(f64, f64, f64, f64)],
        celsius: f64,
    ) -> Result<Self> {
        let &(c, a1, a2, a3) = table.iter().find(|row| row.0 == celsius).ok_or_else(|| {
            let known: Vec<String> = table.iter().map(|r| format!("{}", r.0)).collect();
            Error::domain(format!("no {base} preset at {celsius} C (known: {})", known.join(", ")))
        })?;
        Ok(MaterialPreset {
            name: format!("{base}-{c}"),
            material,
            composite: Some(CompositeCoefficients {
                hardening: a1,
                recovery: a2,
                recrystallization: a3,
                critical_density: COMPOSITE_THRESHOLD * a1 / a2,
                temperature: c + CELSIUS_OFFSET,
                strain_rate: 1.0,
            }),
        })
    }

    pub fn by_name(name: &str) -> Result<Self> {
        let key = name.trim().to_ascii_lowercase().replace('_', "-");
        match key.as_str() {
            "copper" | "cu" => return Ok(Self::copper()),
            "dp-steel" | "dp" => return Ok(Self::dp_steel()),
            _ => {}
        }
        let parsed = key
            .rsplit_once('-')
            .and_then(|(base, t)| t.parse::<f64>().ok().map(|t| (base, t)));
        match parsed {
            Some(("copper" | "cu", t)) => Self::copper_at(t),
            Some(("dp-steel" | "dp", t)) => Self::dp_steel_at(t),
            _ => Err(Error::domain(format!(
                "unknown preset `{name}` (known: {})",
                Self::NAMES.join(", ")
            ))),
        }
    }

    /// Parses a preset file: the formula keys `a1..a13, b, mu, Q, D`, an
    /// optional `name`, and optionally the composite keys `A1, A2, A3,
    /// rho_cr` with `T_C` and `eps_dot` (default 1).
    pub fn from_key_values(text: &str) -> Result<Self> {
        let map = parse_key_values(text)?;
        let material = MaterialCoefficients::from_map(&map)?;
        let name = text
            .lines()
            .filter_map(|l| l.split('#').next()?.split_once('='))
            .find(|(k, _)| k.trim() == "name")
            .map(|(_, v)| v.trim().to_string())
            .unwrap_or_else(|| "custom".into());
        let composite_keys = ["A1", "A2", "A3", "rho_cr"];
        let present = composite_keys.iter().filter(|k| map.contains_key(**k)).count();
        let composite = match present {
            0 => None,
            4 => {
                let get = |k: &str| map[k].1;
                let celsius = map
                    .get("T_C")
                    .map(|v| v.1)
                    .ok_or_else(|| Error::format(None, "composite presets need `T_C`"))?;
                let c = CompositeCoefficients {
                    hardening: get("A1"),
                    recovery: get("A2"),
                    recrystallization: get("A3"),
                    critical_density: get("rho_cr"),
                    temperature: celsius + CELSIUS_OFFSET,
                    strain_rate: map.get("eps_dot").map(|v| v.1).unwrap_or(1.0),
                };
                if !(c.temperature > 0.0) {
                    return Err(Error::format(map.get("T_C").map(|v| v.0), "temperature below absolute zero"));
                }
                Some(c)
            }
            _ => {
                return Err(Error::format(
                    None,
                    "composite presets need all of `A1`, `A2`, `A3` and `rho_cr`",
                ))
            }
        };
        Ok(MaterialPreset {
            name,
            material,
            composite,
        })
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_key_values(&std::fs::read_to_string(path).map_err(|e| with_path(e, path))?)
    }

    pub fn to_key_values(&self) -> String {
        let mut s = format!("name={}\n", self.name);
        s.push_str(&self.material.to_key_values());
        if let Some(c) = &self.composite {
            s.push_str(&format!(
                "A1={:e}\nA2={:e}\nA3={:e}\nrho_cr={:e}\nT_C={}\neps_dot={:e}\n",
                c.hardening,
                c.recovery,
                c.recrystallization,
                c.critical_density,
                c.temperature - CELSIUS_OFFSET,
                c.strain_rate
            ));
        }
        s
    }

    /// Track for this preset: constant composite coefficients, or the
    /// formulas applied along `samples`.
    pub fn track(&self, samples: Option<&[TrackSample]>) -> Result<CoefficientTrack> {
        match (&self.composite, samples) {
            (Some(c), None) => CoefficientTrack::constant(c.values()),
            (Some(_), Some(_)) => Err(Error::domain(format!(
                "preset `{}` has fixed coefficients and takes no track",
                self.name
            ))),
            (None, Some(s)) => CoefficientTrack::from_samples(s, &self.material),
            (None, None) => Err(Error::domain(format!("preset `{}` needs a process track", self.name))),
        }
    }

    /// Constant track of the formulas at temperature [K] and strain rate.
    pub fn constant_track(&self, temperature: f64, strain_rate: f64) -> Result<CoefficientTrack> {
        CoefficientTrack::constant(self.material.evaluate(temperature, strain_rate)?)
    }

    /// Constant-coefficient model matching a constant track of this preset.
    pub fn constant_model(&self, values: &CoefficientValues, rho0: f64) -> ConstantModel {
        let m = &self.material;
        ConstantModel {
            hardening: values.hardening * values.strain_rate,
            recovery: values.recovery * values.strain_rate.powf(1.0 - m.a9),
            recrystallization: values.recrystallization,
            a8: m.a8,
            rho0,
            rho_cr: values.critical_density,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub rho0: f64,
    pub method: Method,
    /// Steps per delay interval.
    pub steps: usize,
    /// End time; the track window, or ten critical times for constant
    /// tracks, when absent.
    pub horizon: Option<f64>,
    pub detect_step: Option<f64>,
    pub options: SolverOptions,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            rho0: DEFAULT_RHO0,
            method: Method::Rk4,
            steps: 1000,
            horizon: None,
            detect_step: None,
            options: SolverOptions::default(),
        }
    }
}

/// One output row; temperature in kelvin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub t: f64,
    pub rho: f64,
    pub sigma_f: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub temperature: f64,
    pub strain_rate: f64,
}

pub const SCENARIO_HEADER: [&str; 8] = ["t", "rho", "sigma_f", "A1", "A2", "A3", "T", "eps_dot"];

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub preset: String,
    pub path: SolutionPath,
    pub critical: CriticalTime,
    pub rows: Vec<ScenarioRow>,
    /// `H/R` at the onset, or at the horizon without onset.
    pub plateau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub preset: String,
    pub t_cr: Option<f64>,
    pub rho_max: f64,
    pub plateau: f64,
    pub flags: PathFlags,
    pub method: Method,
    pub steps: usize,
    pub horizon: f64,
}

impl ScenarioResult {
    pub fn t_cr(&self) -> Option<f64> {
        self.critical.t_cr()
    }

    pub fn flags(&self) -> PathFlags {
        self.path.flags
    }

    pub fn rho_max(&self) -> f64 {
        self.path.max()
    }

    pub fn summary(&self) -> ScenarioSummary {
        ScenarioSummary {
            preset: self.preset.clone(),
            t_cr: self.t_cr(),
            rho_max: self.rho_max(),
            plateau: self.plateau,
            flags: self.flags(),
            method: self.path.method,
            steps: self.path.grid.steps,
            horizon: self.path.grid.horizon,
        }
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary()).expect("summary serializes")
    }

    /// Writes `t,rho,sigma_f,A1,A2,A3,T,eps_dot` with shortest round-trip
    /// formatting.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows(out, &self.rows)
    }
}

pub fn write_rows<W: Write>(out: W, rows: &[ScenarioRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCENARIO_HEADER).map_err(csv_error)?;
    for r in rows {
        w.write_record(
            [r.t, r.rho, r.sigma_f, r.a1, r.a2, r.a3, r.temperature, r.strain_rate].map(|v| format!("{v:?}")),
        )
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows written by [`ScenarioResult::write_csv`].
pub fn read_rows<R: Read>(reader: R) -> Result<Vec<ScenarioRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::format(Some(1), e.to_string()))?;
    if headers.iter().ne(SCENARIO_HEADER) {
        return Err(Error::format(Some(1), format!("expected header `{}`", SCENARIO_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::format(Some(row), e.to_string()))?;
        let mut v = [0.0; 8];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = rec
                .get(k)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::format(Some(row), format!("bad `{}` value", SCENARIO_HEADER[k])))?;
        }
        rows.push(ScenarioRow {
            t: v[0],
            rho: v[1],
            sigma_f: v[2],
            a1: v[3],
            a2: v[4],
            a3: v[5],
            temperature: v[6],
            strain_rate: v[7],
        });
    }
    Ok(rows)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn default_horizon(preset: &MaterialPreset, track: &CoefficientTrack, rho0: f64) -> Result<f64> {
    if let Some((_, end)) = track.domain() {
        return Ok(end);
    }
    let model = preset.constant_model(&track.at(0.0), rho0);
    model
        .critical_time()
        .map(|t| 10.0 * t)
        .map_err(|_| Error::domain("no critical time for this constant track; give a horizon"))
}

/// Detects the onset along `track`, solves the full model and derives the
/// flow stress. Without deformation (`A₁ ≡ 0`) there is no onset.
pub fn run_scenario(preset: &MaterialPreset, track: &CoefficientTrack, config: &ScenarioConfig) -> Result<ScenarioResult> {
    if !(config.rho0 >= 0.0 && config.rho0.is_finite()) {
        return Err(Error::domain(format!("rho0 must be nonnegative, got {}", config.rho0)));
    }
    let horizon = match config.horizon {
        Some(h) => h,
        None => default_horizon(preset, track, config.rho0)?,
    };
    let m = &preset.material;
    let mut run = FullModelRun::new(m.a8, m.a9, config.rho0, horizon, config.method, config.steps);
    run.detect_step = config.detect_step;
    run.options = config.options;
    let idle = track.bounds().hardening.max == 0.0 || track.bounds().strain_rate.max == 0.0;
    if idle {
        run.t_cr = Some(horizon);
    }
    let mut solution = solve_full_model(track, &run)?;
    if idle {
        solution.critical = CriticalTime::NoCrossing {
            horizon,
            rho_end: solution.path.final_value(),
        };
    }

    let mut rows = Vec::with_capacity(solution.path.grid.node_count());
    for (_, _, t, rho) in solution.path.nodes() {
        let v = track.at(t);
        rows.push(ScenarioRow {
            t,
            rho,
            sigma_f: m.flow_stress(rho.max(0.0))?,
            a1: v.hardening,
            a2: v.recovery,
            a3: v.recrystallization,
            temperature: v.temperature,
            strain_rate: v.strain_rate,
        });
    }
    let at = solution.critical.t_cr().unwrap_or(horizon);
    let v = track.at(at);
    let r = v.recovery * v.strain_rate.powf(1.0 - m.a9);
    let plateau = if r > 0.0 { v.hardening * v.strain_rate / r } else { 0.0 };
    Ok(ScenarioResult {
        preset: preset.name.clone(),
        path: solution.path,
        critical: solution.critical,
        rows,
        plateau,
    })
}

/// Reads a `t,T_C,eps_dot` track file and runs the preset formulas on it.
pub fn run_scenario_file(
    preset: &MaterialPreset,
    track_file: impl AsRef<Path>,
    config: &ScenarioConfig,
) -> Result<ScenarioResult> {
    let samples = read_track_file(track_file)?;
    let track = preset.track(Some(&samples))?;
    run_scenario(preset, &track, config)
}

/// Runs independent scenarios, concurrently with the `parallel` feature.
pub fn run_sweep(jobs: &[(MaterialPreset, CoefficientTrack)], config: &ScenarioConfig) -> Vec<Result<ScenarioResult>> {
    let one = |(p, t): &(MaterialPreset, CoefficientTrack)| run_scenario(p, t, config);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        jobs.par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        jobs.iter().map(one).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Leading {
    Center,
    Surface,
    Tie,
    /// Neither line reaches the critical density.
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineComparison {
    pub center_t_cr: Option<f64>,
    pub surface_t_cr: Option<f64>,
    pub first: Leading,
}

/// Onset times closer than this fraction of the larger one count as a tie.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Which of two flow lines reaches its critical density first.
pub fn compare_lines(center: &ScenarioResult, surface: &ScenarioResult) -> LineComparison {
    let (c, s) = (center.t_cr(), surface.t_cr());
    let first = match (c, s) {
        (None, None) => Leading::Neither,
        (Some(_), None) => Leading::Center,
        (None, Some(_)) => Leading::Surface,
        (Some(a), Some(b)) if (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs()) => Leading::Tie,
        (Some(a), Some(b)) if a < b => Leading::Center,
        _ => Leading::Surface,
    };
    LineComparison {
        center_t_cr: c,
        surface_t_cr: s,
        first,
    }
}

impl fmt::Display for LineComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let line = |f: &mut fmt::Formatter<'_>, name: &str, t: Option<f64>| match t {
            Some(t) => writeln!(f, "{name:<8} t_cr = {t:.6e} s"),
            None => writeln!(f, "{name:<8} no recrystallization within horizon"),
        };
        line(f, "center", self.center_t_cr)?;
        line(f, "surface", self.surface_t_cr)?;
        match self.first {
            Leading::Center => write!(f, "center reaches the critical density first"),
            Leading::Surface => write!(f, "surface reaches the critical density first"),
            Leading::Tie => write!(f, "tie"),
            Leading::Neither => write!(f, "neither line recrystallizes"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::solve_constant_model;

    fn samples(celsius: &[f64], rates: &[f64], t_end: f64) -> Vec<TrackSample> {
        let n = celsius.len();
        (0..n)
            .map(|i| TrackSample {
                t: t_end * i as f64 / (n - 1) as f64,
                temperature: celsius[i] + CELSIUS_OFFSET,
                strain_rate: rates[i],
            })
            .collect()
    }

    #[test]
    fn formula_presets_reproduce_laboratory_coefficients() {
        for (preset, table) in [
            (MaterialPreset::copper(), COPPER_COMPOSITES),
            (MaterialPreset::dp_steel(), DP_STEEL_COMPOSITES),
        ] {
            for (c, a1, a2, a3) in table {
                let v = preset.material.evaluate(c + CELSIUS_OFFSET, 1.0).unwrap();
                assert!((v.hardening / a1 - 1.0).abs() < 2e-5, "{} A1 at {c}", preset.name);
                assert!((v.recovery / a2 - 1.0).abs() < 2e-5, "{} A2 at {c}", preset.name);
                assert!((v.recrystallization / a3 - 1.0).abs() < 2e-5, "{} A3 at {c}", preset.name);
                assert!(v.critical_density < v.hardening / v.recovery);
            }
        }
    }

    #[test]
    fn preset_constants() {
        let cu = MaterialPreset::copper().material;
        assert_eq!((cu.a8, cu.a9, cu.mu, cu.a11), (1.0, 0.0, 45_000.0, 1e4));
        let dp = MaterialPreset::dp_steel().material;
        assert_eq!((dp.a8, dp.a9, dp.mu, dp.a11), (0.45239, 0.13751, 75_000.0, 1e4));
        let c = MaterialPreset::dp_steel_at(1100.0).unwrap().composite.unwrap();
        assert!((c.hardening / c.recovery / 2.6318e13 - 1.0).abs() < 1e-4);
        assert!(MaterialPreset::copper_at(600.0).is_err());
    }

    #[test]
    fn names_resolve() {
        for name in MaterialPreset::NAMES {
            assert_eq!(MaterialPreset::by_name(name).unwrap().name, name);
        }
        assert!(MaterialPreset::by_name("brass").is_err());
    }

    #[test]
    fn key_value_round_trip() {
        for name in ["copper", "dp-steel-1200"] {
            let p = MaterialPreset::by_name(name).unwrap();
            let back = MaterialPreset::from_key_values(&p.to_key_values()).unwrap();
            assert_eq!(back.name, p.name);
            assert_eq!(back.material, p.material);
            let (a, b) = (back.composite, p.composite);
            assert_eq!(a.is_some(), b.is_some());
            if let (Some(a), Some(b)) = (a, b) {
                assert_eq!(a.hardening, b.hardening);
                assert!((a.temperature - b.temperature).abs() < 1e-9);
            }
        }
        let partial = format!("{}A1=1e14\n", MaterialPreset::copper().material.to_key_values());
        assert!(matches!(MaterialPreset::from_key_values(&partial), Err(Error::Format { .. })));
    }

    #[test]
    fn constant_track_reduces_to_constant_solver() {
        let preset = MaterialPreset::copper_at(575.0).unwrap();
        let track = preset.track(None).unwrap();
        let config = ScenarioConfig {
            steps: 200,
            detect_step: Some(1e-5),
            ..ScenarioConfig::default()
        };
        let result = run_scenario(&preset, &track, &config).unwrap();
        let model = preset.constant_model(&track.at(0.0), DEFAULT_RHO0);
        let t_cr = model.critical_time().unwrap();
        assert!((result.t_cr().unwrap() / t_cr - 1.0).abs() < 1e-12);
        let reference = solve_constant_model(&model, Method::Rk4, 200, 10, &SolverOptions::default()).unwrap();
        let scale = model.saturation();
        for ((_, _, _, a), (_, _, _, b)) in result.path.nodes().zip(reference.nodes()) {
            assert!((a - b).abs() <= 1e-10 * scale);
        }
        assert!((result.plateau / 4.8130e13 - 1.0).abs() < 1e-4);
    }

    #[test]
    fn idle_track_has_no_onset() {
        let preset = MaterialPreset::copper();
        let track = preset.track(Some(&samples(&[600.0, 600.0], &[0.0, 0.0], 0.2))).unwrap();
        assert_eq!(track.at(0.1).hardening, 0.0);
        let result = run_scenario(&preset, &track, &ScenarioConfig::default()).unwrap();
        assert_eq!(result.t_cr(), None);
        for w in result.rows.windows(2) {
            assert!(w[1].rho <= w[0].rho && w[1].rho >= 0.0);
        }
    }

    #[test]
    fn flow_stress_column() {
        let preset = MaterialPreset::copper();
        let track = preset.track(Some(&samples(&[600.0, 610.0], &[5.0, 5.0], 0.28))).unwrap();
        let config = ScenarioConfig {
            rho0: 0.0,
            ..ScenarioConfig::default()
        };
        let result = run_scenario(&preset, &track, &config).unwrap();
        assert_eq!(result.rows[0].sigma_f, preset.material.a7);
        for r in &result.rows {
            assert!(r.sigma_f >= 0.0);
            let expected = preset.material.flow_stress(r.rho.max(0.0)).unwrap();
            assert_eq!(r.sigma_f, expected);
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let preset = MaterialPreset::dp_steel();
        let track = preset
            .track(Some(&samples(&[1060.0, 1075.0, 1050.0], &[2.0, 12.0, 4.0], 0.28)))
            .unwrap();
        let result = run_scenario(&preset, &track, &ScenarioConfig { steps: 50, ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        result.write_csv(&mut buf).unwrap();
        assert_eq!(read_rows(buf.as_slice()).unwrap(), result.rows);
        let summary: serde_json::Value = serde_json::from_str(&result.summary_json()).unwrap();
        assert!(summary.get("t_cr").is_some() && summary.get("flags").is_some());
    }

    #[test]
    fn cooler_surface_recrystallizes_later() {
        let preset = MaterialPreset::copper();
        let center = preset
            .track(Some(&samples(&[600.0, 615.0, 625.0], &[8.0, 6.0, 3.0], 0.28)))
            .unwrap();
        let surface = center.with_temperature_shift(-100.0).unwrap();
        let config = ScenarioConfig {
            steps: 100,
            ..Default::default()
        };
        let c = run_scenario(&preset, &center, &config).unwrap();
        let s = run_scenario(&preset, &surface, &config).unwrap();
        let cmp = compare_lines(&c, &s);
        assert_eq!(cmp.first, Leading::Center, "{cmp}");
        assert_eq!(compare_lines(&c, &c).first, Leading::Tie);
    }

    #[test]
    fn missing_onset_is_reported() {
        let preset = MaterialPreset::copper();
        let center = preset.track(Some(&samples(&[600.0, 600.0], &[8.0, 8.0], 0.28))).unwrap();
        let c = run_scenario(&preset, &center, &ScenarioConfig::default()).unwrap();
        let short = run_scenario(
            &preset,
            &center,
            &ScenarioConfig {
                horizon: Some(1e-4),
                ..Default::default()
            },
        )
        .unwrap();
        let cmp = compare_lines(&c, &short);
        assert_eq!(cmp.first, Leading::Center);
        assert!(cmp.to_string().contains("no recrystallization within horizon"));
    }
}
