mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use disloc_core::analytic::{AnalyticConfig, AnalyticSolution};
use disloc_core::coefficients::{read_track_file, CoefficientTrack, CoefficientValues};
use disloc_core::harness::{self, CaseLabel, RunOptions, TestCase, ORACLE_STEPS};
use disloc_core::integrators::{
    detect_critical_time, detect_t_cr, solve_constant_model, solve_full_model, CriticalTime, FullModelRun,
    PathFlags,
};
use disloc_core::scenarios::{compare_lines, run_scenario, MaterialPreset, ScenarioConfig, ScenarioResult};
use disloc_core::{ConstantModel, Error, Method, SolverOptions};

const EXIT_NUMERICAL: u8 = 2;
const EXIT_INPUT: u8 = 3;

/// Solvers for the dislocation-density equation with a recrystallization
/// delay.
#[derive(Parser)]
#[command(name = "disloc", version, args_override_self = true)]
struct Cli {
    /// Flat key=value file of flags; explicit flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the constant-coefficient model and write the path.
    Solve(SolveArgs),
    /// Evaluate the semi-analytic solution.
    Analytic(AnalyticArgs),
    /// Critical time, in closed form and by numerical detection.
    Tcr(TcrArgs),
    /// Worst-case errors and empirical orders over an N ladder.
    Convergence(ConvergenceArgs),
    /// Classify solutions over a range of A3.
    Stability(StabilityArgs),
    /// Run a material preset along a process track.
    Scenario(ScenarioArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Base parameters from a test case (i..vii); other flags override them.
    #[arg(long, value_parser = parse_case)]
    case: Option<CaseLabel>,
    #[arg(long = "A1")]
    a1: Option<f64>,
    #[arg(long = "A2")]
    a2: Option<f64>,
    #[arg(long = "A3")]
    a3: Option<f64>,
    #[arg(long)]
    a8: Option<f64>,
    #[arg(long)]
    rho0: Option<f64>,
    #[arg(long = "rho-cr")]
    rho_cr: Option<f64>,
}

impl ModelArgs {
    fn overridden(&self) -> bool {
        [self.a1, self.a2, self.a3, self.a8, self.rho0, self.rho_cr]
            .iter()
            .any(Option::is_some)
    }

    fn model(&self, default: CaseLabel) -> ConstantModel {
        let base = TestCase::standard(self.case.unwrap_or(default)).model;
        ConstantModel {
            hardening: self.a1.unwrap_or(base.hardening),
            recovery: self.a2.unwrap_or(base.recovery),
            recrystallization: self.a3.unwrap_or(base.recrystallization),
            a8: self.a8.unwrap_or(base.a8),
            rho0: self.rho0.unwrap_or(base.rho0),
            rho_cr: self.rho_cr.unwrap_or(base.rho_cr),
        }
    }

    fn name(&self, default: CaseLabel) -> String {
        if self.overridden() {
            "custom".into()
        } else {
            self.case.unwrap_or(default).to_string()
        }
    }
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Directory for output files.
    #[arg(long, env = "DISLOC_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value = "explicit-euler", value_parser = parse_method)]
    method: Method,
    /// Steps per delay interval.
    #[arg(long = "N", default_value_t = 1000)]
    n: usize,
    /// Horizon in delay intervals.
    #[arg(long, default_value_t = 10)]
    intervals: usize,
    /// End time when the density never reaches the critical value.
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct AnalyticArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Intervals to construct; 10 for a8 = 0 and 2 for a8 = 1 by default.
    #[arg(long)]
    intervals: Option<usize>,
    /// Output points per interval.
    #[arg(long, default_value_t = 100)]
    points: usize,
    /// Absolute quadrature tolerance.
    #[arg(long, default_value_t = 1e-12)]
    abs_tol: f64,
    /// Relative quadrature tolerance.
    #[arg(long, default_value_t = 1e-10)]
    rel_tol: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct TcrArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Material preset; with --track the onset is detected along the track.
    #[arg(long)]
    preset: Option<String>,
    /// Process track CSV with header t,T_C,eps_dot.
    #[arg(long)]
    track: Option<PathBuf>,
    #[arg(long, default_value_t = 1e4)]
    track_rho0: f64,
    /// Search step; horizon·1e-5 by default.
    #[arg(long)]
    step: Option<f64>,
    /// Search horizon.
    #[arg(long, default_value_t = 100.0)]
    horizon: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Comma-separated methods: euler, beuler, rk4.
    #[arg(long, value_delimiter = ',', default_value = "euler,beuler,rk4", value_parser = parse_method)]
    methods: Vec<Method>,
    /// Comma-separated steps per interval; by default 10..10^5, and
    /// 10..10^3 for RK4.
    #[arg(long, value_delimiter = ',')]
    ladder: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    intervals: usize,
    /// Skip the oracle comparison beyond the analytic window.
    #[arg(long)]
    no_tail: bool,
    #[arg(long, default_value_t = ORACLE_STEPS)]
    oracle_steps: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct StabilityArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Explicit comma-separated A3 values.
    #[arg(long = "A3-values", value_delimiter = ',')]
    a3_values: Vec<f64>,
    #[arg(long = "A3-min", default_value_t = 0.0)]
    a3_min: f64,
    #[arg(long = "A3-max", default_value_t = 6.0)]
    a3_max: f64,
    #[arg(long, default_value_t = 13)]
    count: usize,
    #[arg(long = "N", default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    intervals: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Preset name, e.g. copper, dp-steel, copper-575.
    #[arg(long, conflicts_with = "preset_file")]
    preset: Option<String>,
    /// Preset in key=value form.
    #[arg(long)]
    preset_file: Option<PathBuf>,
    /// Process track CSV with header t,T_C,eps_dot.
    #[arg(long, conflicts_with = "compare")]
    track: Option<PathBuf>,
    /// Center and surface track files to compare.
    #[arg(long, num_args = 2, value_names = ["CENTER", "SURFACE"])]
    compare: Option<Vec<PathBuf>>,
    #[arg(long, default_value_t = disloc_core::scenarios::DEFAULT_RHO0)]
    rho0: f64,
    #[arg(long, default_value = "rk4", value_parser = parse_method)]
    method: Method,
    #[arg(long = "N", default_value_t = 1000)]
    n: usize,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    detect_step: Option<f64>,
    #[command(flatten)]
    out: OutArgs,
}

fn parse_case(s: &str) -> Result<CaseLabel, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure of a command with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_INPUT },
            message: e.to_string(),
        }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

type CmdResult = Result<(), Failure>;

/// Files of one command, written only after every computation succeeded.
struct Outputs {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn new(out: &OutArgs) -> Self {
        Outputs {
            dir: out.out_dir.clone(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    fn add_json<T: Serialize>(&mut self, name: &str, value: &T) {
        let mut text = serde_json::to_string_pretty(value).expect("serializable summary");
        text.push('\n');
        self.add(name, text.into_bytes());
    }

    fn write(self) -> CmdResult {
        fs::create_dir_all(&self.dir)
            .map_err(|e| input_error(format!("cannot create {}: {e}", self.dir.display())))?;
        for (name, bytes) in &self.files {
            let path = self.dir.join(name);
            fs::write(&path, bytes).map_err(|e| input_error(format!("cannot write {}: {e}", path.display())))?;
            eprintln!("wrote {}", path.display());
        }
        Ok(())
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> disloc_core::Result<()>) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

#[derive(Serialize)]
struct SolveSummary {
    case: String,
    model: ConstantModel,
    method: Method,
    steps: usize,
    t_cr: Option<f64>,
    horizon: f64,
    min: f64,
    max: f64,
    final_value: f64,
    flags: PathFlags,
}

fn cmd_solve(a: &SolveArgs) -> CmdResult {
    let model = a.model.model(CaseLabel::Ii);
    if a.n == 0 || a.intervals == 0 {
        return Err(input_error("N and intervals must be at least 1"));
    }
    let (path, t_cr) = match model.critical_time() {
        Ok(t_cr) => (
            solve_constant_model(&model, a.method, a.n, a.intervals, &SolverOptions::default())?,
            Some(t_cr),
        ),
        // Without a reachable threshold the whole horizon is one interval.
        Err(_) if unreachable_threshold(&model) => {
            let track = constant_track(&model)?;
            let run = FullModelRun::new(model.a8, 0.0, model.rho0, a.horizon, a.method, a.n);
            let solution = solve_full_model(&track, &run)?;
            (solution.path, solution.critical.t_cr())
        }
        Err(e) => return Err(e.into()),
    };
    let mut out = Outputs::new(&a.out);
    out.add("solve.csv", csv_bytes(|b| path.write_csv(b))?);
    out.add_json(
        "solve.json",
        &SolveSummary {
            case: a.model.name(CaseLabel::Ii),
            model,
            method: a.method,
            steps: a.n,
            t_cr,
            horizon: path.grid.horizon,
            min: path.min(),
            max: path.max(),
            final_value: path.final_value(),
            flags: path.flags,
        },
    );
    out.write()
}

/// Valid parameters except that `ρ_cr` cannot be reached from below.
fn unreachable_threshold(m: &ConstantModel) -> bool {
    m.hardening >= 0.0
        && m.recovery > 0.0
        && m.recrystallization >= 0.0
        && (0.0..=1.0).contains(&m.a8)
        && m.rho0 >= 0.0
        && m.rho0 < m.rho_cr
        && m.rho_cr >= m.saturation()
}

fn constant_track(m: &ConstantModel) -> Result<CoefficientTrack, Failure> {
    Ok(CoefficientTrack::constant(CoefficientValues {
        hardening: m.hardening,
        recovery: m.recovery,
        recrystallization: m.recrystallization,
        strain_rate: 1.0,
        temperature: 293.15,
        critical_density: m.rho_cr,
    })?)
}

#[derive(Serialize)]
struct AnalyticSummary {
    case: String,
    model: ConstantModel,
    t_cr: f64,
    intervals: usize,
    horizon: f64,
    error_bound: f64,
}

fn cmd_analytic(a: &AnalyticArgs) -> CmdResult {
    let model = a.model.model(CaseLabel::Ii);
    if model.a8 != 0.0 && model.a8 != 1.0 {
        return Err(input_error("semi-analytic solutions exist for a8 = 0 and a8 = 1 only"));
    }
    if a.points == 0 {
        return Err(input_error("points must be at least 1"));
    }
    let intervals = a.intervals.unwrap_or(if model.a8 == 0.0 { 10 } else { 2 });
    let mut cfg = AnalyticConfig::default();
    cfg.quadrature.abs_tol = a.abs_tol;
    cfg.quadrature.rel_tol = a.rel_tol;
    cfg.max_intervals_a8_one = cfg.max_intervals_a8_one.max(intervals);
    let sol = AnalyticSolution::constant(&model, intervals, &cfg)?;
    let mut csv = String::from("interval,t,rho\n");
    for (n, iv) in sol.intervals().iter().enumerate() {
        let first = if n == 0 { 0 } else { 1 };
        for i in first..=a.points {
            let t = iv.start + (iv.end - iv.start) * i as f64 / a.points as f64;
            csv.push_str(&format!("{n},{t:.16e},{:.16e}\n", iv.eval(t)));
        }
    }
    let mut out = Outputs::new(&a.out);
    out.add("analytic.csv", csv.into_bytes());
    out.add_json(
        "analytic.json",
        &AnalyticSummary {
            case: a.model.name(CaseLabel::Ii),
            model,
            t_cr: sol.delay(),
            intervals,
            horizon: sol.horizon(),
            error_bound: sol.error_bound(),
        },
    );
    out.write()
}

#[derive(Serialize)]
struct TcrSummary {
    source: String,
    closed_form: Option<f64>,
    detected: CriticalTime,
}

fn cmd_tcr(a: &TcrArgs) -> CmdResult {
    let step = a.step.unwrap_or(a.horizon * 1e-5);
    let summary = match (&a.preset, &a.track) {
        (Some(name), Some(track)) => {
            let preset = MaterialPreset::by_name(name)?;
            let samples = read_track_file(track)?;
            let track = preset.track(Some(&samples))?;
            let horizon = track.domain().map(|d| d.1).unwrap_or(a.horizon);
            let detected = detect_t_cr(&track, preset.material.a9, a.track_rho0, a.step.unwrap_or(horizon * 1e-5), horizon)?;
            TcrSummary {
                source: preset.name,
                closed_form: None,
                detected,
            }
        }
        (None, None) => {
            let model = a.model.model(CaseLabel::Ii);
            let closed = model.critical_time()?;
            let detected = detect_critical_time(&model, |_| model.rho_cr, model.rho0, step, a.horizon)?;
            TcrSummary {
                source: a.model.name(CaseLabel::Ii),
                closed_form: Some(closed),
                detected,
            }
        }
        _ => return Err(input_error("--preset and --track go together")),
    };
    println!("{}", serde_json::to_string_pretty(&summary).expect("serializable"));
    let mut out = Outputs::new(&a.out);
    out.add_json("tcr.json", &summary);
    out.write()
}

fn cmd_convergence(a: &ConvergenceArgs) -> CmdResult {
    if a.methods.is_empty() {
        return Err(input_error("no methods given"));
    }
    let label = a.model.case.unwrap_or(CaseLabel::Ii);
    let mut case = TestCase::standard(label);
    case.model = a.model.model(label);
    case.intervals = a.intervals;
    let options = RunOptions {
        oracle_steps: a.oracle_steps,
        tail: !a.no_tail,
        ..RunOptions::default()
    };
    let mut report = if a.ladder.is_empty() {
        harness::run_case_default(&case, &a.methods, &options)?
    } else {
        harness::run_case(&case, &a.methods, &a.ladder, &options)?
    };
    report.case = a.model.name(label);
    let table = report.to_table();
    print!("{table}");
    let mut out = Outputs::new(&a.out);
    out.add("convergence.csv", csv_bytes(|b| report.write_csv(b))?);
    out.add("convergence.txt", table.into_bytes());
    out.write()
}

fn cmd_stability(a: &StabilityArgs) -> CmdResult {
    let base = a.model.model(CaseLabel::V);
    let values = if a.a3_values.is_empty() {
        harness::linspace(a.a3_min, a.a3_max, a.count)
    } else {
        a.a3_values.clone()
    };
    if values.is_empty() {
        return Err(input_error("no A3 values"));
    }
    let entries = harness::stability_scan(&base, &values, a.n, a.intervals)?;
    let mut csv = String::from("A3,ratio,class,sign_changes,growth,min,max\n");
    println!("{:>10} {:>8} {:<22} {:>6} {:>8}", "A3", "A3/A2", "class", "signs", "growth");
    for e in &entries {
        let growth = e.growth.map(|g| format!("{g}")).unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            e.a3, e.ratio, e.class, e.sign_changes, growth, e.min, e.max
        ));
        println!(
            "{:>10.4} {:>8.4} {:<22} {:>6} {:>8}",
            e.a3,
            e.ratio,
            e.class.as_str(),
            e.sign_changes,
            e.growth.map(|g| format!("{g:.4}")).unwrap_or_else(|| "-".into())
        );
    }
    let mut out = Outputs::new(&a.out);
    out.add("stability.csv", csv.into_bytes());
    out.write()
}

fn scenario_files(out: &mut Outputs, stem: &str, r: &ScenarioResult) -> CmdResult {
    out.add(&format!("{stem}.csv"), csv_bytes(|b| r.write_csv(b))?);
    out.add_json(&format!("{stem}.json"), &r.summary());
    Ok(())
}

fn load_scenario(preset: &MaterialPreset, track: Option<&Path>, config: &ScenarioConfig) -> Result<ScenarioResult, Failure> {
    let track = match track {
        Some(p) => preset.track(Some(&read_track_file(p)?))?,
        None => preset.track(None)?,
    };
    Ok(run_scenario(preset, &track, config)?)
}

fn cmd_scenario(a: &ScenarioArgs) -> CmdResult {
    let preset = match (&a.preset, &a.preset_file) {
        (Some(name), None) => MaterialPreset::by_name(name)?,
        (None, Some(path)) => MaterialPreset::read_file(path)?,
        _ => return Err(input_error("give --preset or --preset-file")),
    };
    let config = ScenarioConfig {
        rho0: a.rho0,
        method: a.method,
        steps: a.n,
        horizon: a.horizon,
        detect_step: a.detect_step,
        options: SolverOptions::default(),
    };
    let mut out = Outputs::new(&a.out);
    match &a.compare {
        Some(paths) => {
            let center = load_scenario(&preset, Some(&paths[0]), &config)?;
            let surface = load_scenario(&preset, Some(&paths[1]), &config)?;
            let cmp = compare_lines(&center, &surface);
            println!("{cmp}");
            scenario_files(&mut out, "center", &center)?;
            scenario_files(&mut out, "surface", &surface)?;
            out.add("compare.txt", format!("{cmp}\n").into_bytes());
            out.add_json("compare.json", &cmp);
        }
        None => {
            let result = load_scenario(&preset, a.track.as_deref(), &config)?;
            println!("{}", result.summary_json());
            scenario_files(&mut out, "scenario", &result)?;
        }
    }
    out.write()
}

fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Analytic(a) => cmd_analytic(a),
        Command::Tcr(a) => cmd_tcr(a),
        Command::Convergence(a) => cmd_convergence(a),
        Command::Stability(a) => cmd_stability(a),
        Command::Scenario(a) => cmd_scenario(a),
    }
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => {
            let _ = std::io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
