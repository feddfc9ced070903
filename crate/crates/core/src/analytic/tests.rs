use super::*;
use crate::coefficients::{CoefficientTrack, CoefficientValues};
use crate::model::TrackRates;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model(a8: f64, rho_cr: f64, a2: f64, a3: f64) -> ConstantModel {
    ConstantModel {
        hardening: 10.0,
        recovery: a2,
        recrystallization: a3,
        a8,
        rho0: 0.0,
        rho_cr,
    }
}

fn case_ii() -> ConstantModel {
    model(0.0, 4.0, 2.0, 1.0)
}

fn case_vii() -> ConstantModel {
    model(1.0, 9.0, 1.0, 0.9)
}

fn track(m: &ConstantModel, rate: f64) -> CoefficientTrack {
    CoefficientTrack::constant(CoefficientValues {
        hardening: m.hardening,
        recovery: m.recovery,
        recrystallization: m.recrystallization * rate,
        strain_rate: rate,
        temperature: 1000.0,
        critical_density: m.rho_cr,
    })
    .unwrap()
}

/// Plain explicit Euler for `ρ' = A₁ − A₂ρ − A₃ρ^{a₈}·ρ(t−τ)` on `intervals`
/// delay intervals, written out independently of the crate's integrators.
fn euler_oracle(m: &ConstantModel, n: usize, intervals: usize) -> Vec<f64> {
    let tau = m.critical_time().unwrap();
    let h = tau / n as f64;
    let mut y = vec![m.rho0; n * intervals + 1];
    for i in 0..n * intervals {
        let z = if i >= n { y[i - n] } else { 0.0 };
        let p = if m.a8 == 0.0 { 1.0 } else { y[i] };
        y[i + 1] = y[i] + h * (m.hardening - m.recovery * y[i] - m.recrystallization * p * z);
    }
    y
}

#[test]
fn closed_form_values() {
    assert!((t_cr_constant(&case_ii()).unwrap() - 0.804_718_956_217_050_2).abs() < 1e-15);
    assert!((t_cr_constant(&case_vii()).unwrap() - std::f64::consts::LN_10).abs() < 1e-15);
    assert!((t_cr_constant(&model(0.0, 1.0, 1.0, 0.9)).unwrap() - 0.105_360_515_657_826_3).abs() < 1e-15);
    assert!((phi0_constant(&case_ii(), 0.5).unwrap() - 3.160_602_794_142_788).abs() < 1e-14);
    assert_eq!(phi0_constant(&case_ii(), 0.0).unwrap(), 0.0);
    let t_cr = t_cr_constant(&case_ii()).unwrap();
    assert!((phi0_constant(&case_ii(), t_cr).unwrap() - 4.0).abs() < 4.0 * f64::EPSILON * 4.0);
    assert!(phi0_constant(&case_ii(), t_cr * 1.01).is_err());
}

#[test]
fn first_interval_matches_closed_form() {
    let m = case_ii();
    let cfg = AnalyticConfig::default();
    let sol = AnalyticSolution::constant(&m, 3, &cfg).unwrap();
    for i in 0..=20 {
        let t = sol.delay() * i as f64 / 20.0;
        assert_eq!(sol.eval(t), phi0_constant(&m, t).unwrap());
    }
    assert!((analytic_a8_0(&m, 0, 0.5, &cfg).unwrap() - 3.160_602_794_142_788).abs() < 1e-10);
}

#[test]
fn no_recrystallization_extends_linear_solution() {
    for a8 in [0.0, 1.0] {
        let m = model(a8, 4.0, 2.0, 0.0);
        let sol = AnalyticSolution::constant(&m, 2, &AnalyticConfig::default()).unwrap();
        for i in 0..=40 {
            let t = sol.horizon() * i as f64 / 40.0;
            let exact = 5.0 * (1.0 - (-2.0 * t).exp());
            assert!((sol.eval(t) - exact).abs() < 1e-13, "a8={a8} t={t}");
        }
    }
}

#[test]
fn table_agrees_with_literal_formula() {
    let cfg = AnalyticConfig::default();
    for m in [case_ii(), case_vii()] {
        let sol = AnalyticSolution::constant(&m, 2, &cfg).unwrap();
        let tau = sol.delay();
        for frac in [0.0, 0.13, 0.5, 0.77, 1.0] {
            let t = tau * (1.0 + frac);
            let direct = sol.eval_formula(1, t).unwrap();
            assert!((sol.eval(t) - direct).abs() < 1e-10, "t={t}");
        }
    }
}

#[test]
fn literal_formula_helpers_check_a8() {
    let cfg = AnalyticConfig::default();
    assert!(analytic_a8_1(&case_ii(), 1, 1.0, &cfg).is_err());
    assert!(analytic_a8_0(&case_vii(), 1, 3.0, &cfg).is_err());
    let t = 2.0 * case_vii().critical_time().unwrap();
    let v = analytic_a8_1(&case_vii(), 1, t, &cfg).unwrap();
    let sol = AnalyticSolution::constant(&case_vii(), 2, &cfg).unwrap();
    assert!((v - sol.eval(t)).abs() < 1e-10);
}

#[test]
fn a8_one_depth_is_capped() {
    let cfg = AnalyticConfig::default();
    assert!(AnalyticSolution::constant(&case_vii(), 3, &cfg).is_err());
    let wide = AnalyticConfig {
        max_intervals_a8_one: 4,
        ..cfg
    };
    assert_eq!(AnalyticSolution::constant(&case_vii(), 4, &wide).unwrap().intervals().len(), 4);
}

#[test]
fn matches_brute_force_euler() {
    let n = 1_000_000;
    for m in [case_ii(), case_vii()] {
        let oracle = euler_oracle(&m, n, 2);
        let sol = AnalyticSolution::constant(&m, 2, &AnalyticConfig::default()).unwrap();
        let tau = sol.delay();
        let worst = (0..=2 * n)
            .step_by(997)
            .chain([n, 2 * n])
            .map(|i| (oracle[i] - sol.eval(i as f64 * tau / n as f64)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-4, "worst {worst}");
    }
}

#[test]
fn residual_continuity_and_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = AnalyticConfig::default();
    let cases = [
        (model(0.0, 1.0, 1.0, 0.9), 10),
        (case_ii(), 10),
        (model(0.0, 9.0, 1.0, 0.9), 10),
        (model(1.0, 4.0, 2.0, 1.0), 2),
        (case_vii(), 2),
    ];
    for (m, count) in cases {
        let sol = AnalyticSolution::constant(&m, count, &cfg).unwrap();
        let tau = sol.delay();
        let h = 1e-6 * tau;
        for iv in sol.intervals() {
            for _ in 0..100 {
                let t = iv.start + tau * rng.gen_range(0.01..0.99);
                let fd = (iv.eval(t + h) - iv.eval(t - h)) / (2.0 * h);
                let y = iv.eval(t);
                let rhs = sol.rhs(t, y);
                assert!((fd - rhs).abs() <= 1e-4 * sol.rhs_scale(t, y), "t={t}");
                assert!(y >= -1e-9 && y <= m.saturation() + 1e-9);
            }
        }
        for w in sol.intervals().windows(2) {
            assert!((w[1].start_value() - w[0].end_value()).abs() < 1e-10);
            assert!((w[1].eval(w[1].start) - w[0].eval(w[0].end)).abs() < 1e-10);
        }
    }
}

#[test]
fn first_interval_is_increasing() {
    let m = case_ii();
    let sol = AnalyticSolution::constant(&m, 1, &AnalyticConfig::default()).unwrap();
    let vals: Vec<f64> = (0..=500).map(|i| sol.eval(sol.delay() * i as f64 / 500.0)).collect();
    assert!(vals.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn halving_tolerance_changes_little() {
    let coarse = AnalyticConfig::default();
    let fine = coarse.with_quadrature(coarse.quadrature.tightened());
    let a = AnalyticSolution::constant(&case_ii(), 10, &coarse).unwrap();
    let b = AnalyticSolution::constant(&case_ii(), 10, &fine).unwrap();
    for i in 0..=200 {
        let t = a.horizon() * i as f64 / 200.0;
        assert!((a.eval(t) - b.eval(t)).abs() < coarse.quadrature.abs_tol);
    }
    assert!(a.error_bound() < 1e-10);
}

#[test]
fn constant_track_reduces_to_constant_model() {
    let cfg = AnalyticConfig::default();
    for m in [case_ii(), case_vii()] {
        let tr = track(&m, 1.0);
        let rates = TrackRates::new(&tr, 0.0);
        let tau = m.critical_time().unwrap();
        let a = AnalyticSolution::constant(&m, 2, &cfg).unwrap();
        let b = AnalyticSolution::time_dependent(rates, m.a8, m.rho0, tau, 2, &cfg).unwrap();
        for i in 0..=100 {
            let t = 2.0 * tau * i as f64 / 100.0;
            assert!((a.eval(t) - b.eval(t)).abs() < 1e-11);
        }
        let v = analytic_timedep(rates, m.a8, m.rho0, tau, 1, 1.5 * tau, &cfg).unwrap();
        assert!((v - a.eval(1.5 * tau)).abs() < 1e-10);
    }
}

#[test]
fn phi0_timedep_reductions() {
    let q = QuadratureConfig::default();
    let m = case_ii();
    let tr = track(&m, 1.0);
    let rates = TrackRates::new(&tr, 0.0);
    assert!((phi0_timedep(&rates, 0.0, 0.5, &q).unwrap() - 3.160_602_794_142_788).abs() < 1e-10);

    let idle = CoefficientTrack::constant(CoefficientValues {
        hardening: 0.0,
        ..tr.at(0.0)
    })
    .unwrap();
    let decay = TrackRates::new(&idle, 0.0);
    let v = phi0_timedep(&decay, 3.0, 0.7, &q).unwrap();
    assert!((v - 3.0 * (-1.4f64).exp()).abs() < 1e-11);

    // tabulated track with a kink in A₂: compare with the panel tables
    let times = vec![0.0, 0.3, 1.0];
    let vals: Vec<CoefficientValues> = [2.0, 3.5, 1.0]
        .iter()
        .map(|&r| CoefficientValues { recovery: r, ..tr.at(0.0) })
        .collect();
    let kinked = CoefficientTrack::tabulated(times, vals).unwrap();
    let kr = TrackRates::new(&kinked, 0.0);
    let sol = AnalyticSolution::time_dependent(kr, 0.0, 0.0, 1.0, 1, &AnalyticConfig::default()).unwrap();
    for t in [0.1, 0.3, 0.45, 0.9] {
        assert!((phi0_timedep(&kr, 0.0, t, &q).unwrap() - sol.eval(t)).abs() < 1e-10);
    }
}

#[test]
fn t_cr_timedep_cases() {
    let cfg = AnalyticConfig::default();
    let m = case_ii();
    let tr = track(&m, 1.0);
    let rates = TrackRates::new(&tr, 0.0);
    let exact = m.critical_time().unwrap();
    let t = t_cr_timedep(&rates, 0.0, |_| 4.0, 5.0, &cfg).unwrap().t_cr().unwrap();
    assert!((t - exact).abs() < 1e-11);

    let at_start = t_cr_timedep(&rates, 2.0, |_| 1.999, 5.0, &cfg).unwrap();
    assert_eq!(at_start.t_cr(), Some(0.0));

    let fast = track(&m, 2.0);
    let fr = TrackRates::new(&fast, 0.0);
    let t2 = t_cr_timedep(&fr, 0.0, |_| 4.0, 5.0, &cfg).unwrap().t_cr().unwrap();
    assert!((t2 - 0.5 * exact).abs() < 1e-11);

    let none = t_cr_timedep(&rates, 0.0, |_| 6.0, 5.0, &cfg).unwrap();
    assert!(none.t_cr().is_none());
}

#[test]
fn doubled_strain_rate_is_a_time_change() {
    // with a₉ = 0 and A₃ scaled with ε̇ the solution is ρ₁(ε̇·t)
    let cfg = AnalyticConfig::default();
    for m in [case_ii(), case_vii()] {
        let tau = m.critical_time().unwrap();
        let base = AnalyticSolution::constant(&m, 2, &cfg).unwrap();
        let fast_track = track(&m, 2.0);
        let rates = TrackRates::new(&fast_track, 0.0);
        let fast = AnalyticSolution::time_dependent(rates, m.a8, m.rho0, 0.5 * tau, 2, &cfg).unwrap();
        for i in 0..=50 {
            let t = tau * i as f64 / 50.0;
            assert!((fast.eval(t) - base.eval(2.0 * t)).abs() < 1e-10);
        }
    }
}

#[test]
fn bernoulli_cases() {
    let times: Vec<f64> = (0..=100).map(|i| 0.1 * i as f64).collect();
    assert!(bernoulli_degenerate_check(2.0, 1.0, 0.0, &times).unwrap().iter().all(|&v| v == 0.0));
    let decay = bernoulli_degenerate_check(2.0, 0.0, 3.0, &times).unwrap();
    assert!((decay[10] - 3.0 * (-2.0f64).exp()).abs() < 1e-15);
    assert!(bernoulli_degenerate_check(2.0, 1.0, 3.0, &times).is_err());
}

#[test]
fn vanishing_hardening_shrinks_solution() {
    let cfg = AnalyticConfig::default();
    let mut prev = f64::INFINITY;
    for a1 in [1.0, 1e-2, 1e-4, 1e-6] {
        let m = ConstantModel {
            hardening: a1,
            recovery: 1.0,
            recrystallization: 0.5,
            a8: 0.0,
            rho0: 0.0,
            rho_cr: 0.5 * a1,
        };
        let sol = AnalyticSolution::constant(&m, 5, &cfg).unwrap();
        let sup = sol
            .intervals()
            .iter()
            .flat_map(|iv| (0..=50).map(move |i| iv.eval(iv.start + (iv.end - iv.start) * i as f64 / 50.0)))
            .fold(0.0, f64::max);
        assert!(sup < prev);
        prev = sup;
    }
    assert!(prev < 1e-5);
}
