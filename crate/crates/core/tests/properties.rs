use disloc_core::analytic::{AnalyticConfig, AnalyticSolution};
use disloc_core::harness::{
    empirical_order, run_case, stability_scan, worst_case_error, CaseLabel, Oscillation, RunOptions, TestCase,
};
use disloc_core::integrators::{explicit_euler, solve_constant_model, DdeProblem, Method, SolverOptions};
use disloc_core::model::ConstantModel;
use disloc_core::scenarios::{read_rows, write_rows, ScenarioRow};
use proptest::prelude::*;

fn stable_model() -> impl Strategy<Value = ConstantModel> {
    (1.0f64..20.0, 0.5f64..3.0, 0.0f64..0.95, prop::bool::ANY, 0.05f64..0.95).prop_map(
        |(a1, a2, ratio, nonlinear, frac)| {
            let a8 = if nonlinear { 1.0 } else { 0.0 };
            let sat = a1 / a2;
            // for a₈ = 1 the damping scales with ρ, so keep A₃·sat below A₂
            let a3 = if nonlinear { ratio * a2 / sat } else { ratio * a2 };
            ConstantModel {
                hardening: a1,
                recovery: a2,
                recrystallization: a3,
                a8,
                rho0: 0.0,
                rho_cr: frac * sat,
            }
        },
    )
}

fn method() -> impl Strategy<Value = Method> {
    prop::sample::select(Method::ALL.to_vec())
}

fn ramp(steps: usize) -> disloc_core::SolutionPath {
    let p = DdeProblem::new(|_: f64, _: f64, _: f64| 1.0, 1.0, 0.0, 3);
    explicit_euler(&p, steps).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sup_norm_is_nonnegative_and_subadditive(c1 in -5.0f64..5.0, c2 in -5.0f64..5.0, w in 0.1f64..3.0) {
        let path = ramp(40);
        let f = |t: f64| c1 * (w * t).sin();
        let g = |t: f64| c2 * (w * t).cos();
        let ef = worst_case_error(&path, |t| t - f(t));
        let eg = worst_case_error(&path, |t| t - g(t));
        let efg = worst_case_error(&path, |t| t - f(t) - g(t));
        prop_assert!(ef >= 0.0 && eg >= 0.0);
        prop_assert!(efg <= ef + eg + 1e-12);
        let exact: std::collections::HashMap<u64, f64> = path.nodes().map(|(_, _, t, y)| (t.to_bits(), y)).collect();
        prop_assert_eq!(worst_case_error(&path, |t| exact[&t.to_bits()]), 0.0);
    }

    #[test]
    fn orders_recover_power_laws(p in 0.5f64..5.0, c in 1e-3f64..1e3) {
        let e: Vec<(usize, f64)> = [10usize, 30, 100, 300].iter().map(|&n| (n, c / (n as f64).powf(p))).collect();
        for o in empirical_order(&e).unwrap() {
            prop_assert!((o.unwrap() - p).abs() < 1e-9);
        }
    }

    #[test]
    fn stable_models_stay_bounded(model in stable_model(), method in method()) {
        let tau = model.critical_time().unwrap();
        let n = 1_000;
        let path = solve_constant_model(&model, method, n, 10, &SolverOptions::default()).unwrap();
        let h = tau / n as f64;
        let sat = model.saturation();
        prop_assert!(path.min() >= -10.0 * h * sat, "min {}", path.min());
        prop_assert!(path.max() <= sat * (1.0 + 10.0 * h), "max {} sat {}", path.max(), sat);
    }

    #[test]
    fn analytic_joints_are_continuous(model in stable_model()) {
        let intervals = if model.a8 == 0.0 { 6 } else { 2 };
        let sol = AnalyticSolution::constant(&model, intervals, &AnalyticConfig::default()).unwrap();
        for w in sol.intervals().windows(2) {
            prop_assert!((w[1].start_value() - w[0].end_value()).abs() < 1e-10);
        }
        let sat = model.saturation();
        for iv in sol.intervals() {
            for i in 0..=20 {
                let t = iv.start + (iv.end - iv.start) * i as f64 / 20.0;
                let y = sol.eval(t);
                prop_assert!(y >= -1e-9 && y <= sat + 1e-9);
            }
        }
    }

    #[test]
    fn no_recrystallization_is_monotone(model in stable_model()) {
        let out = stability_scan(&model, &[0.0], 200, 10).unwrap();
        prop_assert_eq!(out[0].class, Oscillation::MonotoneSaturating);
        prop_assert_eq!(out[0].sign_changes, 0);
    }

    #[test]
    fn scenario_rows_round_trip(values in prop::collection::vec(prop::array::uniform8(-1e20f64..1e20), 1..20)) {
        let rows: Vec<ScenarioRow> = values
            .iter()
            .map(|v| ScenarioRow {
                t: v[0],
                rho: v[1],
                sigma_f: v[2],
                a1: v[3],
                a2: v[4],
                a3: v[5],
                temperature: v[6],
                strain_rate: v[7],
            })
            .collect();
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        prop_assert_eq!(read_rows(buf.as_slice()).unwrap(), rows);
    }
}

#[test]
fn errors_do_not_grow_along_the_ladder() {
    let ladder = [100, 1_000, 10_000];
    let options = RunOptions {
        tail: false,
        ..RunOptions::default()
    };
    for label in CaseLabel::ALL {
        let report = run_case(
            &TestCase::standard(label),
            &[Method::ExplicitEuler, Method::BackwardEuler],
            &ladder,
            &options,
        )
        .unwrap();
        for m in [Method::ExplicitEuler, Method::BackwardEuler] {
            let e = report.errors(m);
            assert!(e.windows(2).all(|w| w[1].1 <= w[0].1), "({label}) {m}: {e:?}");
        }
    }
}
