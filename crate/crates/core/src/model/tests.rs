use super::*;
use approx::assert_relative_eq;
use std::collections::BTreeMap;

fn builtin(name: &str) -> (PiecewiseSystem, SeedManifold, Builtin) {
    let b = builtin_model(name, &BTreeMap::new()).unwrap();
    let (sys, seed) = b.build().unwrap();
    (sys, seed, b)
}

#[test]
fn switching_value_flat() {
    let (sys, _, _) = builtin("pwl-a");
    assert_eq!(sys.switching_value(&[1.0, 2.0, 0.5]).unwrap(), 0.5);
}

#[test]
fn switching_value_quadratic_seed() {
    // c = d = 0 puts the seed point (0, 3, 9) on z = x^2
    let mut params = BTreeMap::new();
    params.insert("c".to_string(), 0.0);
    params.insert("d".to_string(), 0.0);
    let b = builtin_model("pwl-quadratic", &params).unwrap();
    let (sys, _) = b.build().unwrap();
    assert_relative_eq!(sys.switching_value(&[3.0, 0.0, 9.0]).unwrap(), 0.0);
}

#[test]
fn paraboloid_seed_height() {
    let (sys, seed, _) = builtin("parab-x2");
    let u = 0.5;
    let p = seed.seed_state(&sys, &[u]).unwrap();
    assert_relative_eq!(p[0], u);
    assert_relative_eq!(p[1], u * u + u.powi(4), epsilon = 1e-15);
    assert_relative_eq!(p[2], u * u, epsilon = 1e-15);
    // above the flat variant's manifold by u^2
    let (flat, _, _) = builtin("parab-flat");
    assert_relative_eq!(flat.switching_value(p.as_slice()).unwrap(), u * u);
}

#[test]
fn lie_derivative_pwl_a_seed() {
    let (sys, seed, _) = builtin("pwl-a");
    for u in [0.2, 1.0, 2.5] {
        let p = seed.seed_state(&sys, &[u]).unwrap();
        let lie_p = sys.lie_derivative(Side::Plus, p.as_slice()).unwrap();
        let lie_m = sys.lie_derivative(Side::Minus, p.as_slice()).unwrap();
        // third field component x + y at (u, 0, 0)
        assert_relative_eq!(lie_p, u, epsilon = 1e-14);
        assert_relative_eq!(lie_m, u, epsilon = 1e-14);
        assert!(lie_p > 0.0);
    }
}

#[test]
fn lie_derivative_tangent_is_zero() {
    let (sys, _, _) = builtin("pwl-a");
    // X0 h = x + y; tangency along x + y = 0
    let lie = sys.lie_derivative(Side::Plus, &[1.5, -1.5, 0.0]).unwrap();
    assert_relative_eq!(lie, 0.0, epsilon = 1e-15);
}

#[test]
fn lie_derivative_matches_h_derivative_along_flow() {
    use crate::flow::{integrate_side, IntegratorOptions};
    let (sys, seed, _) = builtin("parab-y");
    let u = 0.15;
    let p = seed.seed_state(&sys, &[u]).unwrap();
    let lie = sys.lie_derivative(Side::Plus, p.as_slice()).unwrap();
    let opts = IntegratorOptions::default();
    let dt = 1e-6;
    let fwd = integrate_side(&sys, Side::Plus, &p, dt, 0.0, &opts).unwrap();
    let bwd = integrate_side(&sys, Side::Plus, &p, -dt, 0.0, &opts).unwrap();
    let hf = sys.switching_value(fwd.end_state().as_slice()).unwrap();
    let hb = sys.switching_value(bwd.end_state().as_slice()).unwrap();
    assert!((lie - (hf - hb) / (2.0 * dt)).abs() <= 1e-8);
}

#[test]
fn unknown_model_and_unknown_param() {
    assert!(builtin_model("nope", &BTreeMap::new()).is_err());
    let mut params = BTreeMap::new();
    params.insert("not_a_param".to_string(), 1.0);
    assert!(builtin_model("pwl-a", &params).is_err());
}

#[test]
fn closed_form_return_times() {
    let cases: [(&str, fn(f64) -> f64, f64); 3] = [
        ("pwl-a", |u| 2.0 * u.atan(), 1.0),
        ("pwl-b", |u| ((1.0 + u) / (1.0 - u)).ln(), 0.5),
        ("parab-flat", |_| std::f64::consts::PI, 1.2),
    ];
    for (name, tau, u) in cases {
        let (_, _, b) = builtin(name);
        assert_relative_eq!(
            b.closed.tau_plus.evaluate(&[u]).unwrap(),
            tau(u),
            epsilon = 1e-14
        );
    }
    // log 3 at x = 0.5
    let (_, _, b) = builtin("pwl-b");
    assert_relative_eq!(
        b.closed.tau_plus.evaluate(&[0.5]).unwrap(),
        3.0_f64.ln(),
        epsilon = 1e-14
    );
}

#[test]
fn seed_point_lies_on_manifold() {
    for name in builtin_names() {
        let (sys, seed, _) = builtin(name);
        for u in seed.interior_grid(20) {
            let p = seed.seed_state(&sys, &[u]).unwrap();
            let h = sys.switching_value(p.as_slice()).unwrap();
            assert!(h.abs() <= 1e-14, "{name} at u = {u}: h = {h}");
        }
    }
}

#[test]
fn model_spec_round_trips_through_json() {
    for name in builtin_names() {
        let (_, _, b) = builtin(name);
        let text = b.spec.to_json();
        let spec2 = ModelSpec::from_json(&text).unwrap();
        assert_eq!(b.spec.params, spec2.params);
        let (sys2, _) = spec2.build().unwrap();
        assert_eq!(sys2.n(), 1);
        assert_eq!(sys2.m(), 2);
    }
}

#[test]
fn corrupted_model_json_rejected_with_position() {
    let err = ModelSpec::from_json("{\"n\": 1, \"m\": }").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("line"), "message should locate the defect: {msg}");
}

#[test]
fn l_map_unit_alpha0_plus() {
    let (_, _, b) = builtin("pwl-a");
    let mut coeffs = BTreeMap::new();
    coeffs.insert("alpha0_plus".to_string(), 1.0);
    let l = b.closed.l_map.as_ref().unwrap().l_values(&coeffs);
    assert_eq!(l, vec![1.0, 0.0, -2.0]);
    // closed Melnikov from the printed map: M(u) = 1 - tanh(atan(u))/u
    let m1 = b.closed.closed_melnikov(&coeffs, 1.0).unwrap();
    assert_relative_eq!(
        m1,
        1.0 - std::f64::consts::FRAC_PI_4.tanh(),
        epsilon = 1e-14
    );
}

mod h1_checks {
    use super::*;
    use crate::flow::IntegratorOptions;

    #[test]
    fn pwl_a_at_unit_seed() {
        let (sys, seed, _) = builtin("pwl-a");
        let r = check_h1(&sys, &seed, &[1.0], &H1Tols::default(), &IntegratorOptions::default())
            .unwrap();
        assert!(r.passed, "{r:?}");
        assert_relative_eq!(r.tau_plus, std::f64::consts::FRAC_PI_2, epsilon = 1e-9);
        assert_relative_eq!(r.tau_minus, -std::f64::consts::FRAC_PI_2, epsilon = 1e-9);
        assert!(r.closure_gap <= 1e-9);
    }

    #[test]
    fn pwl_b_outside_crossing_set_fails() {
        let (sys, seed, _) = builtin("pwl-b");
        let r = check_h1(&sys, &seed, &[1.5], &H1Tols::default(), &IntegratorOptions::default())
            .unwrap();
        assert!(!r.passed);
        assert!(r.failure.is_some());
    }

    #[test]
    fn quadratic_return_time_matches_closed_form() {
        let (sys, seed, b) = builtin("pwl-quadratic");
        let u = 2.5;
        let r = check_h1(&sys, &seed, &[u], &H1Tols::default(), &IntegratorOptions::default())
            .unwrap();
        assert!(r.passed, "{r:?}");
        let tau = b.closed.tau_plus.evaluate(&[u]).unwrap();
        assert!((r.tau_plus - tau).abs() <= 1e-8);
    }

    #[test]
    fn grid_h1_and_return_time_oracles() {
        // every built-in passes H1 on a 20-node grid and matches its closed
        // forms for both return times
        for name in builtin_names() {
            let b = builtin_model(name, &BTreeMap::new()).unwrap();
            let (sys, seed) = b.build().unwrap();
            let tols = H1Tols::default();
            let opts = IntegratorOptions::default();
            for u in seed.interior_grid(20) {
                let r = check_h1(&sys, &seed, &[u], &tols, &opts).unwrap();
                assert!(r.passed, "{name} fails H1 at u = {u}: {r:?}");
                let tp = b.closed.tau_plus.evaluate(&[u]).unwrap();
                let tm = b.closed.tau_minus.evaluate(&[u]).unwrap();
                assert!(
                    (r.tau_plus - tp).abs() <= 1e-8,
                    "{name} tau+ at {u}: {} vs {tp}",
                    r.tau_plus
                );
                assert!(
                    (r.tau_minus - tm).abs() <= 1e-8,
                    "{name} tau- at {u}: {} vs {tm}",
                    r.tau_minus
                );
                // (d), (e): both sides positive at the seed, negative at the far point
                let [dp, dm, ep, em] = r.transversality;
                assert!(dp > 0.0 && dm > 0.0 && ep < 0.0 && em < 0.0, "{name} at {u}");
            }
        }
    }
}
