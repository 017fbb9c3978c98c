use super::*;
use crate::error::Error;
use approx::assert_relative_eq;
use std::collections::BTreeMap;

fn no_consts() -> BTreeMap<String, f64> {
    BTreeMap::new()
}

fn parse(src: &str, vars: &[&str]) -> Expr {
    Expr::parse(src, vars, &no_consts()).unwrap()
}

#[test]
fn precedence_matches_convention() {
    let e = parse("x + y*z", &["x", "y", "z"]);
    assert_eq!(e.evaluate(&[1.0, 2.0, 3.0]).unwrap(), 7.0);
    // ^ binds tighter than unary minus
    let e = parse("-x^2", &["x"]);
    assert_eq!(e.evaluate(&[3.0]).unwrap(), -9.0);
    // left association
    let e = parse("8 - 3 - 2", &[]);
    assert_eq!(e.evaluate(&[]).unwrap(), 3.0);
    let e = parse("12 / 3 / 2", &[]);
    assert_eq!(e.evaluate(&[]).unwrap(), 2.0);
    // ^ right association through the factor recursion
    let e = parse("2^3^2", &[]);
    assert_eq!(e.evaluate(&[]).unwrap(), 512.0);
}

#[test]
fn quadratic_switching_example() {
    let mut consts = BTreeMap::new();
    consts.insert("c".to_string(), 1.0);
    consts.insert("d".to_string(), 1.0);
    let e = Expr::parse("x^2 + c*x*y + d*y^2", &["x", "y"], &consts).unwrap();
    assert_eq!(e.evaluate(&[1.0, 2.0]).unwrap(), 7.0);
}

#[test]
fn bound_constants_parse() {
    let mut consts = BTreeMap::new();
    consts.insert("c".to_string(), 0.5);
    consts.insert("d".to_string(), -1.0);
    let e = Expr::parse("-d*x^2 - c*x*y - y^2 + z", &["x", "y", "z"], &consts).unwrap();
    let v = e.evaluate(&[1.0, 2.0, 3.0]).unwrap();
    assert_relative_eq!(v, 1.0 - 1.0 - 4.0 + 3.0, epsilon = 1e-15);
}

#[test]
fn malformed_input_reports_offset() {
    let err = Expr::parse("x +* y", &["x", "y"], &no_consts()).unwrap_err();
    match err {
        Error::Syntax { offset, .. } => assert_eq!(offset, 3),
        other => panic!("expected syntax error, got {other}"),
    }
}

#[test]
fn unknown_identifier_and_arity() {
    let err = Expr::parse("x + q", &["x"], &no_consts()).unwrap_err();
    assert!(matches!(err, Error::UnknownIdentifier { .. }));
    let err = Expr::parse("sin(x, x)", &["x"], &no_consts()).unwrap_err();
    assert!(matches!(err, Error::ArityMismatch { .. }));
}

#[test]
fn tanh_of_atan_value() {
    // tanh and atan compose transcendentally; tanh(atan(1)) = tanh(pi/4).
    let e = parse("tanh(atan(u))", &["u"]);
    let v = e.evaluate(&[1.0]).unwrap();
    assert_relative_eq!(v, (std::f64::consts::FRAC_PI_4).tanh(), epsilon = 1e-15);
    assert_relative_eq!(v, 0.6557942026326724, epsilon = 1e-13);
}

#[test]
fn log_of_negative_is_domain_error() {
    let e = parse("log(x)", &["x"]);
    assert!(matches!(e.evaluate(&[-1.0]), Err(Error::Domain(_))));
    assert!(matches!(e.evaluate(&[0.0]), Err(Error::Domain(_))));
}

#[test]
fn division_by_zero_is_domain_error() {
    let e = parse("1/x", &["x"]);
    assert!(matches!(e.evaluate(&[0.0]), Err(Error::Domain(_))));
}

#[test]
fn jet_hand_derivative() {
    let e = parse("x^2 + x*y + y^2", &["x", "y"]);
    let jet = e.evaluate_jet(&[1.0, 2.0]).unwrap();
    assert_eq!(jet.value, 7.0);
    assert_relative_eq!(jet.partials[0], 4.0, epsilon = 1e-14); // 2x + y
    assert_relative_eq!(jet.partials[1], 5.0, epsilon = 1e-14); // x + 2y
}

#[test]
fn jet_of_constant_expression() {
    let e = parse("3.5", &["x", "y"]);
    let jet = e.evaluate_jet(&[0.3, -2.0]).unwrap();
    assert_eq!(jet.value, 3.5);
    assert_eq!(jet.partials, vec![0.0, 0.0]);
}

fn central_diff(e: &Expr, point: &[f64], i: usize, h: f64) -> f64 {
    let mut hi = point.to_vec();
    let mut lo = point.to_vec();
    hi[i] += h;
    lo[i] -= h;
    (e.evaluate(&hi).unwrap() - e.evaluate(&lo).unwrap()) / (2.0 * h)
}

#[test]
fn jet_matches_finite_difference() {
    let e = parse("atan(2*u/(u^2 - 1))", &["u"]);
    let jet = e.evaluate_jet(&[2.0]).unwrap();
    let fd = central_diff(&e, &[2.0], 0, 1e-6);
    assert!((jet.partials[0] - fd).abs() <= 1e-8, "jet {} fd {}", jet.partials[0], fd);
}

#[test]
fn jet_finite_difference_sweep() {
    // representative expressions over randomized points in their domains
    let cases: Vec<(&str, Vec<&str>, fn(u: f64) -> Vec<f64>)> = vec![
        ("sin(x)*exp(y) + x*y^2", vec!["x", "y"], |u| vec![u, 0.3 + 0.2 * u]),
        ("sqrt(1 + x^2) * tanh(x)", vec!["x"], |u| vec![u]),
        ("log(2 + cos(x))", vec!["x"], |u| vec![u]),
        ("x^3 - 2*x^2 + x/(1 + x^2)", vec!["x"], |u| vec![u]),
        ("acos(x/3)*asin(x/3)", vec!["x"], |u| vec![u]),
    ];
    let mut t = 0.137_f64;
    for (src, vars, mk) in cases {
        let e = parse(src, &vars);
        for _ in 0..100 {
            t = (t * 16807.0).fract();
            let point = mk(2.0 * t - 1.0);
            let jet = e.evaluate_jet(&point).unwrap();
            for i in 0..point.len() {
                let fd = central_diff(&e, &point, i, 1e-6);
                let scale = jet.partials[i].abs().max(1.0);
                assert!(
                    (jet.partials[i] - fd).abs() / scale <= 1e-7,
                    "{src} at {point:?}: jet {} vs fd {fd}",
                    jet.partials[i]
                );
            }
        }
    }
}

#[test]
fn jacobian_of_linear_field_is_constant() {
    // field (x, -z - 1, x + y) has constant Jacobian
    let fields = vec![
        parse("x", &["x", "y", "z"]),
        parse("-z - 1", &["x", "y", "z"]),
        parse("x + y", &["x", "y", "z"]),
    ];
    let j = jacobian(&fields, &[0.3, -1.2, 2.0]).unwrap();
    let expect = [[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [1.0, 1.0, 0.0]];
    for r in 0..3 {
        for c in 0..3 {
            assert_eq!(j[(r, c)], expect[r][c]);
        }
    }
}

#[test]
fn jacobian_zero_field() {
    let fields = vec![parse("0", &["x", "y"]), parse("0", &["x", "y"])];
    let j = jacobian(&fields, &[1.0, 2.0]).unwrap();
    assert!(j.iter().all(|v| *v == 0.0));
}

#[test]
fn jacobian_paraboloid_drift() {
    // (-y, x, l*(x^2 + y^2 - z)) at (1, 0, 1), l = 1
    let mut consts = BTreeMap::new();
    consts.insert("l".to_string(), 1.0);
    let vars = ["x", "y", "z"];
    let fields = vec![
        Expr::parse("-y", &vars, &consts).unwrap(),
        Expr::parse("x", &vars, &consts).unwrap(),
        Expr::parse("l*(x^2 + y^2 - z)", &vars, &consts).unwrap(),
    ];
    let j = jacobian(&fields, &[1.0, 0.0, 1.0]).unwrap();
    let expect = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, -1.0]];
    for r in 0..3 {
        for c in 0..3 {
            assert_eq!(j[(r, c)], expect[r][c]);
        }
    }
}

#[test]
fn unparse_round_trip_evaluates_identically() {
    let sources = [
        "x + y*z",
        "-x^2 - y^2 + z",
        "tanh(atan(x)) / (1 + x^2)",
        "x^3 - 2*x^2 + x - 7",
        "(x - y)/(x + y + 3)",
        "sin(x)*cos(y) - exp(-x^2)",
        "sqrt(x^2 + 1)^3",
        "x^(-2) + x^0.5",
    ];
    let vars = ["x", "y", "z"];
    for src in sources {
        let e1 = parse(src, &vars);
        let text = e1.unparse();
        let e2 = Expr::parse(&text, &vars, &no_consts())
            .unwrap_or_else(|err| panic!("round trip of `{src}` -> `{text}`: {err}"));
        let mut t = 0.5_f64;
        for _ in 0..100 {
            t = (t * 16807.0).fract();
            let p = [2.0 * t - 1.0, t + 0.1, 1.5 - t];
            match (e1.evaluate(&p), e2.evaluate(&p)) {
                (Ok(a), Ok(b)) => assert!(
                    (a - b).abs() <= 1e-12 * a.abs().max(1.0),
                    "{src}: {a} vs {b}"
                ),
                (Err(_), Err(_)) => {}
                (a, b) => panic!("{src} at {p:?}: {a:?} vs {b:?}"),
            }
        }
    }
}

#[test]
fn integer_power_exact_at_zero() {
    let e = parse("x^3", &["x"]);
    let jet = e.evaluate_jet(&[0.0]).unwrap();
    assert_eq!(jet.value, 0.0);
    assert_eq!(jet.partials[0], 0.0);
    // real exponent requires positive base
    let e = parse("x^2.5", &["x"]);
    assert!(e.evaluate(&[-1.0]).is_err());
    assert_relative_eq!(e.evaluate(&[4.0]).unwrap(), 32.0, epsilon = 1e-12);
}

// fixed corpus of composed trees checked against hand derivatives
#[test]
fn jet_chain_rule_corpus() {
    let corpus: Vec<(&str, fn(f64) -> f64, fn(f64) -> f64)> = vec![
        ("sin(x^2)", |x| (x * x).sin(), |x| 2.0 * x * (x * x).cos()),
        (
            "exp(sin(x))*cos(x)",
            |x| x.sin().exp() * x.cos(),
            |x| x.sin().exp() * (x.cos() * x.cos() - x.sin()),
        ),
        (
            "tanh(x)/(1 + x^2)",
            |x| x.tanh() / (1.0 + x * x),
            |x| {
                let t = x.tanh();
                let d = 1.0 + x * x;
                ((1.0 - t * t) * d - t * 2.0 * x) / (d * d)
            },
        ),
        (
            "log(1 + exp(x))",
            |x| (1.0 + x.exp()).ln(),
            |x| x.exp() / (1.0 + x.exp()),
        ),
        (
            "sqrt(1 + sinh(x)^2)",
            |x| (1.0 + x.sinh() * x.sinh()).sqrt(),
            |x| x.sinh() * x.cosh() / (1.0 + x.sinh() * x.sinh()).sqrt(),
        ),
    ];
    for (src, f, df) in corpus {
        let e = parse(src, &["x"]);
        for i in 0..20 {
            let x = -1.5 + 0.15 * i as f64;
            let jet = e.evaluate_jet(&[x]).unwrap();
            assert_relative_eq!(jet.value, f(x), max_relative = 1e-13);
            assert_relative_eq!(jet.partials[0], df(x), max_relative = 1e-12, epsilon = 1e-13);
        }
    }
}
