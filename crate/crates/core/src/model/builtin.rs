//! Built-in model families with closed-form reference data.
//!
//! All models are stored in post-coordinate-swap form, so the switching
//! manifold is the graph z = g(x, y) and the seed manifold is parametrized
//! by a single coordinate u.

use super::{ModelSpec, PiecewiseSystem, SeedManifold, SeedSpec};
use crate::error::{Error, Result};
use crate::expr::Expr;
use std::collections::BTreeMap;

/// Printed linear map from perturbation coefficients to the basis weights
/// L_i, together with the mixing weights of the scaled-Melnikov identity
/// scale(u) * M(u) = sum_i combo_i * L_i * basis_i(u).
#[derive(Debug, Clone)]
pub struct LinearCoeffMap {
    /// rows[i] lists (coefficient name, weight) pairs defining L_i.
    pub rows: Vec<Vec<(&'static str, f64)>>,
    pub combo: Vec<f64>,
}

impl LinearCoeffMap {
    pub fn l_values(&self, coeffs: &BTreeMap<String, f64>) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|(name, w)| w * coeffs.get(*name).copied().unwrap_or(0.0))
                    .sum()
            })
            .collect()
    }
}

/// Closed-form per-model data: return times, the scalar Pi2-beta, the
/// scaled-Melnikov basis and scale factor, and (where available) the
/// analytic flow and the printed coefficient maps.
#[derive(Debug, Clone)]
pub struct ClosedFormLibrary {
    /// tau+(u) > 0, in the seed variable u.
    pub tau_plus: Expr,
    /// tau-(u) < 0.
    pub tau_minus: Expr,
    /// Closed form of the scalar Pi2 . beta(u).
    pub beta: Expr,
    /// Basis functions f_i(u) spanning the scaled Melnikov function.
    pub basis: Vec<Expr>,
    /// Scale s(u), sign-definite on the seed box, with s * M in span(basis).
    pub scale: Expr,
    /// Analytic unperturbed flow per side, in variables (t, x, y, z).
    pub flow: Option<[Vec<Expr>; 2]>,
    /// Printed coefficient -> L map (piecewise-linear families only).
    pub l_map: Option<LinearCoeffMap>,
}

impl ClosedFormLibrary {
    /// Closed-form M(u) assembled from the printed L maps; available only
    /// when `l_map` is present.
    pub fn closed_melnikov(&self, coeffs: &BTreeMap<String, f64>, u: f64) -> Result<f64> {
        let lm = self
            .l_map
            .as_ref()
            .ok_or_else(|| Error::InvalidModel("no printed coefficient map".into()))?;
        let l = lm.l_values(coeffs);
        let mut num = 0.0;
        for ((w, li), f) in lm.combo.iter().zip(&l).zip(&self.basis) {
            num += w * li * f.evaluate(&[u])?;
        }
        Ok(num / self.scale.evaluate(&[u])?)
    }
}

/// A named built-in: source spec, closed forms, and the canonical ordering
/// of its perturbation coefficients.
#[derive(Debug, Clone)]
pub struct Builtin {
    pub name: String,
    pub spec: ModelSpec,
    pub closed: ClosedFormLibrary,
    pub coeff_names: Vec<String>,
}

impl Builtin {
    pub fn build(&self) -> Result<(PiecewiseSystem, SeedManifold)> {
        self.spec.build()
    }
}

pub fn builtin_names() -> &'static [&'static str] {
    &[
        "pwl-a",
        "pwl-b",
        "pwl-quadratic",
        "parab-flat",
        "parab-y",
        "parab-x2",
    ]
}

/// Construct a built-in by name; `params` override the model defaults
/// (perturbation coefficients, c, d, lambda).
pub fn builtin_model(name: &str, params: &BTreeMap<String, f64>) -> Result<Builtin> {
    let mut builtin = match name {
        "pwl-a" => pwl(PwlKind::A),
        "pwl-b" => pwl(PwlKind::B),
        "pwl-quadratic" => pwl(PwlKind::Quadratic),
        "parab-flat" => parab(ParabKind::Flat),
        "parab-y" => parab(ParabKind::Y),
        "parab-x2" => parab(ParabKind::X2),
        other => return Err(Error::UnknownModel(other.to_string())),
    };
    for (k, v) in params {
        if !builtin.spec.params.contains_key(k) {
            return Err(Error::MissingParam(format!(
                "`{k}` is not a parameter of {name}"
            )));
        }
        builtin.spec.params.insert(k.clone(), *v);
    }
    builtin.closed = match name {
        "pwl-a" => pwl_closed(PwlKind::A, &builtin.spec.params),
        "pwl-b" => pwl_closed(PwlKind::B, &builtin.spec.params),
        "pwl-quadratic" => pwl_closed(PwlKind::Quadratic, &builtin.spec.params),
        "parab-flat" => parab_closed(ParabKind::Flat, &builtin.spec.params),
        "parab-y" => parab_closed(ParabKind::Y, &builtin.spec.params),
        "parab-x2" => parab_closed(ParabKind::X2, &builtin.spec.params),
        _ => unreachable!(),
    };
    Ok(builtin)
}

fn u_expr(src: &str, params: &BTreeMap<String, f64>) -> Expr {
    Expr::parse(src, &["u"], params).expect("builtin closed form parses")
}

fn flow_exprs(rows: [&str; 3], params: &BTreeMap<String, f64>) -> Vec<Expr> {
    rows.iter()
        .map(|src| Expr::parse(src, &["t", "x", "y", "z"], params).expect("builtin flow parses"))
        .collect()
}

// ---------------- piecewise-linear families ----------------

#[derive(Clone, Copy, PartialEq)]
enum PwlKind {
    A,
    B,
    Quadratic,
}

fn pwl_coeff_names() -> Vec<String> {
    let mut names = Vec::with_capacity(24);
    for fam in ["alpha", "beta", "kappa"] {
        for i in 0..4 {
            for side in ["plus", "minus"] {
                names.push(format!("{fam}{i}_{side}"));
            }
        }
    }
    names
}

fn pwl_x1_rows(side: &str) -> Vec<String> {
    // swapped coordinates: row1 <- beta-row, row2 <- alpha-row, row3 <- kappa-row,
    // with x and y exchanged inside each row
    vec![
        format!("beta0_{side} + beta2_{side}*x + beta1_{side}*y + beta3_{side}*z"),
        format!("alpha0_{side} + alpha2_{side}*x + alpha1_{side}*y + alpha3_{side}*z"),
        format!("kappa0_{side} + kappa2_{side}*x + kappa1_{side}*y + kappa3_{side}*z"),
    ]
}

fn pwl(kind: PwlKind) -> Builtin {
    let mut params: BTreeMap<String, f64> =
        pwl_coeff_names().into_iter().map(|n| (n, 0.0)).collect();
    let (name, x0_plus, x0_minus, g, v_box) = match kind {
        PwlKind::A => (
            "pwl-a",
            vec!["-z - 1", "y", "x + y"],
            vec!["-z + 1", "y", "x + y"],
            "0".to_string(),
            [0.05, 3.0],
        ),
        PwlKind::B => (
            "pwl-b",
            vec!["z - 1", "y", "x + y"],
            vec!["z + 1", "y", "x + y"],
            "0".to_string(),
            [0.05, 0.95],
        ),
        PwlKind::Quadratic => {
            params.insert("c".to_string(), 1.0);
            params.insert("d".to_string(), 1.0);
            (
                "pwl-quadratic",
                vec!["-z - 1", "y", "x + y"],
                vec!["-z + 1", "y", "x + y"],
                "x^2 + c*x*y + d*y^2".to_string(),
                [2.05, 4.0],
            )
        }
    };
    let spec = ModelSpec {
        n: 1,
        m: 2,
        x0_plus: x0_plus.iter().map(|s| s.to_string()).collect(),
        x0_minus: x0_minus.iter().map(|s| s.to_string()).collect(),
        x1_plus: pwl_x1_rows("plus"),
        x1_minus: pwl_x1_rows("minus"),
        r_plus: None,
        r_minus: None,
        g,
        params: params.clone(),
        seed: SeedSpec {
            v_box: vec![v_box],
            v_map: vec!["0".to_string()],
            label: name.to_string(),
        },
    };
    let closed = pwl_closed(kind, &params);
    Builtin {
        name: name.to_string(),
        spec,
        closed,
        coeff_names: pwl_coeff_names(),
    }
}

fn pwl_closed(kind: PwlKind, params: &BTreeMap<String, f64>) -> ClosedFormLibrary {
    // analytic flows of the two linear families
    let flow_a_plus = [
        "(cos(t)*(2*x + y) + sin(t)*(y - 2*z - 2) - exp(t)*y)/2",
        "exp(t)*y",
        "(sin(t)*(2*x + y) + cos(t)*(2*z - y + 2) + exp(t)*y - 2)/2",
    ];
    let flow_a_minus = [
        "(cos(t)*(2*x + y) + sin(t)*(y - 2*z + 2) - exp(t)*y)/2",
        "exp(t)*y",
        "(sin(t)*(2*x + y) + cos(t)*(2*z - y - 2) + exp(t)*y + 2)/2",
    ];
    let flow_b_plus = [
        "(cosh(t)*(t*y + 2*x) + sinh(t)*((t - 1)*y + 2*(z - 1)))/2",
        "exp(t)*y",
        "(sinh(t)*(t*y + 2*x + y) + cosh(t)*(t*y + 2*z - 2) + 2)/2",
    ];
    let flow_b_minus = [
        "(cosh(t)*(t*y + 2*x) + sinh(t)*((t - 1)*y + 2*(z + 1)))/2",
        "exp(t)*y",
        "(sinh(t)*(t*y + 2*x + y) + cosh(t)*(t*y + 2*z + 2) - 2)/2",
    ];
    // artanh(u) written through log
    let artanh = "(log((1 + u)/(1 - u))/2)";
    match kind {
        PwlKind::A => ClosedFormLibrary {
            tau_plus: u_expr("2*atan(u)", params),
            tau_minus: u_expr("-2*atan(u)", params),
            beta: u_expr("2*sinh(2*atan(u))", params),
            basis: vec![
                u_expr("u", params),
                u_expr("(u^2 + 1)*atan(u)", params),
                u_expr("tanh(atan(u))", params),
            ],
            scale: u_expr("2*u", params),
            flow: Some([flow_exprs(flow_a_plus, params), flow_exprs(flow_a_minus, params)]),
            l_map: Some(LinearCoeffMap {
                rows: vec![
                    vec![
                        ("alpha0_minus", -1.0),
                        ("alpha0_plus", 1.0),
                        ("alpha3_minus", -1.0),
                        ("alpha3_plus", -1.0),
                        ("beta2_minus", 1.0),
                        ("beta2_plus", 1.0),
                        ("kappa0_minus", 2.0),
                        ("kappa0_plus", -2.0),
                        ("kappa3_minus", 1.0),
                        ("kappa3_plus", 1.0),
                    ],
                    vec![
                        ("alpha2_minus", 1.0),
                        ("alpha2_plus", 1.0),
                        ("alpha3_minus", -1.0),
                        ("alpha3_plus", -1.0),
                        ("beta2_minus", 2.0),
                        ("beta2_plus", 2.0),
                        ("kappa3_minus", 2.0),
                        ("kappa3_plus", 2.0),
                    ],
                    vec![
                        ("alpha0_minus", 2.0),
                        ("alpha0_plus", -2.0),
                        ("alpha2_minus", 1.0),
                        ("alpha2_plus", 1.0),
                        ("alpha3_minus", 1.0),
                        ("alpha3_plus", 1.0),
                    ],
                ],
                combo: vec![2.0, -1.0, 1.0],
            }),
        },
        PwlKind::B => ClosedFormLibrary {
            tau_plus: u_expr("log((1 + u)/(1 - u))", params),
            tau_minus: u_expr("log((1 - u)/(1 + u))", params),
            beta: u_expr("-4*u/(u^2 - 1)", params),
            basis: vec![
                u_expr("u", params),
                u_expr(&format!("(u^2 - 1)*{artanh}"), params),
                u_expr(&format!("u*(u^2 - 1)*{artanh}^2"), params),
            ],
            scale: u_expr("8*u", params),
            flow: Some([flow_exprs(flow_b_plus, params), flow_exprs(flow_b_minus, params)]),
            l_map: Some(LinearCoeffMap {
                rows: vec![
                    vec![
                        ("alpha0_minus", -4.0),
                        ("alpha0_plus", 4.0),
                        ("alpha2_minus", -1.0),
                        ("alpha2_plus", -1.0),
                        ("alpha3_minus", 3.0),
                        ("alpha3_plus", 3.0),
                        ("beta2_minus", -4.0),
                        ("beta2_plus", -4.0),
                        ("kappa0_minus", 8.0),
                        ("kappa0_plus", -8.0),
                        ("kappa3_minus", -4.0),
                        ("kappa3_plus", -4.0),
                    ],
                    vec![
                        ("alpha0_minus", 4.0),
                        ("alpha0_plus", -4.0),
                        ("alpha2_minus", 1.0),
                        ("alpha2_plus", 1.0),
                        ("alpha3_minus", -3.0),
                        ("alpha3_plus", -3.0),
                        ("beta2_minus", 4.0),
                        ("beta2_plus", 4.0),
                        ("kappa3_minus", 4.0),
                        ("kappa3_plus", 4.0),
                    ],
                    vec![
                        ("alpha2_minus", 1.0),
                        ("alpha2_plus", 1.0),
                        ("alpha3_minus", 1.0),
                        ("alpha3_plus", 1.0),
                    ],
                ],
                combo: vec![2.0, -2.0, 4.0],
            }),
        },
        PwlKind::Quadratic => {
            let tp = "atan(2*(u^3 + u)/(u^4 + u^2 + 1))";
            let tm = "(atan(2*u*(u^2 - 1)/(u^4 - 3*u^2 + 1)) - 2*pi)";
            let ep = format!("exp({tp})");
            let em = format!("exp({tm})");
            let diff = format!("({ep} - {em})");
            // shared bracket of f0, f2, f4
            let br = format!("({em}*({ep}*(2*(c - 1)*u + 1) - 1) - 2*(c - 1)*u - {ep} + 1)");
            let basis = vec![
                u_expr(&br, params),
                u_expr(&format!("u*{diff}"), params),
                u_expr(&format!("u^2*{br}"), params),
                u_expr(&format!("u^3*{diff}"), params),
                u_expr(
                    &format!(
                        "{tm}*(2*u^6 + u^4 - u^2 + 3)*{diff} - 2*pi*(u^2 - 3)*{br}"
                    ),
                    params,
                ),
                u_expr(&format!("u^5*{diff}"), params),
                u_expr(&format!("{tp}*(2*u^2 - 1)*(u^4 + 3*u^2 + 1)*{diff}"), params),
                u_expr(
                    &format!(
                        "pi*(2*u*(2*(c - 1)*u + 1)^2*{ep}*{em} - 2*u*(1 - 2*(c - 1)*u)^2)"
                    ),
                    params,
                ),
            ];
            ClosedFormLibrary {
                tau_plus: u_expr(tp, params),
                tau_minus: u_expr(tm, params),
                beta: u_expr(&diff, params),
                basis,
                scale: u_expr(
                    &format!("4*pi*u*(4*u^4 + 4*u^2 - 3)*{diff}"),
                    params,
                ),
                flow: Some([flow_exprs(flow_a_plus, params), flow_exprs(flow_a_minus, params)]),
                l_map: None,
            }
        }
    }
}

// ---------------- paraboloid families ----------------

#[derive(Clone, Copy, PartialEq)]
enum ParabKind {
    Flat,
    Y,
    X2,
}

/// Monomial exponents (i, j, k) for x^i y^j z^k, total degree <= 2.
pub(crate) const PARAB_MONOMIALS: [(usize, usize, usize); 10] = [
    (0, 0, 0),
    (1, 0, 0),
    (0, 1, 0),
    (0, 0, 1),
    (2, 0, 0),
    (1, 1, 0),
    (1, 0, 1),
    (0, 2, 0),
    (0, 1, 1),
    (0, 0, 2),
];

fn parab_coeff_names() -> Vec<String> {
    let mut names = Vec::with_capacity(60);
    for ell in 1..=3 {
        for (i, j, k) in PARAB_MONOMIALS {
            for side in ["plus", "minus"] {
                names.push(format!("p{ell}_{i}{j}{k}_{side}"));
            }
        }
    }
    names
}

/// One component of the swapped perturbation: original P_ell evaluated at
/// (x, z, y), i.e. monomial x^i z^j y^k carries coefficient p{ell}_{ijk}.
fn parab_x1_row(ell: usize, side: &str) -> String {
    let mut terms = Vec::new();
    for (i, j, k) in PARAB_MONOMIALS {
        let mut term = format!("p{ell}_{i}{j}{k}_{side}");
        for _ in 0..i {
            term.push_str("*x");
        }
        for _ in 0..j {
            term.push_str("*z");
        }
        for _ in 0..k {
            term.push_str("*y");
        }
        terms.push(term);
    }
    terms.join(" + ")
}

fn parab(kind: ParabKind) -> Builtin {
    let mut params: BTreeMap<String, f64> =
        parab_coeff_names().into_iter().map(|n| (n, 0.0)).collect();
    params.insert("lambda".to_string(), 1.0);
    let (name, g, v_map, v_box) = match kind {
        ParabKind::Flat => ("parab-flat", "0", "u^2", [0.5, 2.0]),
        ParabKind::Y => ("parab-y", "y", "(1 - sqrt(1 - 4*u^2))/2", [0.05, 0.24]),
        ParabKind::X2 => ("parab-x2", "x^2", "u^2 + u^4", [0.05, 0.95]),
    };
    let x0: Vec<String> = ["-z", "lambda*(x^2 + z^2 - y)", "x"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let spec = ModelSpec {
        n: 1,
        m: 2,
        x0_plus: x0.clone(),
        x0_minus: x0,
        x1_plus: (0..3).map(|r| parab_x1_row([1, 3, 2][r], "plus")).collect(),
        x1_minus: (0..3).map(|r| parab_x1_row([1, 3, 2][r], "minus")).collect(),
        r_plus: None,
        r_minus: None,
        g: g.to_string(),
        params: params.clone(),
        seed: SeedSpec {
            v_box: vec![v_box],
            v_map: vec![v_map.to_string()],
            label: name.to_string(),
        },
    };
    let closed = parab_closed(kind, &params);
    Builtin {
        name: name.to_string(),
        spec,
        closed,
        coeff_names: parab_coeff_names(),
    }
}

fn parab_closed(kind: ParabKind, params: &BTreeMap<String, f64>) -> ClosedFormLibrary {
    let flow_rows = [
        "x*cos(t) - z*sin(t)",
        "x^2 + z^2 + (y - x^2 - z^2)*exp(-lambda*t)",
        "z*cos(t) + x*sin(t)",
    ];
    let flow = Some([flow_exprs(flow_rows, params), flow_exprs(flow_rows, params)]);
    match kind {
        ParabKind::Flat => ClosedFormLibrary {
            tau_plus: u_expr("pi", params),
            tau_minus: u_expr("-pi", params),
            beta: u_expr("exp(-pi*lambda) - exp(pi*lambda)", params),
            basis: vec![
                u_expr("1", params),
                u_expr("u", params),
                u_expr("u^2", params),
                u_expr("u^3", params),
                u_expr("u^4", params),
            ],
            scale: u_expr("exp(-pi*lambda) - exp(pi*lambda)", params),
            flow,
            l_map: None,
        },
        ParabKind::Y => {
            let t1 = "acos(-sqrt(1 - 4*u^2))";
            let sq = "sqrt(1 - 4*u^2)";
            ClosedFormLibrary {
                tau_plus: u_expr(t1, params),
                tau_minus: u_expr(&format!("{t1} - 2*pi"), params),
                beta: u_expr(
                    &format!("-(exp(2*pi*lambda) - 1)*{sq}*exp(-lambda*{t1})"),
                    params,
                ),
                basis: vec![
                    u_expr("u", params),
                    u_expr("u^2", params),
                    u_expr("u^3", params),
                    u_expr(&format!("u*{sq}"), params),
                    u_expr(&format!("u^2*{t1}"), params),
                    u_expr(&format!("{sq} - 1"), params),
                    u_expr(&format!("({sq} - 1)*{t1}"), params),
                ],
                scale: u_expr(
                    &format!("(exp(2*pi*lambda) - 1)*{sq}*exp(-lambda*{t1})/(12*u)"),
                    params,
                ),
                flow,
                l_map: None,
            }
        }
        ParabKind::X2 => {
            // tau1 on the branch with tau+ > 0; the printed arctan itself is
            // used inside the basis, where either branch spans the same space
            let t1 = "(atan(2*u/(u^2 - 1)) + pi)";
            let a = "atan(2*u/(u^2 - 1))";
            ClosedFormLibrary {
                tau_plus: u_expr(t1, params),
                tau_minus: u_expr(&format!("{t1} - 2*pi"), params),
                beta: u_expr(
                    &format!("-(exp(2*pi*lambda) - 1)*exp(-lambda*{t1})"),
                    params,
                ),
                basis: vec![
                    u_expr("1", params),
                    u_expr("u^2", params),
                    u_expr("u^4", params),
                    u_expr("u^6", params),
                    u_expr("u^8", params),
                    u_expr("u^3*(1 + u^2)^2", params),
                    u_expr(&format!("u^3*(1 + u^2)^2*{a}"), params),
                    u_expr("u - 2*u^5 - u^7", params),
                    u_expr(&format!("(u - 2*u^5 - u^7)*{a}"), params),
                ],
                scale: u_expr(
                    &format!("(exp(2*pi*lambda) - 1)*exp(-lambda*{t1})/(6*(2*u^2 + 1))"),
                    params,
                ),
                flow,
                l_map: None,
            }
        }
    }
}
