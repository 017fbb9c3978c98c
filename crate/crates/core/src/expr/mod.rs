//! Scalar expression trees with exact forward-mode differentiation.
//!
//! All vector fields, switching functions, and closed-form reference data are
//! parsed into these trees. Evaluation is pure; trees are immutable after
//! parse, so they can be shared freely across threads.

mod parser;
mod taylor;

pub use parser::parse_expression;
pub use taylor::Taylor;

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
    Atan,
    Asin,
    Acos,
    Abs,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tan => "tan",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Sinh => "sinh",
            UnaryOp::Cosh => "cosh",
            UnaryOp::Tanh => "tanh",
            UnaryOp::Atan => "atan",
            UnaryOp::Asin => "asin",
            UnaryOp::Acos => "acos",
            UnaryOp::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
    /// Integer power, evaluated by repeated multiplication so jets stay exact at 0.
    PowInt(Box<Node>, i32),
    /// Real power, routed through exp(r * log(base)); base must be positive.
    PowReal(Box<Node>, f64),
}

/// A parsed expression over an ordered list of variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    variables: Vec<String>,
}

/// Value plus first partials with respect to every declared variable.
#[derive(Debug, Clone, PartialEq)]
pub struct JetValue {
    pub value: f64,
    pub partials: Vec<f64>,
}

impl Expr {
    pub fn new(root: Node, variables: Vec<String>) -> Self {
        Expr { root, variables }
    }

    /// Parse `source` over `variables`, with `constants` substituted at parse time.
    pub fn parse(
        source: &str,
        variables: &[&str],
        constants: &BTreeMap<String, f64>,
    ) -> Result<Expr> {
        parse_expression(source, variables, constants)
    }

    pub fn constant(value: f64, variables: &[&str]) -> Expr {
        Expr {
            root: Node::Const(value),
            variables: variables.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Evaluate at `point` (one entry per declared variable).
    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        self.check_arity(point.len())?;
        let v = eval_node(&self.root, point)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("non-finite value {v}")))
        }
    }

    /// Evaluate value and all first partials via forward-mode jets.
    pub fn evaluate_jet(&self, point: &[f64]) -> Result<JetValue> {
        self.check_arity(point.len())?;
        let jet = eval_jet(&self.root, point)?;
        if !jet.v.is_finite() || jet.d.iter().any(|p| !p.is_finite()) {
            return Err(Error::Domain("non-finite jet".into()));
        }
        Ok(JetValue {
            value: jet.v,
            partials: jet.d,
        })
    }

    /// Evaluate a degree-`order` Taylor jet in the single declared variable.
    pub fn evaluate_taylor(&self, x: f64, order: usize) -> Result<Taylor> {
        if self.variables.len() != 1 {
            return Err(Error::Dimension(format!(
                "taylor evaluation needs exactly one variable, expression has {}",
                self.variables.len()
            )));
        }
        taylor::eval_taylor(&self.root, x, order)
    }

    fn check_arity(&self, got: usize) -> Result<()> {
        if got != self.variables.len() {
            return Err(Error::Dimension(format!(
                "expression over {} variables evaluated with {} coordinates",
                self.variables.len(),
                got
            )));
        }
        Ok(())
    }

    /// Render the tree back to parseable text.
    pub fn unparse(&self) -> String {
        let mut s = String::new();
        write_node(&self.root, &self.variables, 0, &mut s);
        s
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.unparse())
    }
}

/// Row i holds the partials of `fields[i]`; dimensions (#fields) x (#vars).
pub fn jacobian(fields: &[Expr], point: &[f64]) -> Result<DMatrix<f64>> {
    let cols = point.len();
    let mut out = DMatrix::zeros(fields.len(), cols);
    for (i, f) in fields.iter().enumerate() {
        let jet = f.evaluate_jet(point)?;
        for (j, p) in jet.partials.iter().enumerate() {
            out[(i, j)] = *p;
        }
    }
    Ok(out)
}

fn eval_node(node: &Node, point: &[f64]) -> Result<f64> {
    Ok(match node {
        Node::Const(c) => *c,
        Node::Var(i) => point[*i],
        Node::Unary(op, a) => apply_unary(*op, eval_node(a, point)?)?,
        Node::Binary(op, a, b) => {
            let (a, b) = (eval_node(a, point)?, eval_node(b, point)?);
            match op {
                BinaryOp::Add => a + b,
                BinaryOp::Sub => a - b,
                BinaryOp::Mul => a * b,
                BinaryOp::Div => {
                    if b == 0.0 {
                        return Err(Error::Domain("division by zero".into()));
                    }
                    a / b
                }
            }
        }
        Node::PowInt(a, k) => powi(eval_node(a, point)?, *k)?,
        Node::PowReal(a, r) => {
            let a = eval_node(a, point)?;
            if a <= 0.0 {
                return Err(Error::Domain(format!("{a}^{r} with non-positive base")));
            }
            (r * a.ln()).exp()
        }
    })
}

fn apply_unary(op: UnaryOp, a: f64) -> Result<f64> {
    Ok(match op {
        UnaryOp::Neg => -a,
        UnaryOp::Sin => a.sin(),
        UnaryOp::Cos => a.cos(),
        UnaryOp::Tan => a.tan(),
        UnaryOp::Exp => a.exp(),
        UnaryOp::Log => {
            if a <= 0.0 {
                return Err(Error::Domain(format!("log of non-positive {a}")));
            }
            a.ln()
        }
        UnaryOp::Sqrt => {
            if a < 0.0 {
                return Err(Error::Domain(format!("sqrt of negative {a}")));
            }
            a.sqrt()
        }
        UnaryOp::Sinh => a.sinh(),
        UnaryOp::Cosh => a.cosh(),
        UnaryOp::Tanh => a.tanh(),
        UnaryOp::Atan => a.atan(),
        UnaryOp::Asin => {
            if !(-1.0..=1.0).contains(&a) {
                return Err(Error::Domain(format!("asin of {a}")));
            }
            a.asin()
        }
        UnaryOp::Acos => {
            if !(-1.0..=1.0).contains(&a) {
                return Err(Error::Domain(format!("acos of {a}")));
            }
            a.acos()
        }
        UnaryOp::Abs => a.abs(),
    })
}

fn powi(base: f64, k: i32) -> Result<f64> {
    if k < 0 && base == 0.0 {
        return Err(Error::Domain("0 raised to a negative power".into()));
    }
    let mut acc = 1.0;
    for _ in 0..k.unsigned_abs() {
        acc *= base;
    }
    Ok(if k < 0 { 1.0 / acc } else { acc })
}

// ---- forward-mode jets ----

#[derive(Clone)]
struct Jet {
    v: f64,
    d: Vec<f64>,
}

impl Jet {
    fn constant(v: f64, n: usize) -> Jet {
        Jet { v, d: vec![0.0; n] }
    }

    fn map_chain(&self, v: f64, dv: f64) -> Jet {
        Jet {
            v,
            d: self.d.iter().map(|p| p * dv).collect(),
        }
    }
}

fn eval_jet(node: &Node, point: &[f64]) -> Result<Jet> {
    let n = point.len();
    Ok(match node {
        Node::Const(c) => Jet::constant(*c, n),
        Node::Var(i) => {
            let mut d = vec![0.0; n];
            d[*i] = 1.0;
            Jet { v: point[*i], d }
        }
        Node::Unary(op, a) => {
            let a = eval_jet(a, point)?;
            unary_jet(*op, &a)?
        }
        Node::Binary(op, a, b) => {
            let a = eval_jet(a, point)?;
            let b = eval_jet(b, point)?;
            match op {
                BinaryOp::Add => Jet {
                    v: a.v + b.v,
                    d: a.d.iter().zip(&b.d).map(|(x, y)| x + y).collect(),
                },
                BinaryOp::Sub => Jet {
                    v: a.v - b.v,
                    d: a.d.iter().zip(&b.d).map(|(x, y)| x - y).collect(),
                },
                BinaryOp::Mul => jet_mul(&a, &b),
                BinaryOp::Div => {
                    if b.v == 0.0 {
                        return Err(Error::Domain("division by zero".into()));
                    }
                    let v = a.v / b.v;
                    let d = a
                        .d
                        .iter()
                        .zip(&b.d)
                        .map(|(da, db)| (da - v * db) / b.v)
                        .collect();
                    Jet { v, d }
                }
            }
        }
        Node::PowInt(a, k) => {
            let a = eval_jet(a, point)?;
            jet_powi(&a, *k, n)?
        }
        Node::PowReal(a, r) => {
            let a = eval_jet(a, point)?;
            if a.v <= 0.0 {
                return Err(Error::Domain(format!("{}^{r} with non-positive base", a.v)));
            }
            let v = (r * a.v.ln()).exp();
            a.map_chain(v, r * v / a.v)
        }
    })
}

fn jet_mul(a: &Jet, b: &Jet) -> Jet {
    Jet {
        v: a.v * b.v,
        d: a
            .d
            .iter()
            .zip(&b.d)
            .map(|(da, db)| da * b.v + a.v * db)
            .collect(),
    }
}

fn jet_powi(a: &Jet, k: i32, n: usize) -> Result<Jet> {
    if k < 0 && a.v == 0.0 {
        return Err(Error::Domain("0 raised to a negative power".into()));
    }
    let mut acc = Jet::constant(1.0, n);
    for _ in 0..k.unsigned_abs() {
        acc = jet_mul(&acc, a);
    }
    if k < 0 {
        let one = Jet::constant(1.0, n);
        let v = one.v / acc.v;
        let d = acc.d.iter().map(|da| -v * da / acc.v).collect();
        acc = Jet { v, d };
    }
    Ok(acc)
}

fn unary_jet(op: UnaryOp, a: &Jet) -> Result<Jet> {
    Ok(match op {
        UnaryOp::Neg => Jet {
            v: -a.v,
            d: a.d.iter().map(|p| -p).collect(),
        },
        UnaryOp::Sin => a.map_chain(a.v.sin(), a.v.cos()),
        UnaryOp::Cos => a.map_chain(a.v.cos(), -a.v.sin()),
        UnaryOp::Tan => {
            let t = a.v.tan();
            a.map_chain(t, 1.0 + t * t)
        }
        UnaryOp::Exp => {
            let e = a.v.exp();
            a.map_chain(e, e)
        }
        UnaryOp::Log => {
            if a.v <= 0.0 {
                return Err(Error::Domain(format!("log of non-positive {}", a.v)));
            }
            a.map_chain(a.v.ln(), 1.0 / a.v)
        }
        UnaryOp::Sqrt => {
            if a.v < 0.0 {
                return Err(Error::Domain(format!("sqrt of negative {}", a.v)));
            }
            let s = a.v.sqrt();
            a.map_chain(s, 0.5 / s)
        }
        UnaryOp::Sinh => a.map_chain(a.v.sinh(), a.v.cosh()),
        UnaryOp::Cosh => a.map_chain(a.v.cosh(), a.v.sinh()),
        UnaryOp::Tanh => {
            let t = a.v.tanh();
            a.map_chain(t, 1.0 - t * t)
        }
        UnaryOp::Atan => a.map_chain(a.v.atan(), 1.0 / (1.0 + a.v * a.v)),
        UnaryOp::Asin => {
            if a.v.abs() >= 1.0 {
                return Err(Error::Domain(format!("asin of {}", a.v)));
            }
            a.map_chain(a.v.asin(), 1.0 / (1.0 - a.v * a.v).sqrt())
        }
        UnaryOp::Acos => {
            if a.v.abs() >= 1.0 {
                return Err(Error::Domain(format!("acos of {}", a.v)));
            }
            a.map_chain(a.v.acos(), -1.0 / (1.0 - a.v * a.v).sqrt())
        }
        UnaryOp::Abs => {
            let sign = if a.v > 0.0 {
                1.0
            } else if a.v < 0.0 {
                -1.0
            } else {
                0.0
            };
            a.map_chain(a.v.abs(), sign)
        }
    })
}

// ---- unparse ----

// precedence levels: 0 add/sub, 1 mul/div, 2 unary minus, 3 power, 4 atom
fn write_node(node: &Node, vars: &[String], parent_prec: u8, out: &mut String) {
    let prec = node_prec(node);
    let need_paren = prec < parent_prec;
    if need_paren {
        out.push('(');
    }
    match node {
        Node::Const(c) => {
            if *c < 0.0 || c.is_sign_negative() {
                out.push_str(&format!("({c:?})"));
            } else {
                out.push_str(&format!("{c:?}"));
            }
        }
        Node::Var(i) => out.push_str(&vars[*i]),
        Node::Unary(UnaryOp::Neg, a) => {
            out.push('-');
            write_node(a, vars, 3, out);
        }
        Node::Unary(op, a) => {
            out.push_str(op.name());
            out.push('(');
            write_node(a, vars, 0, out);
            out.push(')');
        }
        Node::Binary(op, a, b) => {
            let (sym, lp, rp) = match op {
                BinaryOp::Add => ('+', 0, 0),
                BinaryOp::Sub => ('-', 0, 1),
                BinaryOp::Mul => ('*', 1, 1),
                BinaryOp::Div => ('/', 1, 2),
            };
            write_node(a, vars, lp, out);
            out.push(sym);
            write_node(b, vars, rp, out);
        }
        Node::PowInt(a, k) => {
            write_node(a, vars, 4, out);
            out.push('^');
            if *k < 0 {
                out.push_str(&format!("({k})"));
            } else {
                out.push_str(&format!("{k}"));
            }
        }
        Node::PowReal(a, r) => {
            write_node(a, vars, 4, out);
            out.push('^');
            if *r < 0.0 {
                out.push_str(&format!("({r:?})"));
            } else {
                out.push_str(&format!("{r:?}"));
            }
        }
    }
    if need_paren {
        out.push(')');
    }
}

fn node_prec(node: &Node) -> u8 {
    match node {
        Node::Const(_) | Node::Var(_) => 4,
        Node::Unary(UnaryOp::Neg, _) => 2,
        Node::Unary(..) => 4,
        Node::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 0,
        Node::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 1,
        Node::PowInt(..) | Node::PowReal(..) => 3,
    }
}

#[cfg(test)]
mod tests;
