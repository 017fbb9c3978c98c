//! Truncated univariate Taylor arithmetic, used for exact higher-order
//! derivatives of closed-form scalar functions (Wronskian evaluation).
//!
//! A `Taylor` holds coefficients c[0..=order] of the expansion at a point;
//! the k-th derivative is k! * c[k].

use super::{BinaryOp, Node, UnaryOp};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Taylor {
    pub coeffs: Vec<f64>,
}

impl Taylor {
    pub fn constant(v: f64, order: usize) -> Taylor {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = v;
        Taylor { coeffs }
    }

    pub fn variable(x0: f64, order: usize) -> Taylor {
        let mut t = Taylor::constant(x0, order);
        if order >= 1 {
            t.coeffs[1] = 1.0;
        }
        t
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// k-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        let mut fact = 1.0;
        for i in 2..=k {
            fact *= i as f64;
        }
        self.coeffs[k] * fact
    }

    fn zip(&self, other: &Taylor, f: impl Fn(f64, f64) -> f64) -> Taylor {
        Taylor {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }

    fn add(&self, other: &Taylor) -> Taylor {
        self.zip(other, |a, b| a + b)
    }

    fn sub(&self, other: &Taylor) -> Taylor {
        self.zip(other, |a, b| a - b)
    }

    fn neg(&self) -> Taylor {
        Taylor {
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }

    fn mul(&self, other: &Taylor) -> Taylor {
        let n = self.coeffs.len();
        let mut c = vec![0.0; n];
        for k in 0..n {
            let mut s = 0.0;
            for j in 0..=k {
                s += self.coeffs[j] * other.coeffs[k - j];
            }
            c[k] = s;
        }
        Taylor { coeffs: c }
    }

    fn div(&self, other: &Taylor) -> Result<Taylor> {
        if other.coeffs[0] == 0.0 {
            return Err(Error::Domain("series division by zero".into()));
        }
        let n = self.coeffs.len();
        let mut q = vec![0.0; n];
        for k in 0..n {
            let mut s = self.coeffs[k];
            for j in 0..k {
                s -= q[j] * other.coeffs[k - j];
            }
            q[k] = s / other.coeffs[0];
        }
        Ok(Taylor { coeffs: q })
    }

    /// Series of the derivative, one order shorter conceptually but padded.
    fn diff(&self) -> Taylor {
        let n = self.coeffs.len();
        let mut c = vec![0.0; n];
        for k in 1..n {
            c[k - 1] = self.coeffs[k] * k as f64;
        }
        Taylor { coeffs: c }
    }

    /// Antiderivative with constant term `c0`.
    fn integrate(&self, c0: f64) -> Taylor {
        let n = self.coeffs.len();
        let mut c = vec![0.0; n];
        c[0] = c0;
        for k in 1..n {
            c[k] = self.coeffs[k - 1] / k as f64;
        }
        Taylor { coeffs: c }
    }

    fn exp(&self) -> Taylor {
        let n = self.coeffs.len();
        let mut e = vec![0.0; n];
        e[0] = self.coeffs[0].exp();
        for k in 1..n {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * self.coeffs[j] * e[k - j];
            }
            e[k] = s / k as f64;
        }
        Taylor { coeffs: e }
    }

    fn log(&self) -> Result<Taylor> {
        if self.coeffs[0] <= 0.0 {
            return Err(Error::Domain(format!("log of non-positive {}", self.coeffs[0])));
        }
        let n = self.coeffs.len();
        let mut l = vec![0.0; n];
        l[0] = self.coeffs[0].ln();
        for k in 1..n {
            let mut s = k as f64 * self.coeffs[k];
            for j in 1..k {
                s -= j as f64 * l[j] * self.coeffs[k - j];
            }
            l[k] = s / (k as f64 * self.coeffs[0]);
        }
        Ok(Taylor { coeffs: l })
    }

    fn sqrt(&self) -> Result<Taylor> {
        if self.coeffs[0] < 0.0 {
            return Err(Error::Domain(format!("sqrt of negative {}", self.coeffs[0])));
        }
        if self.coeffs[0] == 0.0 {
            return Err(Error::Domain("sqrt series at a root is not smooth".into()));
        }
        let n = self.coeffs.len();
        let mut s = vec![0.0; n];
        s[0] = self.coeffs[0].sqrt();
        for k in 1..n {
            let mut acc = self.coeffs[k];
            for j in 1..k {
                acc -= s[j] * s[k - j];
            }
            s[k] = acc / (2.0 * s[0]);
        }
        Ok(Taylor { coeffs: s })
    }

    fn sin_cos(&self) -> (Taylor, Taylor) {
        let n = self.coeffs.len();
        let mut s = vec![0.0; n];
        let mut c = vec![0.0; n];
        s[0] = self.coeffs[0].sin();
        c[0] = self.coeffs[0].cos();
        for k in 1..n {
            let mut ds = 0.0;
            let mut dc = 0.0;
            for j in 1..=k {
                ds += j as f64 * self.coeffs[j] * c[k - j];
                dc += j as f64 * self.coeffs[j] * s[k - j];
            }
            s[k] = ds / k as f64;
            c[k] = -dc / k as f64;
        }
        (Taylor { coeffs: s }, Taylor { coeffs: c })
    }

    fn sinh_cosh(&self) -> (Taylor, Taylor) {
        let n = self.coeffs.len();
        let mut s = vec![0.0; n];
        let mut c = vec![0.0; n];
        s[0] = self.coeffs[0].sinh();
        c[0] = self.coeffs[0].cosh();
        for k in 1..n {
            let mut ds = 0.0;
            let mut dc = 0.0;
            for j in 1..=k {
                ds += j as f64 * self.coeffs[j] * c[k - j];
                dc += j as f64 * self.coeffs[j] * s[k - j];
            }
            s[k] = ds / k as f64;
            c[k] = dc / k as f64;
        }
        (Taylor { coeffs: s }, Taylor { coeffs: c })
    }

    /// b with b' = a' * g, b(x0) = f0; used for atan/asin/acos.
    fn from_ode(&self, g: &Taylor, f0: f64) -> Taylor {
        self.diff().mul(g).integrate(f0)
    }

    fn powi(&self, k: i32) -> Result<Taylor> {
        if k < 0 && self.coeffs[0] == 0.0 {
            return Err(Error::Domain("0 raised to a negative power".into()));
        }
        let order = self.order();
        let mut acc = Taylor::constant(1.0, order);
        for _ in 0..k.unsigned_abs() {
            acc = acc.mul(self);
        }
        if k < 0 {
            acc = Taylor::constant(1.0, order).div(&acc)?;
        }
        Ok(acc)
    }
}

pub(super) fn eval_taylor(node: &Node, x0: f64, order: usize) -> Result<Taylor> {
    Ok(match node {
        Node::Const(c) => Taylor::constant(*c, order),
        Node::Var(_) => Taylor::variable(x0, order),
        Node::Binary(op, a, b) => {
            let a = eval_taylor(a, x0, order)?;
            let b = eval_taylor(b, x0, order)?;
            match op {
                BinaryOp::Add => a.add(&b),
                BinaryOp::Sub => a.sub(&b),
                BinaryOp::Mul => a.mul(&b),
                BinaryOp::Div => a.div(&b)?,
            }
        }
        Node::PowInt(a, k) => eval_taylor(a, x0, order)?.powi(*k)?,
        Node::PowReal(a, r) => {
            let a = eval_taylor(a, x0, order)?;
            let l = a.log()?;
            Taylor {
                coeffs: l.coeffs.iter().map(|c| c * r).collect(),
            }
            .exp()
        }
        Node::Unary(op, a) => {
            let a = eval_taylor(a, x0, order)?;
            match op {
                UnaryOp::Neg => a.neg(),
                UnaryOp::Exp => a.exp(),
                UnaryOp::Log => a.log()?,
                UnaryOp::Sqrt => a.sqrt()?,
                UnaryOp::Sin => a.sin_cos().0,
                UnaryOp::Cos => a.sin_cos().1,
                UnaryOp::Tan => {
                    let (s, c) = a.sin_cos();
                    s.div(&c)?
                }
                UnaryOp::Sinh => a.sinh_cosh().0,
                UnaryOp::Cosh => a.sinh_cosh().1,
                UnaryOp::Tanh => {
                    let (s, c) = a.sinh_cosh();
                    s.div(&c)?
                }
                UnaryOp::Atan => {
                    let one = Taylor::constant(1.0, order);
                    let g = one.div(&one.add(&a.mul(&a)))?;
                    a.from_ode(&g, a.value().atan())
                }
                UnaryOp::Asin => {
                    if a.value().abs() >= 1.0 {
                        return Err(Error::Domain(format!("asin of {}", a.value())));
                    }
                    let one = Taylor::constant(1.0, order);
                    let g = one.div(&one.sub(&a.mul(&a)).sqrt()?)?;
                    a.from_ode(&g, a.value().asin())
                }
                UnaryOp::Acos => {
                    if a.value().abs() >= 1.0 {
                        return Err(Error::Domain(format!("acos of {}", a.value())));
                    }
                    let one = Taylor::constant(1.0, order);
                    let g = one.div(&one.sub(&a.mul(&a)).sqrt()?)?.neg();
                    a.from_ode(&g, a.value().acos())
                }
                UnaryOp::Abs => {
                    if a.value() > 0.0 {
                        a
                    } else if a.value() < 0.0 {
                        a.neg()
                    } else {
                        return Err(Error::Domain("abs series at 0 is not smooth".into()));
                    }
                }
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use std::collections::BTreeMap;

    fn series(src: &str, x0: f64, order: usize) -> Taylor {
        let e = Expr::parse(src, &["u"], &BTreeMap::new()).unwrap();
        e.evaluate_taylor(x0, order).unwrap()
    }

    #[test]
    fn exp_series_matches_closed_form() {
        let t = series("exp(u)", 0.3, 6);
        for k in 0..=6 {
            let expect = 0.3f64.exp();
            assert!((t.derivative(k) - expect).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn atan_derivatives() {
        // d/du atan(u) = 1/(1+u^2); second derivative = -2u/(1+u^2)^2
        let t = series("atan(u)", 0.5, 3);
        assert!((t.derivative(1) - 1.0 / 1.25).abs() < 1e-14);
        assert!((t.derivative(2) - (-1.0 / 1.25f64.powi(2))).abs() < 1e-13);
    }

    #[test]
    fn composite_tanh_atan() {
        // known series: tanh(atan(u)) = u - 2u^3/3 + 2u^5/3 + O(u^7)
        let t = series("tanh(atan(u))", 0.0, 5);
        assert!((t.coeffs[1] - 1.0).abs() < 1e-14);
        assert!((t.coeffs[3] + 2.0 / 3.0).abs() < 1e-13);
        assert!((t.coeffs[5] - 2.0 / 3.0).abs() < 1e-13);
    }
}
