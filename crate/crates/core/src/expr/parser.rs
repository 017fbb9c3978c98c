//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := "-" factor | power
//! power  := atom ("^" factor)?
//! atom   := NUMBER | IDENT | IDENT "(" expr ("," expr)* ")" | "(" expr ")"
//! ```
//!
//! Exponents must fold to a constant at parse time; identifiers resolve to a
//! declared variable first, then to a bound constant.

use super::{BinaryOp, Expr, Node, UnaryOp};
use crate::error::{Error, Result};
use std::collections::BTreeMap;

pub fn parse_expression(
    source: &str,
    variables: &[&str],
    constants: &BTreeMap<String, f64>,
) -> Result<Expr> {
    let mut p = Parser {
        src: source.as_bytes(),
        pos: 0,
        variables,
        constants,
    };
    p.skip_ws();
    let root = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(Expr::new(
        root,
        variables.iter().map(|s| s.to_string()).collect(),
    ))
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    variables: &'a [&'a str],
    constants: &'a BTreeMap<String, f64>,
}

impl<'a> Parser<'a> {
    fn syntax(&self, message: &str) -> Error {
        Error::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, byte: u8) -> bool {
        if self.peek() == Some(byte) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            self.skip_ws();
            if self.eat(b'+') {
                let rhs = self.term()?;
                lhs = Node::Binary(BinaryOp::Add, Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                lhs = Node::Binary(BinaryOp::Sub, Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.factor()?;
        loop {
            self.skip_ws();
            if self.eat(b'*') {
                let rhs = self.factor()?;
                lhs = Node::Binary(BinaryOp::Mul, Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'/') {
                let rhs = self.factor()?;
                lhs = Node::Binary(BinaryOp::Div, Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Node> {
        self.skip_ws();
        if self.eat(b'-') {
            let inner = self.factor()?;
            return Ok(Node::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        self.skip_ws();
        if self.eat(b'^') {
            let at = self.pos;
            let exp = self.factor()?;
            let value = const_fold(&exp).ok_or_else(|| Error::Syntax {
                offset: at,
                message: "exponent must be a constant".to_string(),
            })?;
            if value.fract() == 0.0 && value.abs() <= 64.0 {
                return Ok(Node::PowInt(Box::new(base), value as i32));
            }
            return Ok(Node::PowReal(Box::new(base), value));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            _ => Err(self.syntax("expected number, identifier, or `(`")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_digit() || c == b'.')
        {
            self.pos += 1;
        }
        if self.peek().is_some_and(|c| c == b'e' || c == b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.peek().is_some_and(|c| c == b'+' || c == b'-') {
                self.pos += 1;
            }
            if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                // not an exponent after all (e.g. `2*eps`): back off
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>().map(Node::Const).map_err(|_| Error::Syntax {
            offset: start,
            message: format!("invalid number `{text}`"),
        })
    }

    fn ident(&mut self) -> Result<Node> {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        self.skip_ws();
        if self.peek() == Some(b'(') {
            let op = function_op(name).ok_or_else(|| Error::UnknownIdentifier {
                name: name.to_string(),
                offset: start,
            })?;
            self.pos += 1;
            let mut args = vec![self.expr()?];
            self.skip_ws();
            while self.eat(b',') {
                args.push(self.expr()?);
                self.skip_ws();
            }
            if !self.eat(b')') {
                return Err(self.syntax("expected `)` after function arguments"));
            }
            if args.len() != 1 {
                return Err(Error::ArityMismatch {
                    name: name.to_string(),
                    offset: start,
                    expected: 1,
                    got: args.len(),
                });
            }
            return Ok(Node::Unary(op, Box::new(args.pop().unwrap())));
        }
        if let Some(idx) = self.variables.iter().position(|v| *v == name) {
            return Ok(Node::Var(idx));
        }
        if let Some(value) = self.constants.get(name) {
            return Ok(Node::Const(*value));
        }
        match name {
            "pi" => Ok(Node::Const(std::f64::consts::PI)),
            "e" => Ok(Node::Const(std::f64::consts::E)),
            _ => Err(Error::UnknownIdentifier {
                name: name.to_string(),
                offset: start,
            }),
        }
    }
}

fn function_op(name: &str) -> Option<UnaryOp> {
    Some(match name {
        "sin" => UnaryOp::Sin,
        "cos" => UnaryOp::Cos,
        "tan" => UnaryOp::Tan,
        "exp" => UnaryOp::Exp,
        "log" | "ln" => UnaryOp::Log,
        "sqrt" => UnaryOp::Sqrt,
        "sinh" => UnaryOp::Sinh,
        "cosh" => UnaryOp::Cosh,
        "tanh" => UnaryOp::Tanh,
        "atan" | "arctan" => UnaryOp::Atan,
        "asin" | "arcsin" => UnaryOp::Asin,
        "acos" | "arccos" => UnaryOp::Acos,
        "abs" => UnaryOp::Abs,
        _ => return None,
    })
}

fn const_fold(node: &Node) -> Option<f64> {
    match node {
        Node::Const(c) => Some(*c),
        Node::Var(_) => None,
        Node::Unary(UnaryOp::Neg, a) => const_fold(a).map(|v| -v),
        Node::Unary(op, a) => {
            let v = const_fold(a)?;
            super::apply_unary(*op, v).ok()
        }
        Node::Binary(op, a, b) => {
            let (a, b) = (const_fold(a)?, const_fold(b)?);
            Some(match op {
                BinaryOp::Add => a + b,
                BinaryOp::Sub => a - b,
                BinaryOp::Mul => a * b,
                BinaryOp::Div => a / b,
            })
        }
        Node::PowInt(a, k) => {
            let a = const_fold(a)?;
            super::powi(a, *k).ok()
        }
        Node::PowReal(a, r) => {
            let a = const_fold(a)?;
            (a > 0.0).then(|| (r * a.ln()).exp())
        }
    }
}
