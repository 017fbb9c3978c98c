//! Two-zone piecewise systems, seed manifolds, and the built-in model
//! families with their closed-form reference data.
//!
//! State layout is (x, y, z) with x in R^n, y in R^(m-n), z scalar; the
//! switching manifold is the graph z = g(x, y) and h(x, y, z) = z - g(x, y).

mod builtin;
mod h1;
mod spec;

pub use builtin::{builtin_model, builtin_names, Builtin, ClosedFormLibrary, LinearCoeffMap};
pub use h1::{check_h1, H1Report, H1Tols};
pub use spec::{ModelSpec, SeedSpec};

use crate::error::{Error, Result};
use crate::expr::{jacobian, Expr};
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;

/// Which smooth zone a field or trajectory segment belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn index(self) -> usize {
        match self {
            Side::Plus => 0,
            Side::Minus => 1,
        }
    }

    /// Sign of h on the open zone this side governs.
    pub fn h_sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Plus => "+",
            Side::Minus => "-",
        })
    }
}

/// A state split into its (x, y, z) blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePoint {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub z: f64,
}

impl StatePoint {
    pub fn from_flat(flat: &[f64], n: usize, m: usize) -> StatePoint {
        assert_eq!(flat.len(), m + 1, "state length must be m + 1");
        StatePoint {
            x: DVector::from_column_slice(&flat[..n]),
            y: DVector::from_column_slice(&flat[n..m]),
            z: flat[m],
        }
    }

    pub fn to_flat(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.x.len() + self.y.len() + 1);
        out.rows_mut(0, self.x.len()).copy_from(&self.x);
        out.rows_mut(self.x.len(), self.y.len()).copy_from(&self.y);
        out[self.x.len() + self.y.len()] = self.z;
        out
    }
}

/// Ordered state variable names: x (or x1..xn), y (or y1..), z.
pub fn state_var_names(n: usize, m: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(m + 1);
    if n == 1 {
        names.push("x".to_string());
    } else {
        names.extend((1..=n).map(|i| format!("x{i}")));
    }
    if m - n == 1 {
        names.push("y".to_string());
    } else {
        names.extend((1..=m - n).map(|i| format!("y{i}")));
    }
    names.push("z".to_string());
    names
}

/// Seed-parameter variable names: u (or u1..un).
pub fn seed_var_names(n: usize) -> Vec<String> {
    if n == 1 {
        vec!["u".to_string()]
    } else {
        (1..=n).map(|i| format!("u{i}")).collect()
    }
}

/// The two-zone vector field data X0, X1, optional R, and the switching graph g.
#[derive(Debug, Clone)]
pub struct PiecewiseSystem {
    n: usize,
    m: usize,
    x0: [Vec<Expr>; 2],
    x1: [Vec<Expr>; 2],
    r: Option<[Vec<Expr>; 2]>,
    g: Expr,
    params: BTreeMap<String, f64>,
    spec: ModelSpec,
}

impl PiecewiseSystem {
    pub(crate) fn from_parts(
        n: usize,
        m: usize,
        x0: [Vec<Expr>; 2],
        x1: [Vec<Expr>; 2],
        r: Option<[Vec<Expr>; 2]>,
        g: Expr,
        params: BTreeMap<String, f64>,
        spec: ModelSpec,
    ) -> PiecewiseSystem {
        PiecewiseSystem {
            n,
            m,
            x0,
            x1,
            r,
            g,
            params,
            spec,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// State dimension m + 1.
    pub fn dim(&self) -> usize {
        self.m + 1
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    /// The source description this system was built from.
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Rebuild with updated parameter bindings (coefficients included).
    pub fn with_params(&self, overrides: &BTreeMap<String, f64>) -> Result<PiecewiseSystem> {
        let mut spec = self.spec.clone();
        for (k, v) in overrides {
            spec.params.insert(k.clone(), *v);
        }
        let (system, _) = spec.build()?;
        Ok(system)
    }

    fn fields(&self, side: Side) -> (&[Expr], &[Expr]) {
        let i = side.index();
        (&self.x0[i], &self.x1[i])
    }

    /// X0^side at a flat state.
    pub fn eval_x0(&self, side: Side, state: &[f64]) -> Result<DVector<f64>> {
        let (x0, _) = self.fields(side);
        let mut out = DVector::zeros(self.dim());
        for (i, f) in x0.iter().enumerate() {
            out[i] = f.evaluate(state)?;
        }
        Ok(out)
    }

    /// X1^side at a flat state.
    pub fn eval_x1(&self, side: Side, state: &[f64]) -> Result<DVector<f64>> {
        let (_, x1) = self.fields(side);
        let mut out = DVector::zeros(self.dim());
        for (i, f) in x1.iter().enumerate() {
            out[i] = f.evaluate(state)?;
        }
        Ok(out)
    }

    /// Full field X0 + eps X1 + eps^2 R at a flat state.
    pub fn eval_field(&self, side: Side, state: &[f64], eps: f64) -> Result<DVector<f64>> {
        let mut out = self.eval_x0(side, state)?;
        if eps != 0.0 {
            out += self.eval_x1(side, state)? * eps;
            if let Some(r) = &self.r {
                let mut args = state.to_vec();
                args.push(eps);
                let rf = &r[side.index()];
                for (i, f) in rf.iter().enumerate() {
                    out[i] += eps * eps * f.evaluate(&args)?;
                }
            }
        }
        Ok(out)
    }

    /// Jacobian of X0^side with respect to the state.
    pub fn jacobian_x0(&self, side: Side, state: &[f64]) -> Result<DMatrix<f64>> {
        let (x0, _) = self.fields(side);
        jacobian(x0, state)
    }

    /// g(x, y) for a flat state's (x, y) block.
    pub fn g_value(&self, state: &[f64]) -> Result<f64> {
        self.g.evaluate(&state[..self.m])
    }

    /// h(x, y, z) = z - g(x, y).
    pub fn switching_value(&self, state: &[f64]) -> Result<f64> {
        Ok(state[self.m] - self.g_value(state)?)
    }

    /// grad h = (-dg/dx, -dg/dy, 1) at a flat state.
    pub fn grad_h(&self, state: &[f64]) -> Result<DVector<f64>> {
        let jet = self.g.evaluate_jet(&state[..self.m])?;
        let mut out = DVector::zeros(self.dim());
        for (i, p) in jet.partials.iter().enumerate() {
            out[i] = -p;
        }
        out[self.m] = 1.0;
        Ok(out)
    }

    /// dg/dy at the (x, y) block of a flat state, as a column of length m - n.
    pub fn dg_dy(&self, state: &[f64]) -> Result<DVector<f64>> {
        let jet = self.g.evaluate_jet(&state[..self.m])?;
        Ok(DVector::from_iterator(
            self.m - self.n,
            jet.partials[self.n..self.m].iter().copied(),
        ))
    }

    /// Lie derivative of h along X0^side at a flat state.
    pub fn lie_derivative(&self, side: Side, state: &[f64]) -> Result<f64> {
        Ok(self.grad_h(state)?.dot(&self.eval_x0(side, state)?))
    }

    /// Lie derivative of h along the full eps-perturbed field.
    pub fn lie_derivative_eps(&self, side: Side, state: &[f64], eps: f64) -> Result<f64> {
        Ok(self.grad_h(state)?.dot(&self.eval_field(side, state, eps)?))
    }
}

/// The seed manifold: a parameter box and the map u -> v(u).
#[derive(Debug, Clone)]
pub struct SeedManifold {
    pub v_box: Vec<(f64, f64)>,
    v_map: Vec<Expr>,
    pub label: String,
}

impl SeedManifold {
    pub(crate) fn new(v_box: Vec<(f64, f64)>, v_map: Vec<Expr>, label: String) -> Result<Self> {
        if v_box.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::InvalidModel("v_box must have positive volume".into()));
        }
        Ok(SeedManifold { v_box, v_map, label })
    }

    pub fn n(&self) -> usize {
        self.v_box.len()
    }

    /// v(u), the y-block of the seed point.
    pub fn v(&self, u: &[f64]) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(self.v_map.len());
        for (i, f) in self.v_map.iter().enumerate() {
            out[i] = f.evaluate(u)?;
        }
        Ok(out)
    }

    /// The on-manifold point (u, v(u), g(u, v(u))) as a flat state.
    pub fn seed_state(&self, system: &PiecewiseSystem, u: &[f64]) -> Result<DVector<f64>> {
        let mut flat = DVector::zeros(system.dim());
        for (i, ui) in u.iter().enumerate() {
            flat[i] = *ui;
        }
        let v = self.v(u)?;
        for i in 0..v.len() {
            flat[system.n() + i] = v[i];
        }
        let g = system.g_value(flat.as_slice())?;
        flat[system.m()] = g;
        Ok(flat)
    }

    /// Uniform grid of `nodes` points strictly inside the box (n = 1 only).
    pub fn interior_grid(&self, nodes: usize) -> Vec<f64> {
        assert_eq!(self.n(), 1, "interior_grid is for one-parameter seeds");
        let (lo, hi) = self.v_box[0];
        (1..=nodes)
            .map(|i| lo + (hi - lo) * i as f64 / (nodes as f64 + 1.0))
            .collect()
    }
}

#[cfg(test)]
mod tests;
