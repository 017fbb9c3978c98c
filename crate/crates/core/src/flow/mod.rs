//! Event-located integration of the smooth sides, fundamental solution
//! matrices, and the first-order response terms omega and Y.
//!
//! Backward integration is forward integration of the time-reversed field;
//! all public times are physical (signed).

mod rk;

pub use rk::{DenseStep, IntegratorOptions, Solution, StepControl};

use crate::error::{Error, Result};
use crate::model::{PiecewiseSystem, Side};
use nalgebra::{DMatrix, DVector};

/// |h| required at a located event.
pub const EVENT_TOL: f64 = 1e-12;
/// Default transversality floor for |X0 h| at crossings.
pub const TOL_TRANSVERSAL: f64 = 1e-6;

/// One smooth arc of a trajectory, with dense output.
#[derive(Debug, Clone)]
pub struct TrajectorySegment {
    pub side: Side,
    pub eps: f64,
    /// Physical end time (signed; negative for backward arcs).
    pub t_end: f64,
    direction: f64,
    solution: Solution,
}

impl TrajectorySegment {
    /// State at physical time `t` between 0 and `t_end`.
    pub fn eval(&self, t: f64) -> DVector<f64> {
        self.solution.eval(t * self.direction)
    }

    pub fn end_state(&self) -> &DVector<f64> {
        &self.solution.final_y
    }

    /// Accepted-step boundary times, in increasing physical order.
    pub fn times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = std::iter::once(0.0)
            .chain(self.solution.steps.iter().map(|s| s.t_end() * self.direction))
            .collect();
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts
    }

    pub fn states(&self) -> Vec<DVector<f64>> {
        self.times().iter().map(|t| self.eval(*t)).collect()
    }

    pub fn n_steps(&self) -> usize {
        self.solution.n_steps
    }
}

/// A located crossing of the switching manifold.
#[derive(Debug, Clone)]
pub struct ReturnEvent {
    /// Physical event time (signed).
    pub tau: f64,
    pub state: DVector<f64>,
    /// Lie derivative of h along the integrated field at the event.
    pub transversal_speed: f64,
}

/// Integrate one side's eps-perturbed field for a signed duration.
pub fn integrate_side(
    system: &PiecewiseSystem,
    side: Side,
    p0: &DVector<f64>,
    t_end: f64,
    eps: f64,
    opts: &IntegratorOptions,
) -> Result<TrajectorySegment> {
    let dir = if t_end < 0.0 { -1.0 } else { 1.0 };
    let rhs = |_t: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
        Ok(system.eval_field(side, y.as_slice(), eps)? * dir)
    };
    let solution = rk::integrate_dense(rhs, p0, t_end.abs(), opts, |_, _| {
        Ok(StepControl::Continue)
    })?;
    Ok(TrajectorySegment {
        side,
        eps,
        t_end,
        direction: dir,
        solution,
    })
}

/// Search direction for a first return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

/// Locate the first transversal return to the switching manifold.
///
/// `p0` must lie on the manifold and depart transversally; the initial
/// crossing is masked by a departure window before the detector arms.
pub fn find_return(
    system: &PiecewiseSystem,
    side: Side,
    p0: &DVector<f64>,
    direction: Direction,
    eps: f64,
    t_max: f64,
    opts: &IntegratorOptions,
) -> Result<ReturnEvent> {
    find_return_with_tol(system, side, p0, direction, eps, t_max, opts, TOL_TRANSVERSAL)
}

#[allow(clippy::too_many_arguments)]
pub fn find_return_with_tol(
    system: &PiecewiseSystem,
    side: Side,
    p0: &DVector<f64>,
    direction: Direction,
    eps: f64,
    t_max: f64,
    opts: &IntegratorOptions,
    tol_transversal: f64,
) -> Result<ReturnEvent> {
    let dir = direction.sign();
    let lie0 = system.lie_derivative_eps(side, p0.as_slice(), eps)?;
    if lie0.abs() < tol_transversal {
        return Err(Error::Grazing {
            lie: lie0,
            tol: tol_transversal,
        });
    }
    let rhs = |_t: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
        Ok(system.eval_field(side, y.as_slice(), eps)? * dir)
    };
    let sigma_dep = 10.0 * (opts.atol + opts.rtol) / lie0.abs();
    let arm_floor = 50.0 * opts.atol.max(1e-300);

    const SAMPLES: usize = 8;
    let mut armed = false;
    let mut prev: Option<(f64, f64)> = None;
    let mut bracket: Option<(f64, f64, f64, f64)> = None;
    let mut hit_step: Option<DenseStep> = None;

    let h_of = |y: &DVector<f64>| system.switching_value(y.as_slice());

    rk::integrate_dense(rhs, p0, t_max, opts, |step, _y_end| {
        for i in 1..=SAMPLES {
            let sigma = step.t0 + step.h * i as f64 / SAMPLES as f64;
            let h = h_of(&step.eval(sigma))?;
            if !armed {
                if sigma >= sigma_dep && h.abs() >= arm_floor {
                    armed = true;
                    prev = Some((sigma, h));
                }
                continue;
            }
            let (ps, ph) = prev.unwrap();
            if ph * h <= 0.0 {
                bracket = Some((ps, ph, sigma, h));
                hit_step = Some(step.clone());
                return Ok(StepControl::Stop);
            }
            prev = Some((sigma, h));
        }
        Ok(StepControl::Continue)
    })
    .and_then(|sol| {
        let (mut lo, mut hlo, mut hi, _hhi) = bracket.ok_or(Error::NoCrossing { t_max })?;
        // the bracket may span two accepted steps; interpolate through the solution
        let eval = |s: f64| -> DVector<f64> { sol.eval(s) };
        let step_h = hit_step.as_ref().map(|s| s.h).unwrap_or(hi - lo);
        // bisect to 1e-3 of the step, then polish with Newton on dense output
        while hi - lo > 1e-3 * step_h {
            let mid = 0.5 * (lo + hi);
            let hm = h_of(&eval(mid))?;
            if hlo * hm <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
                hlo = hm;
            }
        }
        let mut sigma = 0.5 * (lo + hi);
        let mut state = eval(sigma);
        for _ in 0..80 {
            let h = h_of(&state)?;
            if h.abs() <= EVENT_TOL {
                break;
            }
            let grad = system.grad_h(state.as_slice())?;
            let f = system.eval_field(side, state.as_slice(), eps)? * dir;
            let dh = grad.dot(&f);
            if dh == 0.0 {
                break;
            }
            let next = sigma - h / dh;
            sigma = if next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
            // keep the bracket shrinking when Newton stalls
            let hm = h_of(&eval(sigma))?;
            if hlo * hm <= 0.0 {
                hi = sigma;
            } else {
                lo = sigma;
                hlo = hm;
            }
            state = eval(sigma);
        }
        let h_final = h_of(&state)?;
        if h_final.abs() > 100.0 * EVENT_TOL {
            return Err(Error::NewtonDiverged(format!(
                "event polish stalled with |h| = {:.3e}",
                h_final.abs()
            )));
        }
        let lie = system.lie_derivative_eps(side, state.as_slice(), eps)?;
        if lie.abs() < tol_transversal {
            return Err(Error::Grazing {
                lie,
                tol: tol_transversal,
            });
        }
        Ok(ReturnEvent {
            tau: dir * sigma,
            state,
            transversal_speed: lie,
        })
    })
}

/// D phi_0^side(t, p0): fundamental matrix of the variational equation.
pub fn fundamental_matrix(
    system: &PiecewiseSystem,
    side: Side,
    p0: &DVector<f64>,
    t: f64,
    opts: &IntegratorOptions,
) -> Result<DMatrix<f64>> {
    let d = system.dim();
    let dir = if t < 0.0 { -1.0 } else { 1.0 };
    let mut aug0 = DVector::zeros(d + d * d);
    aug0.rows_mut(0, d).copy_from(p0);
    for i in 0..d {
        aug0[d + i * d + i] = 1.0;
    }
    let rhs = variational_rhs(system, side, dir, d);
    let sol = rk::integrate_dense(rhs, &aug0, t.abs(), opts, |_, _| Ok(StepControl::Continue))?;
    Ok(unpack_matrix(&sol.final_y, d))
}

fn variational_rhs<'a>(
    system: &'a PiecewiseSystem,
    side: Side,
    dir: f64,
    d: usize,
) -> impl Fn(f64, &DVector<f64>) -> Result<DVector<f64>> + 'a {
    move |_t, aug: &DVector<f64>| {
        let y = aug.rows(0, d).into_owned();
        let j = system.jacobian_x0(side, y.as_slice())?;
        let w = unpack_matrix(aug, d);
        let mut out = DVector::zeros(d + d * d);
        out.rows_mut(0, d)
            .copy_from(&(system.eval_x0(side, y.as_slice())? * dir));
        let dw = j * w * dir;
        for c in 0..d {
            for r in 0..d {
                out[d + c * d + r] = dw[(r, c)];
            }
        }
        Ok(out)
    }
}

fn unpack_matrix(aug: &DVector<f64>, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |r, c| aug[d + c * d + r])
}

/// How omega is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OmegaMethod {
    /// Inhomogeneous variational initial value problem (default).
    #[default]
    Ivp,
    /// Fundamental matrix times the integral of its inverse against X1.
    MatrixIntegral,
}

/// First-order response omega^side(t, p0) = d phi / d eps at eps = 0.
pub fn omega(
    system: &PiecewiseSystem,
    side: Side,
    p0: &DVector<f64>,
    t: f64,
    method: OmegaMethod,
    opts: &IntegratorOptions,
) -> Result<DVector<f64>> {
    let d = system.dim();
    let dir = if t < 0.0 { -1.0 } else { 1.0 };
    match method {
        OmegaMethod::Ivp => {
            let mut aug0 = DVector::zeros(2 * d);
            aug0.rows_mut(0, d).copy_from(p0);
            let rhs = move |_t: f64, aug: &DVector<f64>| -> Result<DVector<f64>> {
                let y = aug.rows(0, d).into_owned();
                let w = aug.rows(d, d).into_owned();
                let j = system.jacobian_x0(side, y.as_slice())?;
                let mut out = DVector::zeros(2 * d);
                out.rows_mut(0, d)
                    .copy_from(&(system.eval_x0(side, y.as_slice())? * dir));
                out.rows_mut(d, d)
                    .copy_from(&((j * w + system.eval_x1(side, y.as_slice())?) * dir));
                Ok(out)
            };
            let sol =
                rk::integrate_dense(rhs, &aug0, t.abs(), opts, |_, _| Ok(StepControl::Continue))?;
            Ok(sol.final_y.rows(d, d).into_owned())
        }
        OmegaMethod::MatrixIntegral => {
            // augmented [y; W; I] with I' = W^-1 X1(y); omega = W I
            let mut aug0 = DVector::zeros(d + d * d + d);
            aug0.rows_mut(0, d).copy_from(p0);
            for i in 0..d {
                aug0[d + i * d + i] = 1.0;
            }
            let rhs = move |_t: f64, aug: &DVector<f64>| -> Result<DVector<f64>> {
                let y = aug.rows(0, d).into_owned();
                let w = unpack_matrix(aug, d);
                let j = system.jacobian_x0(side, y.as_slice())?;
                let x1 = system.eval_x1(side, y.as_slice())?;
                let integrand = w
                    .clone()
                    .lu()
                    .solve(&x1)
                    .ok_or_else(|| Error::Singular("fundamental matrix".into()))?;
                let mut out = DVector::zeros(d + d * d + d);
                out.rows_mut(0, d)
                    .copy_from(&(system.eval_x0(side, y.as_slice())? * dir));
                let dw = j * &w * dir;
                for c in 0..d {
                    for r in 0..d {
                        out[d + c * d + r] = dw[(r, c)];
                    }
                }
                out.rows_mut(d + d * d, d).copy_from(&(integrand * dir));
                Ok(out)
            };
            let sol =
                rk::integrate_dense(rhs, &aug0, t.abs(), opts, |_, _| Ok(StepControl::Continue))?;
            let w = unpack_matrix(&sol.final_y, d);
            let i = sol.final_y.rows(d + d * d, d).into_owned();
            Ok(w * i)
        }
    }
}

/// Y^side(t, p0) = d phi / d y + d phi / d z * dg/dy(x0, y0), for p0 on the
/// switching manifold; (m+1) x (m-n).
pub fn y_sensitivity(
    system: &PiecewiseSystem,
    side: Side,
    p0: &DVector<f64>,
    t: f64,
    opts: &IntegratorOptions,
) -> Result<DMatrix<f64>> {
    let (n, m) = (system.n(), system.m());
    let w = fundamental_matrix(system, side, p0, t, opts)?;
    let dgdy = system.dg_dy(p0.as_slice())?;
    let mut out = DMatrix::zeros(m + 1, m - n);
    for j in 0..m - n {
        let col = w.column(n + j) + w.column(m) * dgdy[j];
        out.set_column(j, &col);
    }
    Ok(out)
}

/// d t^side / d eps at eps = 0, for the return from (x, y, g(x, y)).
pub fn dt_deps(
    system: &PiecewiseSystem,
    side: Side,
    xy: &[f64],
    t_max: f64,
    opts: &IntegratorOptions,
) -> Result<f64> {
    let (p0, ev) = base_return(system, side, xy, t_max, opts)?;
    let om = omega(system, side, &p0, ev.tau, OmegaMethod::Ivp, opts)?;
    let grad = system.grad_h(ev.state.as_slice())?;
    let lie = system.lie_derivative(side, ev.state.as_slice())?;
    check_lie(lie)?;
    Ok(-grad.dot(&om) / lie)
}

/// d t^side / d y at eps = 0, as a row of length m - n.
pub fn dt_dy(
    system: &PiecewiseSystem,
    side: Side,
    xy: &[f64],
    t_max: f64,
    opts: &IntegratorOptions,
) -> Result<DVector<f64>> {
    let (p0, ev) = base_return(system, side, xy, t_max, opts)?;
    let ys = y_sensitivity(system, side, &p0, ev.tau, opts)?;
    let grad = system.grad_h(ev.state.as_slice())?;
    let lie = system.lie_derivative(side, ev.state.as_slice())?;
    check_lie(lie)?;
    Ok(-(ys.transpose() * grad) / lie)
}

fn check_lie(lie: f64) -> Result<()> {
    if lie.abs() < TOL_TRANSVERSAL {
        return Err(Error::Grazing {
            lie,
            tol: TOL_TRANSVERSAL,
        });
    }
    Ok(())
}

fn base_return(
    system: &PiecewiseSystem,
    side: Side,
    xy: &[f64],
    t_max: f64,
    opts: &IntegratorOptions,
) -> Result<(DVector<f64>, ReturnEvent)> {
    let m = system.m();
    if xy.len() != m {
        return Err(Error::Dimension(format!(
            "expected (x, y) of length {m}, got {}",
            xy.len()
        )));
    }
    let mut p0 = DVector::zeros(m + 1);
    for (i, v) in xy.iter().enumerate() {
        p0[i] = *v;
    }
    p0[m] = system.g_value(p0.as_slice())?;
    let direction = match side {
        Side::Plus => Direction::Forward,
        Side::Minus => Direction::Backward,
    };
    let ev = find_return(system, side, &p0, direction, 0.0, t_max, opts)?;
    Ok((p0, ev))
}
