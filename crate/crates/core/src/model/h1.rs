//! Numerical verification of the crossing-periodic-orbit hypothesis at a
//! seed-parameter value: closure of the two arcs, strict interior sign of h,
//! and transversality at both crossings.

use super::{PiecewiseSystem, SeedManifold, Side};
use crate::error::{Error, Result};
use crate::flow::{find_return_with_tol, integrate_side, Direction, IntegratorOptions};

#[derive(Debug, Clone, Copy)]
pub struct H1Tols {
    pub tol_close: f64,
    pub tol_transversal: f64,
    pub t_max: f64,
    pub interior_samples: usize,
}

impl Default for H1Tols {
    fn default() -> Self {
        H1Tols {
            tol_close: 1e-9,
            tol_transversal: 1e-6,
            t_max: 50.0,
            interior_samples: 64,
        }
    }
}

/// Outcome of the hypothesis check at one seed-parameter value.
#[derive(Debug, Clone)]
pub struct H1Report {
    pub u: Vec<f64>,
    pub tau_plus: f64,
    pub tau_minus: f64,
    /// Distance between the forward and backward far endpoints (condition (a)).
    pub closure_gap: f64,
    /// Strict interior sign margins of h on the plus and minus arcs ((b), (c)).
    pub min_abs_h_interior: (f64, f64),
    /// (X0^+ h, X0^- h) at the seed and at the far crossing ((d), (e)).
    pub transversality: [f64; 4],
    pub passed: bool,
    /// Populated when the check failed outright (no return, grazing start).
    pub failure: Option<String>,
}

pub fn check_h1(
    system: &PiecewiseSystem,
    seed: &SeedManifold,
    u: &[f64],
    tols: &H1Tols,
    opts: &IntegratorOptions,
) -> Result<H1Report> {
    let p0 = seed.seed_state(system, u)?;
    let mut report = H1Report {
        u: u.to_vec(),
        tau_plus: f64::NAN,
        tau_minus: f64::NAN,
        closure_gap: f64::NAN,
        min_abs_h_interior: (f64::NAN, f64::NAN),
        transversality: [f64::NAN; 4],
        passed: false,
        failure: None,
    };

    let fwd = find_return_with_tol(
        system,
        Side::Plus,
        &p0,
        Direction::Forward,
        0.0,
        tols.t_max,
        opts,
        tols.tol_transversal,
    );
    let bwd = find_return_with_tol(
        system,
        Side::Minus,
        &p0,
        Direction::Backward,
        0.0,
        tols.t_max,
        opts,
        tols.tol_transversal,
    );
    let (fwd, bwd) = match (fwd, bwd) {
        (Ok(f), Ok(b)) => (f, b),
        (Err(e), _) | (_, Err(e)) => match e {
            Error::NoCrossing { .. } | Error::Grazing { .. } | Error::NewtonDiverged(_) => {
                report.failure = Some(e.to_string());
                return Ok(report);
            }
            other => return Err(other),
        },
    };
    report.tau_plus = fwd.tau;
    report.tau_minus = bwd.tau;
    report.closure_gap = (&fwd.state - &bwd.state).norm();

    // strict interior sign of h along both arcs
    let arc_plus = integrate_side(system, Side::Plus, &p0, fwd.tau, 0.0, opts)?;
    let arc_minus = integrate_side(system, Side::Minus, &p0, bwd.tau, 0.0, opts)?;
    let mut margin = |seg: &crate::flow::TrajectorySegment, sign: f64| -> Result<f64> {
        let k = tols.interior_samples;
        let mut min = f64::INFINITY;
        for i in 0..k {
            let t = seg.t_end * (i as f64 + 0.5) / k as f64;
            let h = system.switching_value(seg.eval(t).as_slice())?;
            min = min.min(sign * h);
        }
        Ok(min)
    };
    let m_plus = margin(&arc_plus, 1.0)?;
    let m_minus = margin(&arc_minus, -1.0)?;
    report.min_abs_h_interior = (m_plus, m_minus);

    let far = (&fwd.state + &bwd.state) * 0.5;
    report.transversality = [
        system.lie_derivative(Side::Plus, p0.as_slice())?,
        system.lie_derivative(Side::Minus, p0.as_slice())?,
        system.lie_derivative(Side::Plus, far.as_slice())?,
        system.lie_derivative(Side::Minus, far.as_slice())?,
    ];

    let [d_plus, d_minus, e_plus, e_minus] = report.transversality;
    report.passed = report.tau_plus > 0.0
        && report.tau_minus < 0.0
        && report.closure_gap <= tols.tol_close
        && m_plus > 0.0
        && m_minus > 0.0
        && d_plus > tols.tol_transversal
        && d_minus > tols.tol_transversal
        && e_plus < -tols.tol_transversal
        && e_minus < -tols.tol_transversal;
    Ok(report)
}
