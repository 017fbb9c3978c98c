//! Embedded Dormand-Prince 5(4) integrator with PI step control and a
//! fourth-order continuous extension on every accepted step.

use crate::error::{Error, Result};
use nalgebra::DVector;

// Butcher tableau
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// y1 - yhat1, for the embedded fourth-order error estimate
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// dense-output weights
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

#[derive(Debug, Clone, Copy)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Upper bound on the magnitude of any state component.
    pub state_bound: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 2_000_000,
            state_bound: 1e8,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tols(rtol: f64, atol: f64) -> Self {
        IntegratorOptions {
            rtol,
            atol,
            ..Default::default()
        }
    }

    /// Same options with tolerances tightened by `factor`.
    pub fn refined(&self, factor: f64) -> Self {
        IntegratorOptions {
            rtol: self.rtol / factor,
            atol: self.atol / factor,
            ..*self
        }
    }
}

/// Continuous extension over one accepted step [t0, t0 + h].
#[derive(Debug, Clone)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    cont: [DVector<f64>; 5],
}

impl DenseStep {
    /// Interpolated state at `t` inside the step.
    pub fn eval(&self, t: f64) -> DVector<f64> {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        &self.cont[0]
            + (&self.cont[1]
                + (&self.cont[2] + (&self.cont[3] + &self.cont[4] * theta1) * theta) * theta1)
                * theta
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.h
    }
}

/// Dense solution over [0, t_end] in internal (forward) time.
#[derive(Debug, Clone)]
pub struct Solution {
    pub steps: Vec<DenseStep>,
    pub final_t: f64,
    pub final_y: DVector<f64>,
    pub n_steps: usize,
    pub n_rejected: usize,
}

impl Solution {
    pub fn eval(&self, t: f64) -> DVector<f64> {
        if self.steps.is_empty() || t >= self.final_t {
            return self.final_y.clone();
        }
        let idx = self
            .steps
            .partition_point(|s| s.t_end() < t)
            .min(self.steps.len() - 1);
        self.steps[idx].eval(t)
    }
}

/// Outcome of one accepted step, offered to the driver's inspector.
pub enum StepControl {
    Continue,
    /// Stop integrating; the driver returns immediately.
    Stop,
}

/// Integrate y' = f(t, y) from y0 over [0, t_end] with t_end > 0.
///
/// `inspect` sees every accepted step (with its dense extension) and may
/// stop the run early; event location is built on top of this hook.
pub fn integrate_dense<F, I>(
    rhs: F,
    y0: &DVector<f64>,
    t_end: f64,
    opts: &IntegratorOptions,
    mut inspect: I,
) -> Result<Solution>
where
    F: Fn(f64, &DVector<f64>) -> Result<DVector<f64>>,
    I: FnMut(&DenseStep, &DVector<f64>) -> Result<StepControl>,
{
    assert!(t_end >= 0.0, "internal time must run forward");
    let n = y0.len();
    let mut t = 0.0;
    let mut y = y0.clone();
    let mut k1 = rhs(t, &y)?;
    let mut steps: Vec<DenseStep> = Vec::new();
    let mut n_acc = 0usize;
    let mut n_rej = 0usize;

    if t_end == 0.0 {
        return Ok(Solution {
            steps,
            final_t: 0.0,
            final_y: y,
            n_steps: 0,
            n_rejected: 0,
        });
    }

    let mut h = initial_step(&rhs, &y, &k1, t_end, opts)?;
    let mut err_old: f64 = 1e-4;
    let mut facmax = 10.0;
    let mut stopped = false;
    const SAFE: f64 = 0.9;
    const BETA: f64 = 0.04;
    const ALPHA: f64 = 0.2 - BETA * 0.75;

    for _ in 0..opts.max_steps {
        if t >= t_end {
            break;
        }
        h = h.min(t_end - t);
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t });
        }

        let mut k = Vec::with_capacity(7);
        k.push(k1.clone());
        let mut ok = true;
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = A[s][j];
                if a != 0.0 {
                    ys += kj * (a * h);
                }
            }
            match rhs(t + C[s] * h, &ys) {
                Ok(v) => k.push(v),
                Err(Error::Domain(_)) => {
                    // stage left the field's domain: retry with a smaller step
                    ok = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if !ok {
            h *= 0.25;
            n_rej += 1;
            continue;
        }
        // fifth-order solution is the last stage's argument (FSAL)
        let mut y_new = y.clone();
        for (j, kj) in k.iter().enumerate().take(6) {
            let a = A[6][j];
            if a != 0.0 {
                y_new += kj * (a * h);
            }
        }
        let k7 = match rhs(t + h, &y_new) {
            Ok(v) => v,
            Err(Error::Domain(_)) => {
                h *= 0.25;
                n_rej += 1;
                continue;
            }
            Err(e) => return Err(e),
        };

        let mut err_sq = 0.0;
        for i in 0..n {
            let mut e = E[6] * k7[i];
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    e += E[j] * kj[i];
                }
            }
            e *= h;
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / n as f64).sqrt().max(1e-30);

        if err <= 1.0 {
            if y_new.iter().any(|v| v.abs() > opts.state_bound) {
                return Err(Error::DomainEscape { t: t + h });
            }
            // dense extension (Hairer's contd5 layout)
            let ydiff = &y_new - &y;
            let bspl = &k1 * h - &ydiff;
            let mut cont4 = DVector::zeros(n);
            for (j, kj) in k.iter().enumerate() {
                if D[j] != 0.0 {
                    cont4 += kj * D[j];
                }
            }
            cont4 += &k7 * D[6];
            cont4 *= h;
            let step = DenseStep {
                t0: t,
                h,
                cont: [
                    y.clone(),
                    ydiff.clone(),
                    bspl.clone(),
                    &ydiff - &k7 * h - bspl,
                    cont4,
                ],
            };
            t += h;
            y = y_new;
            k1 = k7;
            n_acc += 1;
            let control = inspect(&step, &y)?;
            steps.push(step);
            if matches!(control, StepControl::Stop) {
                stopped = true;
                break;
            }
            let fac = (err.powf(ALPHA) / err_old.powf(BETA) / SAFE).clamp(1.0 / facmax, 5.0);
            h /= fac;
            err_old = err.max(1e-4);
            facmax = 10.0;
        } else {
            h *= (SAFE * err.powf(-0.2)).clamp(0.2, 1.0);
            n_rej += 1;
            facmax = 1.0;
        }
    }

    if !stopped && t < t_end {
        return Err(Error::StepUnderflow { t });
    }
    Ok(Solution {
        steps,
        final_t: t,
        final_y: y,
        n_steps: n_acc,
        n_rejected: n_rej,
    })
}

fn initial_step<F>(
    rhs: &F,
    y0: &DVector<f64>,
    f0: &DVector<f64>,
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<f64>
where
    F: Fn(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let n = y0.len() as f64;
    let sc = |y: &DVector<f64>, i: usize| opts.atol + opts.rtol * y[i].abs();
    let d0 = (y0.iter().enumerate().map(|(i, v)| (v / sc(y0, i)).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().enumerate().map(|(i, v)| (v / sc(y0, i)).powi(2)).sum::<f64>() / n).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(t_end);
    let y1 = y0 + f0 * h0;
    let f1 = rhs(h0, &y1)?;
    let d2 = ((&f1 - f0)
        .iter()
        .enumerate()
        .map(|(i, v)| (v / sc(y0, i)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok(h1.min(100.0 * h0).min(t_end))
}
