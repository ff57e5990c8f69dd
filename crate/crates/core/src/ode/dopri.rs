//! Dormand–Prince 5(4) embedded Runge–Kutta pair with proportional
//! step-size control and local extrapolation (the fifth-order solution is
//! propagated).

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order weights minus fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MAX_GROWTH: f64 = 5.0;
const MAX_SHRINK: f64 = 0.2;

/// Controls for one integration run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    /// Absolute and relative bound on the local error per unit step.
    pub tol: f64,
    /// Smallest step the controller may propose before giving up.
    pub min_step: f64,
    pub max_steps: usize,
}

impl StepControl {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            min_step: 1e-12,
            max_steps: 5_000_000,
        }
    }
}

/// Where the solver records output.
#[derive(Debug, Clone, Copy)]
pub enum Sampling<'a> {
    /// Every accepted step.
    Steps,
    /// Exactly these times; steps are shortened to land on each of them.
    Grid(&'a [f64]),
}

/// Solver output: times, states and right-hand sides at every sample.
#[derive(Debug, Clone, Default)]
pub struct Solution<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub dy: Vec<[f64; N]>,
}

impl<const N: usize> Solution<N> {
    fn push(&mut self, t: f64, y: [f64; N], dy: [f64; N]) {
        self.t.push(t);
        self.y.push(y);
        self.dy.push(dy);
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let s: f64 = terms.iter().map(|(c, k)| c * k[i]).sum();
        *o += h * s;
    }
    out
}

fn error_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], tol: f64) -> f64 {
    (0..N)
        .map(|i| err[i].abs() / (tol + tol * y0[i].abs().max(y1[i].abs())))
        .fold(0.0, f64::max)
}

/// Integrates `y' = rhs(t, y)` forward from `(t0, y0)` to `t_end`.
///
/// `guard` runs on every accepted state and can abort the run (used for the
/// `x → 0` singularity of the Milne–Pinney equation).
pub fn solve<const N: usize, F, G>(
    mut rhs: F,
    guard: G,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    control: StepControl,
    sampling: Sampling<'_>,
) -> Result<Solution<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    G: Fn(f64, &[f64; N]) -> Result<()>,
{
    let tol = control.tol;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if !(t_end >= t0) {
        return Err(Error::InvalidParameter(format!(
            "t_end = {t_end} precedes the initial time {t0}"
        )));
    }
    let targets: Vec<f64> = match sampling {
        Sampling::Steps => vec![t_end],
        Sampling::Grid(grid) => {
            if grid.first() != Some(&t0) {
                return Err(Error::InvalidParameter(
                    "output grid must start at the initial time".into(),
                ));
            }
            if grid.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidParameter(
                    "output grid must be strictly increasing".into(),
                ));
            }
            grid[1..].to_vec()
        }
    };
    let record_steps = matches!(sampling, Sampling::Steps);

    guard(t0, &y0)?;
    let mut f0 = rhs(t0, &y0)?;
    let mut out = Solution::default();
    out.push(t0, y0, f0);
    let Some(&t_final) = targets.last() else {
        return Ok(out);
    };
    if t_final == t0 {
        return Ok(out);
    }

    let mut t = t0;
    let mut y = y0;
    let mut h = initial_step(&mut rhs, t0, &y0, &f0, tol, t_final - t0)?;
    let mut steps = 0usize;
    let mut rejected_last = false;

    for &target in &targets {
        while t < target {
            if steps >= control.max_steps {
                return Err(Error::TooManySteps(control.max_steps));
            }
            steps += 1;

            let remaining = target - t;
            let landing = h >= remaining * (1.0 - 1e-12);
            let h_try = if landing { remaining } else { h };

            let k1 = f0;
            let k2 = rhs(t + C2 * h_try, &axpy(&y, h_try, &[(A21, &k1)]))?;
            let k3 = rhs(t + C3 * h_try, &axpy(&y, h_try, &[(A31, &k1), (A32, &k2)]))?;
            let k4 = rhs(t + C4 * h_try, &axpy(&y, h_try, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
            let k5 = rhs(
                t + C5 * h_try,
                &axpy(&y, h_try, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            )?;
            let k6 = rhs(
                t + h_try,
                &axpy(&y, h_try, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            )?;
            let y_new = axpy(&y, h_try, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let t_new = if landing { target } else { t + h_try };
            let k7 = rhs(t_new, &y_new)?;

            // error per unit step: the embedded estimate divided by h
            let mut err = [0.0; N];
            for i in 0..N {
                err[i] = E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i];
            }
            let err_norm = error_norm(&err, &y, &y_new, tol);
            let accepted = err_norm.is_finite() && err_norm <= 1.0;
            let factor = if err_norm == 0.0 {
                MAX_GROWTH
            } else if err_norm.is_finite() {
                (SAFETY * err_norm.powf(-0.25)).clamp(MAX_SHRINK, MAX_GROWTH)
            } else {
                MAX_SHRINK
            };

            if accepted {
                guard(t_new, &y_new)?;
                t = t_new;
                y = y_new;
                f0 = k7;
                if record_steps || landing {
                    out.push(t, y, f0);
                }
                // a landing step is usually shorter than the controller's
                // proposal, so keep the proposal rather than shrinking it
                let grow = if rejected_last { factor.min(1.0) } else { factor };
                h = if landing { h.max(h_try * grow) } else { h_try * grow };
                rejected_last = false;
            } else {
                h = h_try * factor.min(1.0);
                rejected_last = true;
                if h < control.min_step {
                    return Err(Error::StepUnderflow { t, h });
                }
            }
        }
    }
    Ok(out)
}

/// Starting step following Hairer, Nørsett & Wanner (II.4).
fn initial_step<const N: usize, F>(
    rhs: &mut F,
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    tol: f64,
    span: f64,
) -> Result<f64>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let scale = |i: usize| tol + tol * y0[i].abs();
    let rms = |v: &dyn Fn(usize) -> f64| ((0..N).map(|i| (v(i) / scale(i)).powi(2)).sum::<f64>() / N as f64).sqrt();
    let d0 = rms(&|i| y0[i]);
    let d1 = rms(&|i| f0[i]);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 }.min(span);
    let y1 = axpy(y0, h0, &[(1.0, f0)]);
    let f1 = rhs(t0 + h0, &y1)?;
    let d2 = rms(&|i| f1[i] - f0[i]) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(span))
}
