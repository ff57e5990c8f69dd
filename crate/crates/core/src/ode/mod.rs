//! Frequency specifications, trajectories and adaptive integration of the
//! Milne–Pinney equation `ẍ = −ω²(t)x + k/x³`, the time-dependent harmonic
//! oscillator `ÿ = −ω²(t)y`, and the generalized Ermakov pair
//!
//! ```text
//! ẍ = f(y/x)/x³ − ω²(t)x
//! ÿ = g(y/x)/y³ − ω²(t)y
//! ```

pub mod dopri;
mod frequency;
mod trajectory;

use std::fmt;
use std::sync::Arc;

pub use frequency::{eval_frequency, FrequencySpec, FrequencyTable};
pub use trajectory::{State, Trajectory, TrajectoryKind};

use crate::error::{Error, Result};
use dopri::{Sampling, Solution, StepControl};

pub const DEFAULT_TOL: f64 = 1e-10;
/// Default floor on |x| below which integration aborts.
pub const DEFAULT_X_FLOOR: f64 = 1e-8;
pub const DEFAULT_MIN_STEP: f64 = 1e-12;

/// Integration settings shared by the three equations.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorOptions {
    pub tol: f64,
    pub x_floor: f64,
    pub min_step: f64,
    pub max_steps: usize,
    /// Record exactly these times (first entry must be the initial time)
    /// instead of every accepted step.
    pub grid: Option<Vec<f64>>,
}

impl IntegratorOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            x_floor: DEFAULT_X_FLOOR,
            min_step: DEFAULT_MIN_STEP,
            max_steps: 5_000_000,
            grid: None,
        }
    }

    pub fn with_grid(mut self, grid: Vec<f64>) -> Self {
        self.grid = Some(grid);
        self
    }

    pub fn with_x_floor(mut self, floor: f64) -> Self {
        self.x_floor = floor;
        self
    }

    fn control(&self) -> StepControl {
        StepControl {
            tol: self.tol,
            min_step: self.min_step,
            max_steps: self.max_steps,
        }
    }

    fn sampling(&self) -> Sampling<'_> {
        match &self.grid {
            Some(g) => Sampling::Grid(g),
            None => Sampling::Steps,
        }
    }

    fn end_time(&self, t_end: f64) -> f64 {
        self.grid.as_ref().and_then(|g| g.last().copied()).unwrap_or(t_end)
    }
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self::new(DEFAULT_TOL)
    }
}

/// Evenly spaced grid of `n` points on `[t0, t1]` with exact endpoints.
pub fn uniform_grid(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![t0],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    t1
                } else {
                    t0 + (t1 - t0) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Real shape function of the ratio `u = y/x`.
pub type ShapeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Shape functions and frequency of a generalized Ermakov system.
#[derive(Clone)]
pub struct GeneralizedErmakovSpec {
    pub f: ShapeFn,
    pub g: ShapeFn,
    pub freq: FrequencySpec,
}

impl GeneralizedErmakovSpec {
    pub fn new(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        freq: FrequencySpec,
    ) -> Self {
        Self {
            f: Arc::new(f),
            g: Arc::new(g),
            freq,
        }
    }

    /// Constant shape functions `f ≡ fc`, `g ≡ gc`.
    pub fn constant(fc: f64, gc: f64, freq: FrequencySpec) -> Self {
        Self::new(move |_| fc, move |_| gc, freq)
    }

    pub fn eval_f(&self, u: f64) -> Result<f64> {
        finite_shape((self.f)(u), u)
    }

    pub fn eval_g(&self, u: f64) -> Result<f64> {
        finite_shape((self.g)(u), u)
    }
}

impl fmt::Debug for GeneralizedErmakovSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralizedErmakovSpec")
            .field("freq", &self.freq)
            .finish_non_exhaustive()
    }
}

fn finite_shape(value: f64, u: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::ShapeFunction { u })
    }
}

/// The two components of a generalized Ermakov solution, on one time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ErmakovPair {
    pub x: Trajectory,
    pub y: Trajectory,
}

fn position_guard(x0: f64, floor: f64) -> impl Fn(f64, f64) -> Result<()> {
    let sign = x0.signum();
    move |t, x| {
        if x.abs() < floor || x.signum() != sign {
            Err(Error::SingularityGuard { t, x, floor })
        } else {
            Ok(())
        }
    }
}

fn check_k(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("k must be positive, got {k}")))
    }
}

fn check_nonzero(x: f64, floor: f64) -> Result<()> {
    if x == 0.0 || x.abs() < floor {
        Err(Error::ZeroPosition)
    } else {
        Ok(())
    }
}

fn split2(sol: Solution<2>) -> (Vec<State>, Vec<f64>) {
    let samples = sol
        .t
        .iter()
        .zip(&sol.y)
        .map(|(&t, y)| State::new(t, y[0], y[1]))
        .collect();
    let accel = sol.dy.iter().map(|d| d[1]).collect();
    (samples, accel)
}

/// Milne–Pinney solution from `init` to `t_end` at the default settings
/// for everything but `tol`.
pub fn integrate_mp(k: f64, freq: &FrequencySpec, init: State, t_end: f64, tol: f64) -> Result<Trajectory> {
    integrate_mp_with(k, freq, init, t_end, &IntegratorOptions::new(tol))
}

/// Milne–Pinney solution with explicit integrator options.
///
/// Aborts with [`Error::SingularityGuard`] if |x| drops below the floor and
/// with [`Error::StepUnderflow`] if the step size collapses.
pub fn integrate_mp_with(
    k: f64,
    freq: &FrequencySpec,
    init: State,
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    check_k(k)?;
    check_nonzero(init.x, opts.x_floor)?;
    let guard = position_guard(init.x, opts.x_floor);
    let sol = dopri::solve(
        |t, y: &[f64; 2]| {
            let w2 = freq.omega_squared(t)?;
            Ok([y[1], -w2 * y[0] + k / (y[0] * y[0] * y[0])])
        },
        |t, y: &[f64; 2]| guard(t, y[0]),
        init.t,
        [init.x, init.v],
        opts.end_time(t_end),
        opts.control(),
        opts.sampling(),
    )?;
    let (samples, accel) = split2(sol);
    Trajectory::new(
        samples,
        accel,
        Some(k),
        freq.clone(),
        opts.tol,
        TrajectoryKind::MilnePinney,
    )
}

/// Oscillator solution `ÿ = −ω²(t)y`.
pub fn integrate_tdho(freq: &FrequencySpec, init: State, t_end: f64, tol: f64) -> Result<Trajectory> {
    integrate_tdho_with(freq, init, t_end, &IntegratorOptions::new(tol))
}

pub fn integrate_tdho_with(
    freq: &FrequencySpec,
    init: State,
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    let sol = dopri::solve(
        |t, y: &[f64; 2]| Ok([y[1], -freq.omega_squared(t)? * y[0]]),
        |_, _: &[f64; 2]| Ok(()),
        init.t,
        [init.x, init.v],
        opts.end_time(t_end),
        opts.control(),
        opts.sampling(),
    )?;
    let (samples, accel) = split2(sol);
    Trajectory::new(samples, accel, None, freq.clone(), opts.tol, TrajectoryKind::Oscillator)
}

/// Coupled generalized Ermakov pair.
pub fn integrate_generalized_ermakov(
    spec: &GeneralizedErmakovSpec,
    init_x: State,
    init_y: State,
    t_end: f64,
    tol: f64,
) -> Result<ErmakovPair> {
    integrate_generalized_ermakov_with(spec, init_x, init_y, t_end, &IntegratorOptions::new(tol))
}

pub fn integrate_generalized_ermakov_with(
    spec: &GeneralizedErmakovSpec,
    init_x: State,
    init_y: State,
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<ErmakovPair> {
    if init_x.t != init_y.t {
        return Err(Error::MismatchedTimes {
            t1: init_x.t,
            t2: init_y.t,
        });
    }
    check_nonzero(init_x.x, opts.x_floor)?;
    check_nonzero(init_y.x, opts.x_floor)?;
    let guard_x = position_guard(init_x.x, opts.x_floor);
    let guard_y = position_guard(init_y.x, opts.x_floor);
    let sol = dopri::solve(
        |t, s: &[f64; 4]| {
            let [x, vx, y, vy] = *s;
            let w2 = spec.freq.omega_squared(t)?;
            let u = y / x;
            let ax = inverse_cube_term(spec.eval_f(u)?, x) - w2 * x;
            let ay = inverse_cube_term(spec.eval_g(u)?, y) - w2 * y;
            Ok([vx, ax, vy, ay])
        },
        |t, s: &[f64; 4]| {
            guard_x(t, s[0])?;
            // y is only singular where the g term is active
            if spec.eval_g(s[2] / s[0])? != 0.0 {
                guard_y(t, s[2])?;
            }
            Ok(())
        },
        init_x.t,
        [init_x.x, init_x.v, init_y.x, init_y.v],
        opts.end_time(t_end),
        opts.control(),
        opts.sampling(),
    )?;
    let mut xs = Vec::with_capacity(sol.t.len());
    let mut ys = Vec::with_capacity(sol.t.len());
    for (&t, s) in sol.t.iter().zip(&sol.y) {
        xs.push(State::new(t, s[0], s[1]));
        ys.push(State::new(t, s[2], s[3]));
    }
    let ax = sol.dy.iter().map(|d| d[1]).collect();
    let ay = sol.dy.iter().map(|d| d[3]).collect();
    let kind = TrajectoryKind::GeneralizedErmakovPair;
    Ok(ErmakovPair {
        x: Trajectory::new(xs, ax, None, spec.freq.clone(), opts.tol, kind)?,
        y: Trajectory::new(ys, ay, None, spec.freq.clone(), opts.tol, kind)?,
    })
}

fn inverse_cube_term(shape: f64, x: f64) -> f64 {
    if shape == 0.0 {
        0.0
    } else {
        shape / (x * x * x)
    }
}

/// `y1.x·y2.v − y2.x·y1.v` for two states at the same time.
pub fn wronskian(y1: &State, y2: &State) -> Result<f64> {
    if y1.t != y2.t {
        return Err(Error::MismatchedTimes { t1: y1.t, t2: y2.t });
    }
    Ok(y1.x * y2.v - y2.x * y1.v)
}
