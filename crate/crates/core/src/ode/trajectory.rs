use serde::{Deserialize, Serialize};

use super::frequency::FrequencySpec;
use crate::error::{Error, Result};

/// One sample `(t, x, v)` of a second-order ODE solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub x: f64,
    pub v: f64,
}

impl State {
    pub const fn new(t: f64, x: f64, v: f64) -> Self {
        Self { t, x, v }
    }
}

/// Which equation produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    MilnePinney,
    Oscillator,
    GeneralizedErmakovPair,
}

/// Time-ordered samples of one solution, with the equation data that
/// produced them.
///
/// Accelerations are kept next to the samples so the cubic Hermite dense
/// output can interpolate both position and velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<State>,
    accel: Vec<f64>,
    k: Option<f64>,
    freq: FrequencySpec,
    tol: f64,
    kind: TrajectoryKind,
}

impl Trajectory {
    /// Builds a trajectory from samples and matching accelerations.
    ///
    /// Fails if the lengths differ, if times are not strictly increasing,
    /// or if a Milne–Pinney trajectory changes sign.
    pub fn new(
        samples: Vec<State>,
        accel: Vec<f64>,
        k: Option<f64>,
        freq: FrequencySpec,
        tol: f64,
        kind: TrajectoryKind,
    ) -> Result<Self> {
        if samples.len() != accel.len() {
            return Err(Error::InvalidParameter(format!(
                "{} samples but {} accelerations",
                samples.len(),
                accel.len()
            )));
        }
        if samples.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::InvalidParameter(
                "sample times must be strictly increasing".into(),
            ));
        }
        if kind == TrajectoryKind::MilnePinney {
            if let Some(first) = samples.first() {
                let sign = first.x.signum();
                if samples.iter().any(|s| s.x == 0.0 || s.x.signum() != sign) {
                    return Err(Error::ZeroPosition);
                }
            }
        }
        Ok(Self {
            samples,
            accel,
            k,
            freq,
            tol,
            kind,
        })
    }

    /// Milne–Pinney trajectory whose accelerations follow from the equation
    /// itself, `−ω²x + k/x³`.
    pub fn milne_pinney(samples: Vec<State>, k: f64, freq: FrequencySpec, tol: f64) -> Result<Self> {
        let accel = samples
            .iter()
            .map(|s| Ok(-freq.omega_squared(s.t)? * s.x + k / s.x.powi(3)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(samples, accel, Some(k), freq, tol, TrajectoryKind::MilnePinney)
    }

    /// Oscillator trajectory with accelerations `−ω²y`.
    pub fn oscillator(samples: Vec<State>, freq: FrequencySpec, tol: f64) -> Result<Self> {
        let accel = samples
            .iter()
            .map(|s| Ok(-freq.omega_squared(s.t)? * s.x))
            .collect::<Result<Vec<_>>>()?;
        Self::new(samples, accel, None, freq, tol, TrajectoryKind::Oscillator)
    }

    pub fn samples(&self) -> &[State] {
        &self.samples
    }

    pub fn accelerations(&self) -> &[f64] {
        &self.accel
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn k(&self) -> Option<f64> {
        self.k
    }

    pub fn freq(&self) -> &FrequencySpec {
        &self.freq
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn kind(&self) -> TrajectoryKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> Option<&State> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&State> {
        self.samples.last()
    }

    /// `(t_first, t_last)`, or `None` for an empty trajectory.
    pub fn span(&self) -> Option<(f64, f64)> {
        Some((self.samples.first()?.t, self.samples.last()?.t))
    }

    /// True when both trajectories are sampled at bit-identical times.
    pub fn same_grid(&self, other: &Trajectory) -> bool {
        self.len() == other.len() && self.times().zip(other.times()).all(|(a, b)| a == b)
    }

    /// State at `t` by cubic Hermite interpolation between the bracketing
    /// samples. Sample times are returned exactly.
    pub fn interpolate(&self, t: f64) -> Result<State> {
        let (lo, hi) = self.span().ok_or(Error::DisjointSpans)?;
        if !(lo..=hi).contains(&t) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        let n = self.samples.len();
        let i = self.samples.partition_point(|s| s.t <= t);
        if i > 0 && self.samples[i - 1].t == t {
            return Ok(self.samples[i - 1]);
        }
        let i = i.clamp(1, n - 1);
        let (a, b) = (self.samples[i - 1], self.samples[i]);
        let (aa, ab) = (self.accel[i - 1], self.accel[i]);
        let h = b.t - a.t;
        let s = (t - a.t) / h;
        Ok(State::new(
            t,
            hermite(s, h, a.x, a.v, b.x, b.v),
            hermite(s, h, a.v, aa, b.v, ab),
        ))
    }

    /// The same solution evaluated on `grid` through dense output.
    pub fn resample(&self, grid: &[f64]) -> Result<Trajectory> {
        let mut samples = Vec::with_capacity(grid.len());
        let mut accel = Vec::with_capacity(grid.len());
        for &t in grid {
            samples.push(self.interpolate(t)?);
            accel.push(self.interpolate_accel(t)?);
        }
        Trajectory::new(samples, accel, self.k, self.freq.clone(), self.tol, self.kind)
    }

    fn interpolate_accel(&self, t: f64) -> Result<f64> {
        let i = self.samples.partition_point(|s| s.t <= t);
        if i > 0 && self.samples[i - 1].t == t {
            return Ok(self.accel[i - 1]);
        }
        let i = i.clamp(1, self.samples.len() - 1);
        let (t0, t1) = (self.samples[i - 1].t, self.samples[i].t);
        let s = (t - t0) / (t1 - t0);
        Ok(self.accel[i - 1] + s * (self.accel[i] - self.accel[i - 1]))
    }
}

/// Cubic Hermite basis on `[0, 1]` scaled to an interval of width `h`.
fn hermite(s: f64, h: f64, p0: f64, m0: f64, p1: f64, m1: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * p0 + (s3 - 2.0 * s2 + s) * h * m0 + (-2.0 * s3 + 3.0 * s2) * p1 + (s3 - s2) * h * m1
}
