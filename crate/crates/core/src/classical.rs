//! The classical superposition rule built from two oscillator solutions,
//! the seed pairs it produces, and the check that the two-solution rule
//! reproduces it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{integrate_tdho_with, wronskian, FrequencySpec, IntegratorOptions, State, Trajectory};
use crate::superposition::{sr_evaluate_states, Sign, SuperpositionCoefficients};

/// Allowed Milne–Pinney residual of constructed seeds.
pub const SEED_RESIDUAL_TOL: f64 = 1e-6;
/// Relative tolerance on `4C₁C₂ = kW²`.
pub const CONSTRAINT_TOL: f64 = 1e-12;

/// Two independent oscillator solutions on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorBasis {
    y1: Trajectory,
    y2: Trajectory,
    w: f64,
}

impl OscillatorBasis {
    /// Wraps two oscillator trajectories. The Wronskian is taken at the first
    /// sample and must stay within `allowed_drift` of it on the whole grid.
    pub fn from_trajectories(y1: Trajectory, y2: Trajectory, allowed_drift: f64) -> Result<Self> {
        if !y1.same_grid(&y2) {
            return Err(Error::GridMismatch);
        }
        let pairs: Vec<_> = y1.samples().iter().zip(y2.samples()).collect();
        let (a, b) = pairs.first().ok_or(Error::DisjointSpans)?;
        let w = wronskian(a, b)?;
        if w == 0.0 {
            return Err(Error::ZeroWronskian);
        }
        let mut drift = 0.0f64;
        for (a, b) in &pairs {
            drift = drift.max((wronskian(a, b)? - w).abs());
        }
        if drift > allowed_drift {
            return Err(Error::WronskianDrift {
                drift,
                allowed: allowed_drift,
            });
        }
        Ok(Self { y1, y2, w })
    }

    /// Integrates two oscillator solutions on `grid`. The Wronskian may
    /// drift by at most `100·tol` (relative to `max(1, |W|)`).
    pub fn integrate(freq: &FrequencySpec, y1_init: State, y2_init: State, grid: Vec<f64>, tol: f64) -> Result<Self> {
        let t_end = *grid.last().ok_or(Error::DisjointSpans)?;
        let opts = IntegratorOptions::new(tol).with_grid(grid);
        let y1 = integrate_tdho_with(freq, y1_init, t_end, &opts)?;
        let y2 = integrate_tdho_with(freq, y2_init, t_end, &opts)?;
        let scale = wronskian(&y1_init, &y2_init)?.abs().max(1.0);
        Self::from_trajectories(y1, y2, 100.0 * tol * scale)
    }

    /// `cos(ωt)` and `sin(ωt)/ω` for constant `ω`, sampled exactly on
    /// `grid`; `W = 1`.
    pub fn constant_frequency(omega: f64, grid: &[f64]) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
        }
        let freq = FrequencySpec::constant(omega);
        let (c, s): (Vec<_>, Vec<_>) = grid
            .iter()
            .map(|&t| {
                let (sn, cs) = (omega * t).sin_cos();
                (State::new(t, cs, -omega * sn), State::new(t, sn / omega, cs))
            })
            .unzip();
        let y1 = Trajectory::oscillator(c, freq.clone(), 0.0)?;
        let y2 = Trajectory::oscillator(s, freq, 0.0)?;
        Self::from_trajectories(y1, y2, 1e-12)
    }

    pub fn y1(&self) -> &Trajectory {
        &self.y1
    }

    pub fn y2(&self) -> &Trajectory {
        &self.y2
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn freq(&self) -> &FrequencySpec {
        self.y1.freq()
    }

    pub fn grid(&self) -> Vec<f64> {
        self.y1.times().collect()
    }

    /// The basis on another grid, through dense output.
    pub fn resample(&self, grid: &[f64]) -> Result<Self> {
        Ok(Self {
            y1: self.y1.resample(grid)?,
            y2: self.y2.resample(grid)?,
            w: self.w,
        })
    }
}

/// Constants of a seed pair: `C₁ < C₂`, both positive, `4C₁C₂ = kW²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeedParams {
    pub c1: f64,
    pub c2: f64,
    pub k: f64,
}

impl SeedParams {
    pub fn new(c1: f64, c2: f64, k: f64) -> Result<Self> {
        if !(c1 > 0.0 && c2 > 0.0 && k > 0.0) {
            return Err(Error::InvalidSeedParams(format!(
                "C1, C2 and k must be positive, got C1 = {c1}, C2 = {c2}, k = {k}"
            )));
        }
        if !(c1 < c2) {
            return Err(Error::InvalidSeedParams(format!(
                "need C1 < C2, got C1 = {c1}, C2 = {c2}"
            )));
        }
        Ok(Self { c1, c2, k })
    }

    /// Parameters with `C₂ = kW²/(4C₁)`.
    pub fn for_wronskian(c1: f64, k: f64, w: f64) -> Result<Self> {
        Self::new(c1, k * w * w / (4.0 * c1), k)
    }

    /// Checks `4C₁C₂ = kW²` for the Wronskian of a basis.
    pub fn check_constraint(&self, w: f64) -> Result<()> {
        let lhs = 4.0 * self.c1 * self.c2;
        let rhs = self.k * w * w;
        if (lhs - rhs).abs() > CONSTRAINT_TOL * lhs.max(rhs) {
            return Err(Error::InvalidSeedParams(format!(
                "4 C1 C2 = {lhs} differs from k W^2 = {rhs}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MuPair {
    pub mu1: f64,
    pub mu2: f64,
}

impl MuPair {
    /// `4μ₁μ₂ − kW²`, the discriminant of the classical rule.
    pub fn discriminant(&self, k: f64, w: f64) -> f64 {
        4.0 * self.mu1 * self.mu2 - k * w * w
    }
}

/// `μ₁ = C₁λ₁ + C₂λ₂`, `μ₂ = C₁λ₂ + C₂λ₁`.
pub fn mu_from_lambda(lambda1: f64, lambda2: f64, c1: f64, c2: f64) -> MuPair {
    MuPair {
        mu1: c1 * lambda1 + c2 * lambda2,
        mu2: c1 * lambda2 + c2 * lambda1,
    }
}

/// `(√2/|W|)·√(μ₁y₁² + μ₂y₂² + sign·√(4μ₁μ₂ − kW²)·y₁y₂)`.
pub fn classical_rule(y1: f64, y2: f64, mu1: f64, mu2: f64, k: f64, w: f64, sign: Sign) -> Result<f64> {
    if w == 0.0 {
        return Err(Error::ZeroWronskian);
    }
    let disc = 4.0 * mu1 * mu2 - k * w * w;
    let scale = 4.0 * (mu1 * mu2).abs() + k * w * w;
    let disc = if disc >= 0.0 {
        disc
    } else if disc >= -CONSTRAINT_TOL * scale {
        0.0
    } else {
        return Err(Error::InvalidSeedParams(format!(
            "4 mu1 mu2 = {} is below k W^2 = {}",
            4.0 * mu1 * mu2,
            k * w * w
        )));
    };
    let inner = mu1 * y1 * y1 + mu2 * y2 * y2 + sign.value() * disc.sqrt() * y1 * y2;
    if !(inner > 0.0) {
        return Err(Error::NonpositiveSquare { value: inner });
    }
    Ok(2f64.sqrt() / w.abs() * inner.sqrt())
}

/// Classical solution with constants `C₁`, `C₂` at time `t`.
pub fn pinney_solution(basis: &OscillatorBasis, c1: f64, c2: f64, k: f64, sign: Sign, t: f64) -> Result<f64> {
    if !(c1 >= 0.0 && c2 >= 0.0) {
        return Err(Error::InvalidSeedParams(format!(
            "C1, C2 must be nonnegative, got {c1}, {c2}"
        )));
    }
    let a = basis.y1.interpolate(t)?;
    let b = basis.y2.interpolate(t)?;
    classical_rule(a.x, b.x, c1, c2, k, basis.w, sign)
}

/// Classical solution sampled on the basis grid, with velocities from
/// differentiating `x²`.
pub fn pinney_trajectory(basis: &OscillatorBasis, c1: f64, c2: f64, k: f64, sign: Sign) -> Result<Trajectory> {
    let w2 = basis.w * basis.w;
    let root = (4.0 * c1 * c2 - k * w2).max(0.0).sqrt() * sign.value();
    let samples = basis
        .y1
        .samples()
        .iter()
        .zip(basis.y2.samples())
        .map(|(a, b)| {
            let x = classical_rule(a.x, b.x, c1, c2, k, basis.w, sign)?;
            let dq = 2.0 * c1 * a.x * a.v + 2.0 * c2 * b.x * b.v + root * (a.v * b.x + a.x * b.v);
            Ok(State::new(a.t, x, dq / (w2 * x)))
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::milne_pinney(samples, k, basis.freq().clone(), basis.y1.tol())
}

/// Maximum over the grid of the Milne–Pinney residual `|ẍ + ω²x − k/x³|`,
/// with `ẍ` from the chain rule on `x² = (2/W²)(C₁y₁² + C₂y₂²)`.
fn seed_residual(basis: &OscillatorBasis, c1: f64, c2: f64, k: f64, seed: &Trajectory) -> Result<(f64, f64)> {
    let w2 = basis.w * basis.w;
    let mut worst = (0.0f64, 0.0f64);
    let rows = basis
        .y1
        .samples()
        .iter()
        .zip(basis.y1.accelerations())
        .zip(basis.y2.samples().iter().zip(basis.y2.accelerations()))
        .zip(seed.samples());
    for (((a, aa), (b, ab)), s) in rows {
        let q2 = 2.0 * c1 * (a.v * a.v + a.x * aa) + 2.0 * c2 * (b.v * b.v + b.x * ab);
        let accel = (q2 / w2 - s.v * s.v) / s.x;
        let expected = -basis.freq().omega_squared(s.t)? * s.x + k / (s.x * s.x * s.x);
        let r = (accel - expected).abs();
        if r > worst.1 {
            worst = (s.t, r);
        }
    }
    Ok(worst)
}

fn build_seed(basis: &OscillatorBasis, c1: f64, c2: f64, k: f64, tol: f64) -> Result<Trajectory> {
    let scale = 2.0 / (basis.w * basis.w);
    let samples = basis
        .y1
        .samples()
        .iter()
        .zip(basis.y2.samples())
        .map(|(a, b)| {
            let x = (scale * (c1 * a.x * a.x + c2 * b.x * b.x)).sqrt();
            let v = scale * (c1 * a.x * a.v + c2 * b.x * b.v) / x;
            State::new(a.t, x, v)
        })
        .collect();
    let seed = Trajectory::milne_pinney(samples, k, basis.freq().clone(), tol)?;
    let (t, residual) = seed_residual(basis, c1, c2, k, &seed)?;
    if residual > SEED_RESIDUAL_TOL {
        return Err(Error::ResidualCheck {
            t,
            residual,
            allowed: SEED_RESIDUAL_TOL,
        });
    }
    Ok(seed)
}

/// The positive seed pair
///
/// ```text
/// x₁ = (√2/|W|)·√(C₁y₁² + C₂y₂²),  x₂ = (√2/|W|)·√(C₂y₁² + C₁y₂²)
/// ```
///
/// sampled on the basis grid, each certified against the Milne–Pinney
/// equation.
pub fn seed_pair_from_tdho(basis: &OscillatorBasis, params: &SeedParams) -> Result<(Trajectory, Trajectory)> {
    params.check_constraint(basis.w)?;
    let tol = basis.y1.tol().max(basis.y2.tol());
    Ok((
        build_seed(basis, params.c1, params.c2, params.k, tol)?,
        build_seed(basis, params.c2, params.c1, params.k, tol)?,
    ))
}

/// `I₃ = 4(C₁² + C₂²)/W²` of the constructed seed pair.
pub fn i3_closed_form(c1: f64, c2: f64, w: f64) -> Result<f64> {
    if w == 0.0 {
        return Err(Error::ZeroWronskian);
    }
    Ok(4.0 * (c1 * c1 + c2 * c2) / (w * w))
}

/// Oscillator squares `(y₁², y₂²)` from seed squares `(x₁², x₂²)`.
///
/// Both are nonnegative exactly when `C₁/C₂ ≤ x₁²/x₂² ≤ C₂/C₁`; outside
/// that band [`Error::InfeasibleRatio`] is returned.
pub fn invert_change(x1_sq: f64, x2_sq: f64, c1: f64, c2: f64, w: f64) -> Result<(f64, f64)> {
    let det = c1 * c1 - c2 * c2;
    if det == 0.0 {
        return Err(Error::SingularChange(c1));
    }
    let s = 0.5 * w * w / det;
    let y1_sq = s * (c1 * x1_sq - c2 * x2_sq);
    let y2_sq = s * (c1 * x2_sq - c2 * x1_sq);
    let floor = -1e-12 * (x1_sq.abs() + x2_sq.abs()) * w * w;
    if y1_sq < floor || y2_sq < floor {
        let (lo, hi) = if c1 < c2 {
            (c1 / c2, c2 / c1)
        } else {
            (c2 / c1, c1 / c2)
        };
        return Err(Error::InfeasibleRatio {
            ratio: x1_sq / x2_sq,
            z_minus: lo,
            z_plus: hi,
        });
    }
    Ok((y1_sq.max(0.0), y2_sq.max(0.0)))
}

/// Maximum over `grid` and both classical signs of the difference between
/// the classical rule with `μ` from `(λ₁, λ₂)` and the two-solution rule on
/// the constructed seed pair.
///
/// The classical sign `s` corresponds to the branch `s·sign(y₁y₂)` of the
/// two-solution rule.
pub fn verify_equivalence(
    basis: &OscillatorBasis,
    params: &SeedParams,
    lambda1: f64,
    lambda2: f64,
    grid: &[f64],
) -> Result<f64> {
    let basis = if basis.grid() == grid {
        basis.clone()
    } else {
        basis.resample(grid)?
    };
    let (x1, x2) = seed_pair_from_tdho(&basis, params)?;
    let i3 = i3_closed_form(params.c1, params.c2, basis.w)?;
    let coeffs = SuperpositionCoefficients::from_lambdas(lambda1, lambda2, i3, params.k, Sign::Plus, Sign::Plus)?;
    if coeffs.lambda12 < 0.0 {
        return Err(Error::Inadmissible(format!(
            "lambda12 = {} is negative; constructed seed pairs need lambda12 >= 0",
            coeffs.lambda12
        )));
    }
    let mu = mu_from_lambda(lambda1, lambda2, params.c1, params.c2);
    if !(mu.mu1 > 0.0 && mu.mu2 > 0.0) {
        return Err(Error::Inadmissible(format!(
            "mu1 = {}, mu2 = {} must be positive",
            mu.mu1, mu.mu2
        )));
    }
    let mut worst = 0.0f64;
    let rows = basis
        .y1
        .samples()
        .iter()
        .zip(basis.y2.samples())
        .zip(x1.samples().iter().zip(x2.samples()));
    for ((a, b), (s1, s2)) in rows {
        for sign in [Sign::Plus, Sign::Minus] {
            let old = classical_rule(a.x, b.x, mu.mu1, mu.mu2, params.k, basis.w, sign)?;
            let branch = sign * Sign::of(a.x * b.x);
            let new = sr_evaluate_states(s1, s2, &coeffs.with_branch(branch))?;
            worst = worst.max((old - new).abs());
        }
    }
    Ok(worst)
}
