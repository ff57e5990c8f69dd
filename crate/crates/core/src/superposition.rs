//! The two-solution superposition rule for the Milne–Pinney equation.
//!
//! Given two seed solutions `x₁`, `x₂` of `ẍ = −ω²x + k/x³`, every other
//! solution satisfies
//!
//! ```text
//! x² = λ₁x₁² + λ₂x₂² ± 2·√(λ₁₂·[−k(x₁⁴ + x₂⁴) + I₃x₁²x₂²])
//! ```
//!
//! with constants fixed by the mutual invariants `I₁`, `I₂`, `I₃`.
//!
//! Along actual seed solutions the bracket equals `(x₁x₂w)²` with
//! `w = x₁ẋ₂ − ẋ₁x₂`, so the rule can be written with the signed factor
//! `s = x₁x₂w`. The `±` of the printed rule is then `σ·sign(s)` for a fixed
//! orientation `σ`; trajectory reconstruction works with `s` directly,
//! which keeps `x` smooth through the zeros of the radicand.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariants::mutual_invariant;
use crate::ode::{State, Trajectory};

/// Radicands down to this (negative) value are treated as zero.
pub const RADICAND_TOL: f64 = 1e-12;
/// Relative tolerance for matching a target position at `t₀`.
pub const POSITION_MATCH_TOL: f64 = 1e-9;
/// Absolute tolerance for matching a target velocity at `t₀`.
pub const VELOCITY_MATCH_TOL: f64 = 1e-6;
/// Width to which radicand zero crossings are bisected.
pub const CROSSING_TOL: f64 = 1e-10;

/// A sign in `{+1, −1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    /// `Plus` for `v ≥ 0` (including `+0.0` and `−0.0`), `Minus` otherwise.
    pub fn of(v: f64) -> Self {
        if v < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl std::ops::Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;
    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(format!("sign must be 1 or -1, got {other}")),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// Constants selecting one solution from a pair of seeds.
///
/// `branch` is the `±` inside the rule at the reference time; when the
/// radicand vanishes there it is the sign the rule takes immediately after.
/// `parity` picks positive or negative solutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperpositionCoefficients {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda12: f64,
    #[serde(rename = "I1")]
    pub i1: f64,
    #[serde(rename = "I2")]
    pub i2: f64,
    #[serde(rename = "I3")]
    pub i3: f64,
    pub k: f64,
    pub branch: Sign,
    pub parity: Sign,
}

impl SuperpositionCoefficients {
    /// Coefficients from invariants, with `λ₁₂` from `φ`.
    pub fn from_invariants(i1: f64, i2: f64, i3: f64, k: f64, branch: Sign, parity: Sign) -> Result<Self> {
        let (lambda1, lambda2) = lambdas_from_invariants(i1, i2, i3, k)?;
        Ok(Self {
            lambda1,
            lambda2,
            lambda12: phi(i1, i2, i3, k)?,
            i1,
            i2,
            i3,
            k,
            branch,
            parity,
        })
    }

    /// Coefficients from free `(λ₁, λ₂)`. `I₁` and `I₂` follow by inverting
    /// the λ-formulas: `I₁ = 2kλ₁ + I₃λ₂`, `I₂ = I₃λ₁ + 2kλ₂`.
    pub fn from_lambdas(lambda1: f64, lambda2: f64, i3: f64, k: f64, branch: Sign, parity: Sign) -> Result<Self> {
        check_seeds(i3, k)?;
        if lambda1 < 0.0 && lambda2 < 0.0 {
            return Err(Error::OutsideK { lambda1, lambda2 });
        }
        Ok(Self {
            lambda1,
            lambda2,
            lambda12: lambda12_from_lambdas(lambda1, lambda2, i3, k)?,
            i1: 2.0 * k * lambda1 + i3 * lambda2,
            i2: i3 * lambda1 + 2.0 * k * lambda2,
            i3,
            k,
            branch,
            parity,
        })
    }

    /// `I₃² − 4k²`.
    pub fn denominator(&self) -> f64 {
        self.i3 * self.i3 - 4.0 * self.k * self.k
    }

    pub fn with_parity(self, parity: Sign) -> Self {
        Self { parity, ..self }
    }

    pub fn with_branch(self, branch: Sign) -> Self {
        Self { branch, ..self }
    }
}

fn check_seeds(i3: f64, k: f64) -> Result<()> {
    if !(k > 0.0) {
        return Err(Error::InvalidParameter(format!("k must be positive, got {k}")));
    }
    if !(i3 > 2.0 * k) {
        return Err(Error::DegenerateSeeds { i3, two_k: 2.0 * k });
    }
    Ok(())
}

/// Numerators whose magnitude is at rounding level relative to `scale` are
/// returned as exactly zero.
fn snap(numerator: f64, scale: f64) -> f64 {
    if numerator.abs() <= 64.0 * f64::EPSILON * scale {
        0.0
    } else {
        numerator
    }
}

/// `(λ₁, λ₂)` from the invariants `I₁ = J(x₁,x)`, `I₂ = J(x₂,x)`, `I₃ = J(x₁,x₂)`.
pub fn lambdas_from_invariants(i1: f64, i2: f64, i3: f64, k: f64) -> Result<(f64, f64)> {
    check_seeds(i3, k)?;
    let floor = 2.0 * k * (1.0 - 1e-12);
    if i1 < floor || i2 < floor {
        return Err(Error::InvalidParameter(format!(
            "invariants must be at least 2k = {}, got I1 = {i1}, I2 = {i2}",
            2.0 * k
        )));
    }
    let d = i3 * i3 - 4.0 * k * k;
    Ok(((i2 * i3 - 2.0 * i1 * k) / d, (i1 * i3 - 2.0 * i2 * k) / d))
}

/// `λ₁₂ = (λ₁λ₂I₃ + k(λ₁² + λ₂² − 1)) / (I₃² − 4k²)`.
pub fn lambda12_from_lambdas(lambda1: f64, lambda2: f64, i3: f64, k: f64) -> Result<f64> {
    check_seeds(i3, k)?;
    let d = i3 * i3 - 4.0 * k * k;
    let (a, b) = (lambda1 * lambda2 * i3, k * (lambda1 * lambda1 + lambda2 * lambda2));
    let num = snap(a + b - k, a.abs() + b + k);
    Ok(num / d)
}

/// `φ(I₁, I₂; I₃, k) = (I₁I₂I₃ − (I₁² + I₂² + I₃²)k + 4k³) / (I₃² − 4k²)²`.
pub fn phi(i1: f64, i2: f64, i3: f64, k: f64) -> Result<f64> {
    check_seeds(i3, k)?;
    let d = i3 * i3 - 4.0 * k * k;
    let a = i1 * i2 * i3;
    let b = (i1 * i1 + i2 * i2 + i3 * i3) * k;
    let c = 4.0 * k * k * k;
    Ok(snap(a - b + c, a.abs() + b + c) / (d * d))
}

/// `−k(x₁⁴ + x₂⁴) + I₃x₁²x₂²`, the seed-dependent factor of the radicand.
pub fn seed_bracket(x1: f64, x2: f64, i3: f64, k: f64) -> f64 {
    let (a, b) = (x1 * x1, x2 * x2);
    -k * (a * a + b * b) + i3 * a * b
}

fn clamp_radicand(value: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -RADICAND_TOL {
        Ok(0.0)
    } else {
        Err(Error::NegativeRadicand { value })
    }
}

fn finish(x_sq: f64, parity: Sign) -> Result<f64> {
    if !(x_sq > 0.0) {
        return Err(Error::NonpositiveSquare { value: x_sq });
    }
    Ok(parity.value() * x_sq.sqrt())
}

/// Evaluates the rule at seed positions `x₁`, `x₂`.
pub fn sr_evaluate(x1: f64, x2: f64, coeffs: &SuperpositionCoefficients) -> Result<f64> {
    let c = coeffs;
    let radicand = clamp_radicand(c.lambda12 * seed_bracket(x1, x2, c.i3, c.k))?;
    let x_sq = c.lambda1 * x1 * x1 + c.lambda2 * x2 * x2 + c.branch.value() * 2.0 * radicand.sqrt();
    finish(x_sq, c.parity)
}

/// `x₁x₂(x₁ẋ₂ − ẋ₁x₂)`, whose square is the seed bracket on shell.
pub fn seed_cross(s1: &State, s2: &State) -> f64 {
    s1.x * s2.x * (s1.x * s2.v - s1.v * s2.x)
}

/// Time derivative of [`seed_cross`] along Milne–Pinney solutions. The
/// frequency drops out.
pub fn seed_cross_rate(s1: &State, s2: &State, k: f64) -> f64 {
    let (x1, x2) = (s1.x, s2.x);
    let w = x1 * s2.v - s1.v * x2;
    (s1.v * x2 + x1 * s2.v) * w + x1 * x2 * k * (x1 / (x2 * x2 * x2) - x2 / (x1 * x1 * x1))
}

/// Evaluates the rule on seed states, using `(x₁x₂w)²` in place of the
/// seed bracket. This avoids the cancellation in the bracket near its zeros.
pub fn sr_evaluate_states(s1: &State, s2: &State, coeffs: &SuperpositionCoefficients) -> Result<f64> {
    let c = coeffs;
    let s = seed_cross(s1, s2);
    let radicand = clamp_radicand(c.lambda12 * s * s)?;
    let x_sq = c.lambda1 * s1.x * s1.x + c.lambda2 * s2.x * s2.x + c.branch.value() * 2.0 * radicand.sqrt();
    finish(x_sq, c.parity)
}

/// `ẋ` of a solution at position `x` from its invariant `I₂` with the seed
/// `x₂`: `ẋ₂x/x₂ ± √(−kx²/x₂⁴ + I₂/x₂² − k/x²)`.
pub fn velocity_from_invariant(x: f64, x2_state: &State, i2: f64, k: f64, vsign: Sign) -> Result<f64> {
    let x2 = x2_state.x;
    if x == 0.0 || x2 == 0.0 {
        return Err(Error::ZeroPosition);
    }
    let x2_sq = x2 * x2;
    let radicand = clamp_radicand(-k * x * x / (x2_sq * x2_sq) + i2 / x2_sq - k / (x * x))?;
    Ok(x2_state.v * x / x2 + vsign.value() * radicand.sqrt())
}

/// Normalized residual of the quartic satisfied by `x` given the seeds and
/// the invariants:
///
/// ```text
/// (I₂² − 4k²)x₁⁴ − 2(I₁I₂ − 2I₃k)x₁²x₂² + (I₁² − 4k²)x₂⁴
///   − 2((I₂I₃ − 2I₁k)x₁² + (I₁I₃ − 2I₂k)x₂²)x² + (I₃² − 4k²)x⁴
/// ```
///
/// divided by the largest absolute monomial.
pub fn quartic_residual(x: f64, x1: f64, x2: f64, i1: f64, i2: f64, i3: f64, k: f64) -> f64 {
    let (a, b, c) = (x1 * x1, x2 * x2, x * x);
    let kk = 4.0 * k * k;
    let terms = [
        (i2 * i2 - kk) * a * a,
        -2.0 * (i1 * i2 - 2.0 * i3 * k) * a * b,
        (i1 * i1 - kk) * b * b,
        -2.0 * (i2 * i3 - 2.0 * i1 * k) * a * c,
        -2.0 * (i1 * i3 - 2.0 * i2 * k) * b * c,
        (i3 * i3 - kk) * c * c,
    ];
    let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    terms.iter().sum::<f64>().abs() / scale
}

/// Coefficients reproducing `target` from two seeds at a common time.
///
/// The branch is the one whose value matches `target.x`. When both match
/// (radicand zero at `t₀`), the target velocity decides which way the rule
/// continues; `+1` is used when that is also undecided.
pub fn coefficients_from_target(
    seed1: &State,
    seed2: &State,
    target: &State,
    k: f64,
) -> Result<SuperpositionCoefficients> {
    let i1 = mutual_invariant(seed1, target, k)?.value;
    let i2 = mutual_invariant(seed2, target, k)?.value;
    let i3 = mutual_invariant(seed1, seed2, k)?.value;
    let parity = Sign::of(target.x);
    let coeffs = SuperpositionCoefficients::from_invariants(i1, i2, i3, k, Sign::Plus, parity)?;

    let tol = POSITION_MATCH_TOL * target.x.abs().max(1.0);
    let plus = sr_evaluate_states(seed1, seed2, &coeffs);
    let minus = sr_evaluate_states(seed1, seed2, &coeffs.with_branch(Sign::Minus));
    let matches = |r: &Result<f64>| r.as_ref().is_ok_and(|x| (x - target.x).abs() <= tol);
    let branch = match (matches(&plus), matches(&minus)) {
        (true, false) => Sign::Plus,
        (false, true) => Sign::Minus,
        (true, true) => forward_branch(seed1, seed2, target, &coeffs),
        (false, false) => return Err(Error::BranchUnresolvable),
    };
    let coeffs = coeffs.with_branch(branch);

    let vmatch = [Sign::Plus, Sign::Minus].into_iter().any(|vs| {
        velocity_from_invariant(target.x, seed2, i2, k, vs)
            .is_ok_and(|v| (v - target.v).abs() <= VELOCITY_MATCH_TOL * target.v.abs().max(1.0))
    });
    if !vmatch {
        return Err(Error::BranchUnresolvable);
    }
    Ok(coeffs)
}

/// Branch sign just after a reference time at which the radicand vanishes.
fn forward_branch(s1: &State, s2: &State, target: &State, c: &SuperpositionCoefficients) -> Sign {
    if c.lambda12 <= 0.0 {
        return Sign::Plus;
    }
    // x·ẋ = λ₁x₁ẋ₁ + λ₂x₂ẋ₂ + σ√λ₁₂·ṡ fixes the orientation σ
    let rest = target.x * target.v - c.lambda1 * s1.x * s1.v - c.lambda2 * s2.x * s2.v;
    let rate = seed_cross_rate(s1, s2, c.k);
    let scale = c.lambda12.sqrt() * rate.abs();
    if scale <= VELOCITY_MATCH_TOL * target.x.abs().max(1.0) || rest.abs() <= 0.5 * scale {
        return Sign::Plus;
    }
    // orientation σ = sign(rest·ṡ); the branch after t₀ is σ·sign(ṡ) = sign(rest)
    Sign::of(rest)
}

/// Orientation `σ` with `±(t) = σ·sign(s(t))`, recovered from the stored
/// branch at the reference state.
fn orientation(s1: &State, s2: &State, c: &SuperpositionCoefficients) -> Sign {
    let s = seed_cross(s1, s2);
    if s != 0.0 {
        c.branch * Sign::of(s)
    } else {
        let rate = seed_cross_rate(s1, s2, c.k);
        if rate != 0.0 {
            c.branch * Sign::of(rate)
        } else {
            c.branch
        }
    }
}

/// Accuracy of a reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionReport {
    /// Deviation from the reference trajectory, when one was supplied.
    pub max_abs_err: Option<f64>,
    pub max_rel_err: Option<f64>,
    pub quartic_residual_max: f64,
    /// Radicand zero crossings at which the `±` of the rule toggles.
    pub sign_flip_times: Vec<f64>,
}

/// Rebuilds the solution selected by `coeffs` on the common grid of the
/// two seeds. Coefficients refer to the first sample.
///
/// With `reference` the result is compared against that trajectory at the
/// grid points it covers.
pub fn reconstruct_trajectory(
    seed1: &Trajectory,
    seed2: &Trajectory,
    coeffs: &SuperpositionCoefficients,
    reference: Option<&Trajectory>,
) -> Result<(Trajectory, ReconstructionReport)> {
    if !seed1.same_grid(seed2) {
        return Err(Error::GridMismatch);
    }
    if seed1.freq() != seed2.freq() {
        return Err(Error::ConfigMismatch("seeds use different frequencies".into()));
    }
    for k in [seed1.k(), seed2.k()] {
        if k != Some(coeffs.k) {
            return Err(Error::ConfigMismatch(format!(
                "seed k {k:?} differs from coefficient k {}",
                coeffs.k
            )));
        }
    }
    let c = coeffs;
    let k = c.k;
    let (Some(f1), Some(f2)) = (seed1.first(), seed2.first()) else {
        return Err(Error::DisjointSpans);
    };
    let sigma = orientation(f1, f2, c).value();
    let root = if c.lambda12 > 0.0 { c.lambda12.sqrt() } else { 0.0 };

    let mut samples = Vec::with_capacity(seed1.len());
    let mut quartic_max = 0.0f64;
    for (a, b) in seed1.samples().iter().zip(seed2.samples()) {
        let s = seed_cross(a, b);
        clamp_radicand(c.lambda12 * s * s)?;
        let x_sq = c.lambda1 * a.x * a.x + c.lambda2 * b.x * b.x + 2.0 * sigma * root * s;
        let x = finish(x_sq, c.parity)?;
        let rate = seed_cross_rate(a, b, k);
        let v = (c.lambda1 * a.x * a.v + c.lambda2 * b.x * b.v + sigma * root * rate) / x;
        quartic_max = quartic_max.max(quartic_residual(x, a.x, b.x, c.i1, c.i2, c.i3, k));
        samples.push(State::new(a.t, x, v));
    }

    let sign_flip_times = if root > 0.0 {
        crossing_times(seed1, seed2)?
    } else {
        Vec::new()
    };
    let traj = Trajectory::milne_pinney(samples, k, seed1.freq().clone(), seed1.tol().max(seed2.tol()))?;

    let (max_abs_err, max_rel_err) = match reference {
        Some(r) => {
            let (abs, rel) = compare(&traj, r)?;
            (Some(abs), Some(rel))
        }
        None => (None, None),
    };
    Ok((
        traj,
        ReconstructionReport {
            max_abs_err,
            max_rel_err,
            quartic_residual_max: quartic_max,
            sign_flip_times,
        },
    ))
}

/// Sign changes of `x₁x₂w` between grid points, bisected on the dense
/// output of the seeds.
fn crossing_times(seed1: &Trajectory, seed2: &Trajectory) -> Result<Vec<f64>> {
    let s_at = |t: f64| -> Result<f64> { Ok(seed_cross(&seed1.interpolate(t)?, &seed2.interpolate(t)?)) };
    let mut out = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for (a, b) in seed1.samples().iter().zip(seed2.samples()) {
        let s = seed_cross(a, b);
        if s == 0.0 {
            continue;
        }
        if let Some((tp, sp)) = prev {
            if sp.signum() != s.signum() {
                let (mut lo, mut hi) = (tp, a.t);
                while hi - lo > CROSSING_TOL {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if s_at(mid)?.signum() == sp.signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                out.push(0.5 * (lo + hi));
            }
        }
        prev = Some((a.t, s));
    }
    Ok(out)
}

/// Max absolute and relative position error of `traj` against `reference`.
fn compare(traj: &Trajectory, reference: &Trajectory) -> Result<(f64, f64)> {
    let pairs = crate::invariants::aligned_states(traj, reference)?;
    Ok(pairs.iter().fold((0.0f64, 0.0f64), |(ma, mr), (p, q)| {
        let d = (p.x - q.x).abs();
        (ma.max(d), mr.max(d / q.x.abs()))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::{integrate_mp_with, uniform_grid, FrequencySpec, IntegratorOptions};
    use proptest::prelude::*;

    const K: f64 = 1.0;

    fn worked() -> SuperpositionCoefficients {
        SuperpositionCoefficients::from_invariants(2.5, 2.5, 4.25, K, Sign::Plus, Sign::Plus).unwrap()
    }

    #[test]
    fn lambda_examples() {
        let (l1, l2) = lambdas_from_invariants(2.5, 2.5, 4.25, 1.0).unwrap();
        assert!((l1 - 0.4).abs() < 1e-15 && (l2 - 0.4).abs() < 1e-15);
        let i = 3.7;
        let (l1, l2) = lambdas_from_invariants(i, i, i, 1.2).unwrap();
        assert!((l1 - i / (i + 2.4)).abs() < 1e-15 && (l1 - l2).abs() == 0.0);
        let (l1, l2) = lambdas_from_invariants(2.0, 5.0, 5.0, 1.0).unwrap();
        assert!((l1 - 1.0).abs() < 1e-15 && l2.abs() < 1e-15);
        assert_eq!(
            lambdas_from_invariants(2.5, 2.5, 2.0, 1.0).unwrap_err(),
            Error::DegenerateSeeds { i3: 2.0, two_k: 2.0 }
        );
    }

    #[test]
    fn lambda12_examples() {
        assert!(lambda12_from_lambdas(0.4, 0.4, 4.25, 1.0).unwrap().abs() < 1e-15);
        assert_eq!(lambda12_from_lambdas(1.0, 0.0, 7.0, 2.0).unwrap(), 0.0);
        assert!((lambda12_from_lambdas(0.0, 0.0, 4.0, 1.0).unwrap() + 1.0 / 12.0).abs() < 1e-16);
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(2.5, 2.5, 4.25, 1.0).unwrap(), 0.0);
        assert_eq!(phi(2.0, 5.0, 5.0, 1.0).unwrap(), 0.0);
        assert!(phi(2.5, 2.5, 1.5, 1.0).is_err());
    }

    #[test]
    fn sr_examples() {
        let c = worked();
        let (x1, x2) = (0.5f64.sqrt(), 2f64.sqrt());
        assert!((sr_evaluate(x1, x2, &c).unwrap() - 1.0).abs() < 1e-15);
        assert!((sr_evaluate(x1, x2, &c.with_parity(Sign::Minus)).unwrap() + 1.0).abs() < 1e-15);
        let id = SuperpositionCoefficients::from_lambdas(1.0, 0.0, 4.25, K, Sign::Plus, Sign::Plus).unwrap();
        assert_eq!(id.lambda12, 0.0);
        assert_eq!(sr_evaluate(1.37, 0.6, &id).unwrap(), 1.37);
    }

    #[test]
    fn sr_errors() {
        let c = SuperpositionCoefficients::from_lambdas(0.0, 0.0, 4.0, K, Sign::Plus, Sign::Plus).unwrap();
        assert!(matches!(sr_evaluate(1.0, 1.0, &c), Err(Error::NegativeRadicand { .. })));
        let c = SuperpositionCoefficients::from_lambdas(-1.0, 0.5, 4.25, K, Sign::Plus, Sign::Plus).unwrap();
        // region A point (z = 9) with λ₁₂ ≤ 0 but x² < 0
        assert!(c.lambda12 <= 0.0);
        assert!(matches!(
            sr_evaluate(3.0, 1.0, &c),
            Err(Error::NonpositiveSquare { .. })
        ));
    }

    #[test]
    fn from_lambdas_round_trips_invariants() {
        let c = SuperpositionCoefficients::from_lambdas(0.3, 0.9, 5.1, 1.3, Sign::Plus, Sign::Plus).unwrap();
        let (l1, l2) = lambdas_from_invariants(c.i1, c.i2, c.i3, c.k).unwrap();
        assert!((l1 - 0.3).abs() < 1e-14 && (l2 - 0.9).abs() < 1e-14);
        assert!((phi(c.i1, c.i2, c.i3, c.k).unwrap() - c.lambda12).abs() < 1e-14);
        assert!(matches!(
            SuperpositionCoefficients::from_lambdas(-0.1, -0.1, 5.0, 1.0, Sign::Plus, Sign::Plus),
            Err(Error::OutsideK { .. })
        ));
    }

    #[test]
    fn velocity_examples() {
        let v = velocity_from_invariant(1.0, &State::new(0.0, 2f64.sqrt(), 0.0), 2.5, 1.0, Sign::Plus).unwrap();
        assert!(v.abs() < 1e-7);
        let s = State::new(0.0, 1.4, -0.3);
        assert_eq!(velocity_from_invariant(1.4, &s, 2.0, 1.0, Sign::Minus).unwrap(), -0.3);
        let v = velocity_from_invariant(2.0, &State::new(0.0, 1.0, 0.0), 4.25, 1.0, Sign::Plus).unwrap();
        assert_eq!(v, 0.0);
        assert!(matches!(
            velocity_from_invariant(5.0, &State::new(0.0, 1.0, 0.0), 2.0, 1.0, Sign::Plus),
            Err(Error::NegativeRadicand { .. })
        ));
    }

    #[test]
    fn quartic_examples() {
        let (x1, x2) = (0.5f64.sqrt(), 2f64.sqrt());
        assert!(quartic_residual(1.0, x1, x2, 2.5, 2.5, 4.25, 1.0) < 1e-12);
        assert_eq!(quartic_residual(1.3, 1.3, 0.7, 2.0, 4.9, 4.9, 1.0), 0.0);
        assert!(quartic_residual(1.1, x1, x2, 2.5, 2.5, 4.25, 1.0) > 1e-3);
    }

    #[test]
    fn coefficients_for_worked_chain() {
        let s1 = State::new(0.0, 0.5f64.sqrt(), 0.0);
        let s2 = State::new(0.0, 2f64.sqrt(), 0.0);
        let c = coefficients_from_target(&s1, &s2, &State::new(0.0, 1.0, 0.0), 1.0).unwrap();
        assert!((c.lambda1 - 0.4).abs() < 1e-14 && (c.lambda2 - 0.4).abs() < 1e-14);
        assert_eq!(c.lambda12, 0.0);
        assert_eq!((c.branch, c.parity), (Sign::Plus, Sign::Plus));
        let n = coefficients_from_target(&s1, &s2, &State::new(0.0, -1.0, 0.0), 1.0).unwrap();
        assert_eq!((n.lambda1, n.lambda2, n.parity), (c.lambda1, c.lambda2, Sign::Minus));
        let same = coefficients_from_target(&s1, &s2, &s1, 1.0).unwrap();
        assert!((same.lambda1 - 1.0).abs() < 1e-14 && same.lambda2.abs() < 1e-14);
        assert_eq!(same.lambda12, 0.0);
    }

    #[test]
    fn coefficients_reject_identical_seeds() {
        let s = State::new(0.0, 1.2, 0.1);
        assert!(matches!(
            coefficients_from_target(&s, &s, &State::new(0.0, 1.0, 0.0), 1.0),
            Err(Error::DegenerateSeeds { .. })
        ));
    }

    fn seeds(freq: &FrequencySpec, t_end: f64, a: State, b: State) -> (Trajectory, Trajectory, IntegratorOptions) {
        let opts = IntegratorOptions::new(1e-10).with_grid(uniform_grid(a.t, t_end, 401));
        (
            integrate_mp_with(K, freq, a, t_end, &opts).unwrap(),
            integrate_mp_with(K, freq, b, t_end, &opts).unwrap(),
            opts,
        )
    }

    #[test]
    fn identity_coefficients_return_seed1() {
        let freq = FrequencySpec::constant(1.0);
        let (y1, y2, _) = seeds(&freq, 5.0, State::new(0.0, 1.3, 0.2), State::new(0.0, 0.8, -0.1));
        let c = SuperpositionCoefficients::from_lambdas(1.0, 0.0, 4.25, K, Sign::Plus, Sign::Plus).unwrap();
        let (r, rep) = reconstruct_trajectory(&y1, &y2, &c, None).unwrap();
        for (p, q) in r.samples().iter().zip(y1.samples()) {
            assert_eq!(p.x, q.x);
        }
        assert!(rep.sign_flip_times.is_empty());
    }

    #[test]
    fn modulated_round_trip_with_flip_records() {
        let freq = FrequencySpec::sinusoidal(1.0, 0.1, 1.0);
        let (y1, y2, opts) = seeds(&freq, 10.0, State::new(0.0, 1.3, 0.0), State::new(0.0, 0.8, 0.4));
        let init = State::new(0.0, 1.7, -0.3);
        let target = integrate_mp_with(K, &freq, init, 10.0, &opts).unwrap();
        let c = coefficients_from_target(y1.first().unwrap(), y2.first().unwrap(), &init, K).unwrap();
        let (r, rep) = reconstruct_trajectory(&y1, &y2, &c, Some(&target)).unwrap();
        assert!(rep.max_rel_err.unwrap() <= 1e-6, "{rep:?}");
        assert!(rep.quartic_residual_max <= 1e-8, "{rep:?}");
        for w in r.samples().windows(2) {
            assert!(w[0].x > 0.0);
        }
        // the flips are the zeros of x₁x₂w
        for &t in &rep.sign_flip_times {
            let s = seed_cross(&y1.interpolate(t).unwrap(), &y2.interpolate(t).unwrap());
            assert!(s.abs() < 1e-6, "{t} {s}");
        }
        assert!(!rep.sign_flip_times.is_empty());
    }

    #[test]
    fn parity_negates_reconstruction() {
        let freq = FrequencySpec::constant(1.0);
        let (y1, y2, _) = seeds(&freq, 5.0, State::new(0.0, 1.3, 0.0), State::new(0.0, 0.8, 0.4));
        let c =
            coefficients_from_target(y1.first().unwrap(), y2.first().unwrap(), &State::new(0.0, 1.1, 0.5), K).unwrap();
        let (p, _) = reconstruct_trajectory(&y1, &y2, &c, None).unwrap();
        let (n, _) = reconstruct_trajectory(&y1, &y2, &c.with_parity(Sign::Minus), None).unwrap();
        for (a, b) in p.samples().iter().zip(n.samples()) {
            assert_eq!(a.x, -b.x);
            assert_eq!(a.v, -b.v);
        }
    }

    #[test]
    fn zero_radicand_start_follows_target() {
        // seeds with w = 0 at t₀, so both branches match the target position
        let freq = FrequencySpec::constant(1.0);
        let (y1, y2, opts) = seeds(&freq, 10.0, State::new(0.0, 1.3, 0.0), State::new(0.0, 0.8, 0.0));
        for v0 in [0.6, -0.6] {
            let init = State::new(0.0, 1.1, v0);
            let target = integrate_mp_with(K, &freq, init, 10.0, &opts).unwrap();
            let c = coefficients_from_target(y1.first().unwrap(), y2.first().unwrap(), &init, K).unwrap();
            let (_, rep) = reconstruct_trajectory(&y1, &y2, &c, Some(&target)).unwrap();
            assert!(rep.max_rel_err.unwrap() <= 1e-6, "v0 {v0}: {rep:?}");
        }
    }

    #[test]
    fn mismatched_seeds_are_rejected() {
        let (y1, _, opts) = seeds(
            &FrequencySpec::constant(1.0),
            2.0,
            State::new(0.0, 1.3, 0.0),
            State::new(0.0, 0.8, 0.4),
        );
        let other = integrate_mp_with(K, &FrequencySpec::constant(1.5), State::new(0.0, 0.8, 0.4), 2.0, &opts).unwrap();
        let c = worked();
        assert!(matches!(
            reconstruct_trajectory(&y1, &other, &c, None),
            Err(Error::ConfigMismatch(_))
        ));
        let coarse = other.resample(&uniform_grid(0.0, 2.0, 11)).unwrap();
        assert_eq!(
            reconstruct_trajectory(&y1, &coarse, &c, None).unwrap_err(),
            Error::GridMismatch
        );
    }

    fn state() -> impl Strategy<Value = State> {
        (0.3..3.0f64, -2.0..2.0f64).prop_map(|(x, v)| State::new(0.0, x, v))
    }

    proptest! {
        #[test]
        fn phi_matches_composed_formula(a in state(), b in state(), c in state(), k in 0.2..3.0f64) {
            let i3 = mutual_invariant(&a, &b, k).unwrap().value;
            prop_assume!(i3 > 2.0 * k * (1.0 + 1e-6));
            let i1 = mutual_invariant(&a, &c, k).unwrap().value;
            let i2 = mutual_invariant(&b, &c, k).unwrap().value;
            let (l1, l2) = lambdas_from_invariants(i1, i2, i3, k).unwrap();
            let direct = phi(i1, i2, i3, k).unwrap();
            let composed = lambda12_from_lambdas(l1, l2, i3, k).unwrap();
            let d = i3 * i3 - 4.0 * k * k;
            let scale = (i1 * i2 * i3 + (i1 * i1 + i2 * i2 + i3 * i3) * k) / (d * d);
            prop_assert!((direct - composed).abs() <= 1e-10 * (direct.abs() + composed.abs()) + 1e-13 * scale,
                "{direct} vs {composed}");
        }

        #[test]
        fn sign_lemma(a in state(), b in state(), c in state(), k in 0.2..3.0f64) {
            let i3 = mutual_invariant(&a, &b, k).unwrap().value;
            prop_assume!(i3 > 2.0 * k * (1.0 + 1e-9));
            let i1 = mutual_invariant(&a, &c, k).unwrap().value;
            let i2 = mutual_invariant(&b, &c, k).unwrap().value;
            let (l1, l2) = lambdas_from_invariants(i1, i2, i3, k).unwrap();
            prop_assert!(!(l1 < 0.0 && l2 < 0.0), "{l1} {l2}");
        }

        #[test]
        fn target_is_reproduced_at_reference_time(a in state(), b in state(), c in state()) {
            let i3 = mutual_invariant(&a, &b, K).unwrap().value;
            prop_assume!(i3 > 2.0 * K * (1.0 + 1e-6));
            let coeffs = coefficients_from_target(&a, &b, &c, K).unwrap();
            let x = sr_evaluate_states(&a, &b, &coeffs).unwrap();
            prop_assert!((x - c.x).abs() <= 1e-9 * c.x.abs().max(1.0));
            prop_assert!(quartic_residual(c.x, a.x, b.x, coeffs.i1, coeffs.i2, coeffs.i3, K) < 1e-10);
        }
    }
}
