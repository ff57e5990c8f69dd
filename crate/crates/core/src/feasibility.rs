//! Admissibility of superposition coefficients for given seed positions.
//!
//! With `z = (x₁/x₂)²` the seed bracket of the rule is `x₂⁴·P(z)`, where
//! `P(z) = −k(z² + 1) + I₃z`. Its roots `z₋ ≤ z₊` split the positive
//! quadrant into region A (`P < 0`), region B (`P > 0`) and the boundary
//! curves C (`P = 0`). Whether a pair `(λ₁, λ₂)` gives a real positive `x`
//! then depends on the region and on the sign of
//! `P_{I₃,k} = (λ₁z + λ₂)² − 4λ₁₂P(z)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::superposition::{lambda12_from_lambdas, sr_evaluate, Sign, SuperpositionCoefficients};

/// Default relative width of the band around `P(z) = 0` treated as region C.
pub const DEFAULT_REGION_TOL: f64 = 1e-9;
/// Absolute band for the K-class comparison.
pub const K_CLASS_BAND: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    A,
    B,
    C,
}

impl Region {
    pub fn as_char(self) -> char {
        match self {
            Region::A => 'A',
            Region::B => 'B',
            Region::C => 'C',
        }
    }
}

/// Sign class of `P_{I₃,k}` for a coefficient pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KClass {
    /// `P_{I₃,k} > 0`: both branches may be used, after normalizing the sign
    /// of `(λ₁, λ₂)`.
    K1,
    /// `P_{I₃,k} < 0`: only the `+` branch gives a real positive solution.
    K2,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Lambda12Requirement {
    NonPositive,
    NonNegative,
    Unconstrained,
}

/// Value of `P_{I₃,k}` together with the decomposition
/// `4kP(z)/(I₃² − 4k²) + (aλ₁ + bλ₂)²` where it applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondPoly {
    pub value: f64,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub decomposed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub z: f64,
    pub alpha3: f64,
    pub z_minus: f64,
    pub z_plus: f64,
    pub p_of_z: f64,
    pub region: Region,
    pub lambda12_sign_required: Lambda12Requirement,
    /// Coefficients after normalization; absent for a bare region check.
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub lambda12: Option<f64>,
    pub second_poly: Option<SecondPoly>,
    pub k_class: Option<KClass>,
    pub admissible_branches: Vec<Sign>,
    /// Whether `(λ₁, λ₂)` was replaced by `(−λ₁, −λ₂)`.
    pub normalized: bool,
}

fn check(i3: f64, k: f64) -> Result<()> {
    if !(k > 0.0) {
        return Err(Error::InvalidParameter(format!("k must be positive, got {k}")));
    }
    if !(i3 > 2.0 * k) {
        return Err(Error::DegenerateSeeds { i3, two_k: 2.0 * k });
    }
    Ok(())
}

/// `P(z) = −k(z² + 1) + I₃z`.
pub fn p_of_z(z: f64, i3: f64, k: f64) -> f64 {
    -k * (z * z + 1.0) + i3 * z
}

/// Roots `z₋ ≤ z₊` of `P` and `α₃ = I₃/2k`. The roots satisfy `z₋z₊ = 1`.
pub fn z_roots(i3: f64, k: f64) -> Result<(f64, f64, f64)> {
    check(i3, k)?;
    let alpha3 = i3 / (2.0 * k);
    let z_plus = alpha3 + (alpha3 * alpha3 - 1.0).sqrt();
    Ok((1.0 / z_plus, z_plus, alpha3))
}

/// Region of the seed positions `(x₁, x₂)`.
pub fn classify_region(x1: f64, x2: f64, i3: f64, k: f64, tol: f64) -> Result<FeasibilityReport> {
    if !(x1 > 0.0 && x2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "seed positions must be positive, got ({x1}, {x2})"
        )));
    }
    let (z_minus, z_plus, alpha3) = z_roots(i3, k)?;
    let r = x1 / x2;
    let z = r * r;
    let p = p_of_z(z, i3, k);
    let (region, lambda12_sign_required) = if p.abs() <= tol * k.max(i3) {
        (Region::C, Lambda12Requirement::Unconstrained)
    } else if p < 0.0 {
        (Region::A, Lambda12Requirement::NonPositive)
    } else {
        (Region::B, Lambda12Requirement::NonNegative)
    };
    Ok(FeasibilityReport {
        z,
        alpha3,
        z_minus,
        z_plus,
        p_of_z: p,
        region,
        lambda12_sign_required,
        lambda1: None,
        lambda2: None,
        lambda12: None,
        second_poly: None,
        k_class: None,
        admissible_branches: Vec::new(),
        normalized: false,
    })
}

/// `P_{I₃,k}(z, λ₁, λ₂) = (λ₁z + λ₂)² − 4λ₁₂P(z)`.
///
/// The `a`, `b` decomposition is attached where `z − 2P(z)I₃/(I₃² − 4k²)`
/// is nonnegative and both root arguments are, which always holds in
/// region A.
pub fn second_poly(z: f64, lambda1: f64, lambda2: f64, i3: f64, k: f64) -> Result<SecondPoly> {
    check(i3, k)?;
    let d = i3 * i3 - 4.0 * k * k;
    let p = p_of_z(z, i3, k);
    let lambda12 = lambda12_from_lambdas(lambda1, lambda2, i3, k)?;
    let lin = lambda1 * z + lambda2;
    let value = lin * lin - 4.0 * lambda12 * p;
    let shift = 4.0 * p * k / d;
    let (a_sq, b_sq) = (z * z - shift, 1.0 - shift);
    let cross = z - 2.0 * p * i3 / d;
    if a_sq < 0.0 || b_sq < 0.0 || cross < 0.0 {
        return Ok(SecondPoly {
            value,
            a: None,
            b: None,
            decomposed: None,
        });
    }
    let (a, b) = (a_sq.sqrt(), b_sq.sqrt());
    let m = a * lambda1 + b * lambda2;
    Ok(SecondPoly {
        value,
        a: Some(a),
        b: Some(b),
        decomposed: Some(shift + m * m),
    })
}

fn k_class(region: Region, sp: &SecondPoly, lambda1: f64, lambda2: f64, p: f64, d: f64, k: f64) -> KClass {
    let by_sign = |v: f64| {
        if v.abs() <= K_CLASS_BAND {
            KClass::Boundary
        } else if v > 0.0 {
            KClass::K1
        } else {
            KClass::K2
        }
    };
    match (region, sp.a, sp.b) {
        (Region::A, Some(a), Some(b)) => {
            let threshold = (-4.0 * p * k / d).sqrt();
            by_sign((a * lambda1 + b * lambda2).abs() - threshold)
        }
        _ => by_sign(sp.value),
    }
}

/// Full admissibility analysis of `(λ₁, λ₂)` at seed positions `(x₁, x₂)`.
///
/// `admissible_branches` lists the branches on which the rule yields a real
/// positive `x` with the (possibly normalized) coefficients; in class K2
/// only `+` is considered.
pub fn admissible(
    lambda1: f64,
    lambda2: f64,
    x1: f64,
    x2: f64,
    i3: f64,
    k: f64,
    region_tol: f64,
) -> Result<FeasibilityReport> {
    if lambda1 < 0.0 && lambda2 < 0.0 {
        return Err(Error::OutsideK { lambda1, lambda2 });
    }
    let mut report = classify_region(x1, x2, i3, k, region_tol)?;
    let lambda12 = lambda12_from_lambdas(lambda1, lambda2, i3, k)?;
    let violates = match report.lambda12_sign_required {
        Lambda12Requirement::NonPositive => lambda12 > 0.0,
        Lambda12Requirement::NonNegative => lambda12 < 0.0,
        Lambda12Requirement::Unconstrained => false,
    };
    if violates {
        return Err(Error::Lambda12SignViolation {
            lambda12,
            region: report.region.as_char(),
        });
    }
    let d = i3 * i3 - 4.0 * k * k;
    let sp = second_poly(report.z, lambda1, lambda2, i3, k)?;
    let class = k_class(report.region, &sp, lambda1, lambda2, report.p_of_z, d, k);

    let (mut l1, mut l2) = (lambda1, lambda2);
    if class == KClass::K1 && l1 * report.z + l2 <= 0.0 {
        l1 = -l1;
        l2 = -l2;
        report.normalized = true;
    }
    let candidates: &[Sign] = if class == KClass::K2 {
        &[Sign::Plus]
    } else {
        &[Sign::Plus, Sign::Minus]
    };
    let coeffs = SuperpositionCoefficients {
        lambda1: l1,
        lambda2: l2,
        lambda12,
        i1: 2.0 * k * l1 + i3 * l2,
        i2: i3 * l1 + 2.0 * k * l2,
        i3,
        k,
        branch: Sign::Plus,
        parity: Sign::Plus,
    };
    report.admissible_branches = candidates
        .iter()
        .copied()
        .filter(|&b| sr_evaluate(x1, x2, &coeffs.with_branch(b)).is_ok())
        .collect();
    report.lambda1 = Some(l1);
    report.lambda2 = Some(l2);
    report.lambda12 = Some(lambda12);
    report.second_poly = Some(sp);
    report.k_class = Some(class);
    Ok(report)
}
