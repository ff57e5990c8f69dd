//! First integrals of the Ermakov system and of pairs of Milne–Pinney
//! solutions, plus drift monitoring along numerical trajectories.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{GeneralizedErmakovSpec, State, Trajectory};
use crate::quadrature::{adaptive_simpson, DEFAULT_MAX_DEPTH};

pub use crate::quadrature::DEFAULT_QUAD_TOL;

/// Default lower limit of the integral in the generalized invariant.
pub const DEFAULT_LOWER_LIMIT: f64 = 1.0;

fn same_time(a: &State, b: &State) -> Result<()> {
    if a.t == b.t {
        Ok(())
    } else {
        Err(Error::MismatchedTimes { t1: a.t, t2: b.t })
    }
}

/// `k·(y/x)² + (x·v_y − y·v_x)²` for a Milne–Pinney state `x_state` and an
/// oscillator state `y_state`.
pub fn ermakov_invariant(x_state: &State, y_state: &State, k: f64) -> Result<f64> {
    same_time(x_state, y_state)?;
    if x_state.x == 0.0 {
        return Err(Error::ZeroPosition);
    }
    let ratio = y_state.x / x_state.x;
    let cross = x_state.x * y_state.v - y_state.x * x_state.v;
    Ok(k * ratio * ratio + cross * cross)
}

/// Invariant of the generalized Ermakov system,
///
/// ```text
/// (x·v_y − y·v_x)² + 2 ∫_L^{x/y} [ −f(1/u)/u³ + u·g(1/u) ] du
/// ```
///
/// with the lower limit `L` explicit; changing `L` shifts the value by a
/// constant.
pub fn generalized_invariant(
    x_state: &State,
    y_state: &State,
    spec: &GeneralizedErmakovSpec,
    quad_tol: f64,
    lower_limit: f64,
) -> Result<f64> {
    same_time(x_state, y_state)?;
    if x_state.x == 0.0 || y_state.x == 0.0 {
        return Err(Error::ZeroPosition);
    }
    if !(lower_limit > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lower limit must be positive, got {lower_limit}"
        )));
    }
    let upper = x_state.x / y_state.x;
    if upper <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "integration interval [{lower_limit}, {upper}] contains u = 0"
        )));
    }
    let cross = x_state.x * y_state.v - y_state.x * x_state.v;
    let integral = adaptive_simpson(
        |u| {
            let w = 1.0 / u;
            Ok(-spec.eval_f(w)? / (u * u * u) + u * spec.eval_g(w)?)
        },
        lower_limit,
        upper,
        quad_tol,
        DEFAULT_MAX_DEPTH,
    )?;
    Ok(cross * cross + 2.0 * integral)
}

/// Value of the mutual invariant of two Milne–Pinney states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MutualInvariant {
    pub value: f64,
    pub k: f64,
    /// The two states it was evaluated on.
    pub pair: (State, State),
}

/// `(a.x·b.v − a.v·b.x)² + k·[(b.x/a.x)² + (a.x/b.x)²]`.
///
/// With a target `x` and seeds `x₁`, `x₂` this single functional gives
/// `I₁ = J(x₁, x)`, `I₂ = J(x₂, x)` and `I₃ = J(x₁, x₂)`. It is symmetric
/// in its arguments and never below `2k` for `k > 0`.
pub fn mutual_invariant(a: &State, b: &State, k: f64) -> Result<MutualInvariant> {
    same_time(a, b)?;
    if a.x == 0.0 || b.x == 0.0 {
        return Err(Error::ZeroPosition);
    }
    let cross = a.x * b.v - a.v * b.x;
    let r = b.x / a.x;
    let s = a.x / b.x;
    Ok(MutualInvariant {
        value: cross * cross + k * (r * r + s * s),
        k,
        pair: (*a, *b),
    })
}

/// Deviation of an invariant from its value at the first sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftReport {
    pub max_abs_drift: f64,
    pub max_rel_drift: f64,
    pub t_of_max: f64,
    pub reference_value: f64,
    pub samples: usize,
}

impl DriftReport {
    /// Drift of a `(t, value)` series, measured against its first entry.
    pub fn from_series(series: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut iter = series.into_iter();
        let (t0, reference) = iter.next().ok_or(Error::DisjointSpans)?;
        let mut report = DriftReport {
            max_abs_drift: 0.0,
            max_rel_drift: 0.0,
            t_of_max: t0,
            reference_value: reference,
            samples: 1,
        };
        let denom = reference.abs();
        for (t, value) in iter {
            report.samples += 1;
            let d = (value - reference).abs();
            if d > report.max_abs_drift {
                report.max_abs_drift = d;
                report.t_of_max = t;
            }
        }
        report.max_rel_drift = if denom > 0.0 {
            report.max_abs_drift / denom
        } else {
            report.max_abs_drift
        };
        Ok(report)
    }
}

/// Pairs of states of two trajectories at common times.
///
/// Shared grids are used as-is; otherwise `b` is interpolated at the
/// samples of `a` that fall inside `b`'s span.
pub fn aligned_states(a: &Trajectory, b: &Trajectory) -> Result<Vec<(State, State)>> {
    if a.same_grid(b) {
        return Ok(a.samples().iter().copied().zip(b.samples().iter().copied()).collect());
    }
    let (b0, b1) = b.span().ok_or(Error::DisjointSpans)?;
    let pairs = a
        .samples()
        .iter()
        .filter(|s| s.t >= b0 && s.t <= b1)
        .map(|s| Ok((*s, b.interpolate(s.t)?)))
        .collect::<Result<Vec<_>>>()?;
    if pairs.is_empty() {
        return Err(Error::DisjointSpans);
    }
    Ok(pairs)
}

/// Drift of the mutual invariant along two Milne–Pinney trajectories.
pub fn invariant_drift(traj_a: &Trajectory, traj_b: &Trajectory, k: f64) -> Result<DriftReport> {
    let pairs = aligned_states(traj_a, traj_b)?;
    let series = pairs
        .iter()
        .map(|(a, b)| Ok((a.t, mutual_invariant(a, b, k)?.value)))
        .collect::<Result<Vec<_>>>()?;
    DriftReport::from_series(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::{integrate_mp_with, FrequencySpec, IntegratorOptions};
    use proptest::prelude::*;

    #[test]
    fn ermakov_examples() {
        let x = State::new(0.4, 1.0, 0.0);
        assert_eq!(ermakov_invariant(&x, &State::new(0.4, 1.0, 0.0), 1.0).unwrap(), 1.0);
        assert_eq!(ermakov_invariant(&x, &State::new(0.4, 0.0, 1.0), 1.0).unwrap(), 1.0);
        assert_eq!(
            ermakov_invariant(&State::new(0.0, 0.0, 1.0), &x, 1.0).unwrap_err(),
            Error::MismatchedTimes { t1: 0.0, t2: 0.4 }
        );
        assert_eq!(
            ermakov_invariant(&State::new(0.4, 0.0, 1.0), &x, 1.0).unwrap_err(),
            Error::ZeroPosition
        );
    }

    #[test]
    fn mutual_examples() {
        let a = State::new(0.0, 1.0, 0.0);
        assert_eq!(mutual_invariant(&a, &a, 1.0).unwrap().value, 2.0);
        let b = State::new(0.0, 2.0, 0.0);
        assert_eq!(mutual_invariant(&a, &b, 1.0).unwrap().value, 4.25);
        let s1 = State::new(0.0, 0.5f64.sqrt(), 0.0);
        let s2 = State::new(0.0, 2f64.sqrt(), 0.0);
        let v = mutual_invariant(&s1, &s2, 1.0).unwrap().value;
        assert!((v - 4.25).abs() < 1e-14);
        assert!(mutual_invariant(&a, &State::new(1.0, 1.0, 0.0), 1.0).is_err());
        assert_eq!(
            mutual_invariant(&a, &State::new(0.0, 0.0, 1.0), 1.0).unwrap_err(),
            Error::ZeroPosition
        );
    }

    #[test]
    fn generalized_invariant_with_zero_shapes_is_cross_term() {
        let spec = GeneralizedErmakovSpec::constant(0.0, 0.0, FrequencySpec::constant(1.0));
        let x = State::new(0.0, 1.3, 0.2);
        let y = State::new(0.0, 0.7, -0.5);
        let cross = 1.3 * -0.5 - 0.7 * 0.2;
        let v = generalized_invariant(&x, &y, &spec, 1e-10, 1.0).unwrap();
        assert_eq!(v, cross * cross);
    }

    #[test]
    fn generalized_invariant_empty_interval() {
        let spec = GeneralizedErmakovSpec::constant(1.0, 3.0, FrequencySpec::constant(1.0));
        let x = State::new(0.0, 1.5, 0.2);
        let y = State::new(0.0, 1.0, 0.1);
        let cross = 1.5 * 0.1 - 1.0 * 0.2;
        let v = generalized_invariant(&x, &y, &spec, 1e-10, 1.5).unwrap();
        assert_eq!(v, cross * cross);
    }

    #[test]
    fn generalized_invariant_reduces_to_ermakov_up_to_constant() {
        // with f ≡ k, g ≡ 0 the integral is k·(y/x)² − k/L²
        let k = 1.7;
        let lower = 0.8;
        let spec = GeneralizedErmakovSpec::constant(k, 0.0, FrequencySpec::constant(1.0));
        for (xs, ys) in [
            (State::new(0.0, 1.1, 0.3), State::new(0.0, 0.4, -0.2)),
            (State::new(0.0, 0.9, -0.6), State::new(0.0, 2.3, 0.9)),
        ] {
            let gen = generalized_invariant(&xs, &ys, &spec, 1e-12, lower).unwrap();
            let erm = ermakov_invariant(&xs, &ys, k).unwrap();
            assert!((gen - erm + k / (lower * lower)).abs() < 1e-10);
        }
    }

    #[test]
    fn generalized_invariant_rejects_interval_through_zero() {
        let spec = GeneralizedErmakovSpec::constant(1.0, 1.0, FrequencySpec::constant(1.0));
        let r = generalized_invariant(
            &State::new(0.0, 1.0, 0.0),
            &State::new(0.0, -1.0, 0.0),
            &spec,
            1e-10,
            1.0,
        );
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn drift_of_identical_trajectories_is_zero() {
        let freq = FrequencySpec::constant(1.0);
        let traj = integrate_mp_with(
            1.0,
            &freq,
            State::new(0.0, 1.3, 0.2),
            5.0,
            &IntegratorOptions::new(1e-10),
        )
        .unwrap();
        let report = invariant_drift(&traj, &traj, 1.0).unwrap();
        assert_eq!(report.max_abs_drift, 0.0);
        assert_eq!(report.reference_value, 2.0);
    }

    #[test]
    fn drift_on_distinct_grids_interpolates() {
        let freq = FrequencySpec::constant(1.0);
        let opts = IntegratorOptions::new(1e-10);
        let a = integrate_mp_with(1.0, &freq, State::new(0.0, 1.3, 0.0), 5.0, &opts).unwrap();
        let b = integrate_mp_with(1.0, &freq, State::new(0.0, 0.8, 0.4), 5.0, &opts).unwrap();
        assert!(!a.same_grid(&b));
        let report = invariant_drift(&a, &b, 1.0).unwrap();
        assert_eq!(report.samples, a.len());
        assert!(report.max_rel_drift < 1e-5);
    }

    #[test]
    fn disjoint_spans_are_rejected() {
        let freq = FrequencySpec::constant(1.0);
        let opts = IntegratorOptions::new(1e-8);
        let a = integrate_mp_with(1.0, &freq, State::new(0.0, 1.3, 0.0), 1.0, &opts).unwrap();
        let b = integrate_mp_with(1.0, &freq, State::new(2.0, 0.8, 0.4), 3.0, &opts).unwrap();
        assert_eq!(invariant_drift(&a, &b, 1.0).unwrap_err(), Error::DisjointSpans);
    }

    fn state_pair() -> impl Strategy<Value = (State, State, f64)> {
        let pos = prop_oneof![1e-3..1e3f64, -1e3..-1e-3f64];
        (pos.clone(), -1e2..1e2f64, pos, -1e2..1e2f64, 1e-3..1e2f64)
            .prop_map(|(xa, va, xb, vb, k)| (State::new(0.0, xa, va), State::new(0.0, xb, vb), k))
    }

    proptest! {
        #[test]
        fn mutual_invariant_floor((a, b, k) in state_pair()) {
            let v = mutual_invariant(&a, &b, k).unwrap().value;
            prop_assert!(v >= 2.0 * k - 1e-12 * k.max(1.0));
        }

        #[test]
        fn mutual_invariant_is_symmetric((a, b, k) in state_pair()) {
            let ab = mutual_invariant(&a, &b, k).unwrap().value;
            let ba = mutual_invariant(&b, &a, k).unwrap().value;
            prop_assert_eq!(ab, ba);
        }

        #[test]
        fn floor_attained_for_identical_states((a, _b, k) in state_pair()) {
            let v = mutual_invariant(&a, &a, k).unwrap().value;
            prop_assert!((v - 2.0 * k).abs() <= 1e-12 * k.max(1.0));
        }
    }
}
