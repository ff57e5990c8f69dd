//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Randomized criteria draw from ChaCha8 seeded with `ACCEPTANCE_SEED`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use approx::relative_eq;
use pinney::classical::{
    i3_closed_form, mu_from_lambda, seed_pair_from_tdho, verify_equivalence, OscillatorBasis, SeedParams,
};
use pinney::feasibility::{admissible, classify_region, z_roots, Lambda12Requirement, Region, DEFAULT_REGION_TOL};
use pinney::invariants::{generalized_invariant, invariant_drift, mutual_invariant, DriftReport, DEFAULT_LOWER_LIMIT};
use pinney::ode::{
    integrate_generalized_ermakov_with, integrate_mp_with, integrate_tdho_with, uniform_grid, FrequencySpec,
    GeneralizedErmakovSpec, IntegratorOptions, State,
};
use pinney::superposition::{coefficients_from_target, lambdas_from_invariants, reconstruct_trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ACCEPTANCE_SEED: u64 = 0x5EED_2008;
const TOL: f64 = 1e-10;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("error: {e:?}")
}

fn modulated() -> FrequencySpec {
    FrequencySpec::sinusoidal(1.0, 0.1, 1.0)
}

fn invariant_constancy() -> Outcome {
    let opts = IntegratorOptions::new(TOL).with_grid(uniform_grid(0.0, 20.0, 2001));
    let mut worst = 0.0f64;
    for freq in [FrequencySpec::constant(1.0), modulated()] {
        let a = integrate_mp_with(1.0, &freq, State::new(0.0, 1.3, 0.0), 20.0, &opts).map_err(err)?;
        let b = integrate_mp_with(1.0, &freq, State::new(0.0, 0.8, 0.4), 20.0, &opts).map_err(err)?;
        worst = worst.max(invariant_drift(&a, &b, 1.0).map_err(err)?.max_rel_drift);
    }
    check(
        worst <= 1e-8,
        format!("max relative drift of I3 {worst:.2e} (limit 1e-8)"),
    )
}

fn random_state(rng: &mut ChaCha8Rng) -> State {
    State::new(0.0, rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0))
}

fn round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(ACCEPTANCE_SEED);
    let (mut worst_err, mut worst_quartic, mut flips, mut cases) = (0.0f64, 0.0f64, 0usize, 0usize);
    while cases < 50 {
        let k = rng.gen_range(0.5..2.0);
        let freq = if rng.gen_bool(0.5) {
            FrequencySpec::constant(rng.gen_range(0.5..2.0))
        } else {
            FrequencySpec::sinusoidal(
                rng.gen_range(0.8..1.5),
                rng.gen_range(-0.2..0.2),
                rng.gen_range(0.5..2.0),
            )
        };
        let (s1, s2, target) = (random_state(&mut rng), random_state(&mut rng), random_state(&mut rng));
        let i3 = mutual_invariant(&s1, &s2, k).map_err(err)?.value;
        if i3 <= 2.0 * k * (1.0 + 1e-3) {
            continue;
        }
        cases += 1;
        let opts = IntegratorOptions::new(TOL).with_grid(uniform_grid(0.0, 10.0, 1001));
        let y1 = integrate_mp_with(k, &freq, s1, 10.0, &opts).map_err(err)?;
        let y2 = integrate_mp_with(k, &freq, s2, 10.0, &opts).map_err(err)?;
        let direct = integrate_mp_with(k, &freq, target, 10.0, &opts).map_err(err)?;
        let coeffs = coefficients_from_target(&s1, &s2, &target, k).map_err(err)?;
        let (_, report) = reconstruct_trajectory(&y1, &y2, &coeffs, Some(&direct)).map_err(err)?;
        worst_err = worst_err.max(report.max_rel_err.unwrap_or(f64::INFINITY));
        worst_quartic = worst_quartic.max(report.quartic_residual_max);
        flips += report.sign_flip_times.len();
    }
    check(
        worst_err <= 1e-6 && worst_quartic <= 1e-8,
        format!(
            "{cases} cases, max relative error {worst_err:.2e} (limit 1e-6), max quartic residual {worst_quartic:.2e} (limit 1e-8), {flips} branch toggles"
        ),
    )
}

fn worked_chain() -> Outcome {
    let grid = uniform_grid(0.0, 2.0 * PI, 629);
    let basis = OscillatorBasis::constant_frequency(1.0, &grid).map_err(err)?;
    let params = SeedParams::new(0.25, 1.0, 1.0).map_err(err)?;
    let (x1, x2) = seed_pair_from_tdho(&basis, &params).map_err(err)?;
    let (s1, s2) = (x1.samples()[0], x2.samples()[0]);
    let i3 = mutual_invariant(&s1, &s2, 1.0).map_err(err)?.value;
    let i3_formula = i3_closed_form(0.25, 1.0, basis.w()).map_err(err)?;
    let (zm, zp, _) = z_roots(i3, 1.0).map_err(err)?;
    let c = coefficients_from_target(&s1, &s2, &State::new(0.0, 1.0, 0.0), 1.0).map_err(err)?;
    let (x, _) = reconstruct_trajectory(&x1, &x2, &c, None).map_err(err)?;
    let dev = x.samples().iter().map(|s| (s.x - 1.0).abs()).fold(0.0, f64::max);
    let ok = relative_eq!(i3, 4.25, max_relative = 1e-12)
        && i3_formula == 4.25
        && relative_eq!(zm, 0.25, max_relative = 1e-12)
        && relative_eq!(zp, 4.0, max_relative = 1e-12)
        && relative_eq!(c.lambda1, 0.4, max_relative = 1e-12)
        && relative_eq!(c.lambda2, 0.4, max_relative = 1e-12)
        && c.lambda12 == 0.0
        && dev <= 1e-8;
    check(
        ok,
        format!(
            "I3 {i3} (closed form {i3_formula}), z- {zm}, z+ {zp}, lambda1 {:.15}, lambda2 {:.15}, lambda12 {}, max |x - 1| {dev:.2e}",
            c.lambda1, c.lambda2, c.lambda12
        ),
    )
}

fn equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(ACCEPTANCE_SEED ^ 4);
    let (mut worst_diff, mut worst_identity, mut cases) = (0.0f64, 0.0f64, 0usize);
    while cases < 50 {
        let k: f64 = rng.gen_range(0.5..2.0);
        let omega = rng.gen_range(0.5..2.0);
        let c1 = rng.gen_range(0.05..0.95) * k.sqrt() / 2.0;
        let (l1, l2) = (rng.gen_range(-0.5..2.0), rng.gen_range(-0.5..2.0));
        let params = SeedParams::for_wronskian(c1, k, 1.0).map_err(err)?;
        let i3 = i3_closed_form(params.c1, params.c2, 1.0).map_err(err)?;
        let grid = uniform_grid(0.0, 2.0 * PI / omega, 200);
        let basis = OscillatorBasis::constant_frequency(omega, &grid).map_err(err)?;
        let mu = mu_from_lambda(l1, l2, params.c1, params.c2);
        let (x1, x2) = seed_pair_from_tdho(&basis, &params).map_err(err)?;
        let (a, b) = (x1.samples()[0], x2.samples()[0]);
        let Ok(report) = admissible(l1, l2, a.x, b.x, i3, k, DEFAULT_REGION_TOL) else {
            continue;
        };
        let lambda12 = report.lambda12.unwrap_or(f64::NAN);
        if lambda12 < 0.0 || mu.mu1 <= 0.0 || mu.mu2 <= 0.0 {
            continue;
        }
        cases += 1;
        worst_diff = worst_diff.max(verify_equivalence(&basis, &params, l1, l2, &grid).map_err(err)?);
        let lhs = mu.discriminant(k, basis.w());
        let rhs = lambda12 * (i3 * i3 - 4.0 * k * k);
        let rel = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
        worst_identity = worst_identity.max(if lhs == rhs { 0.0 } else { rel });
    }
    check(
        worst_diff <= 1e-8 && worst_identity <= 1e-9,
        format!(
            "{cases} cases, max pointwise difference {worst_diff:.2e} (limit 1e-8), mu identity relative gap {worst_identity:.2e} (limit 1e-9)"
        ),
    )
}

fn state_corpus() -> (Vec<(State, State, State, f64)>, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(ACCEPTANCE_SEED ^ 5);
    let draw = |rng: &mut ChaCha8Rng| {
        let x: f64 = rng.gen_range(0.01..10.0);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        State::new(0.0, sign * x, rng.gen_range(-10.0..10.0))
    };
    let corpus = (0..1000)
        .map(|_| {
            (
                draw(&mut rng),
                draw(&mut rng),
                draw(&mut rng),
                rng.gen_range(0.01..10.0),
            )
        })
        .collect();
    (corpus, rng)
}

fn floor_bounds() -> Outcome {
    let (corpus, mut rng) = state_corpus();
    let mut min_gap = f64::INFINITY;
    for (a, b, _, k) in &corpus {
        let v = mutual_invariant(a, b, *k).map_err(err)?.value;
        min_gap = min_gap.min(v - (2.0 * k - 1e-12));
    }
    // distinct integrated solutions keep I3 strictly above 2k
    let mut min_excess = f64::INFINITY;
    for _ in 0..20 {
        let k = rng.gen_range(0.5..2.0);
        let freq = FrequencySpec::sinusoidal(1.0, rng.gen_range(-0.2..0.2), 1.0);
        let opts = IntegratorOptions::new(TOL).with_grid(uniform_grid(0.0, 5.0, 101));
        let a = integrate_mp_with(k, &freq, random_state(&mut rng), 5.0, &opts).map_err(err)?;
        let b = integrate_mp_with(k, &freq, random_state(&mut rng), 5.0, &opts).map_err(err)?;
        for (p, q) in a.samples().iter().zip(b.samples()) {
            min_excess = min_excess.min(mutual_invariant(p, q, k).map_err(err)?.value - 2.0 * k);
        }
    }
    check(
        min_gap >= 0.0 && min_excess > 0.0,
        format!("1000 pairs, min(J - (2k - 1e-12)) {min_gap:.3e}; integrated pairs min(I3 - 2k) {min_excess:.3e}"),
    )
}

fn sign_lemma() -> Outcome {
    let (corpus, _) = state_corpus();
    let (mut used, mut violations) = (0usize, 0usize);
    for (a, b, c, k) in &corpus {
        let i3 = mutual_invariant(a, b, *k).map_err(err)?.value;
        if !(i3 > 2.0 * k) {
            continue;
        }
        let i1 = mutual_invariant(a, c, *k).map_err(err)?.value;
        let i2 = mutual_invariant(b, c, *k).map_err(err)?.value;
        let (l1, l2) = lambdas_from_invariants(i1, i2, i3, *k).map_err(err)?;
        used += 1;
        if l1 < 0.0 && l2 < 0.0 {
            violations += 1;
        }
    }
    check(
        violations == 0,
        format!("{used} triples, {violations} with both lambdas negative"),
    )
}

fn region_coherence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(ACCEPTANCE_SEED ^ 7);
    let (mut points, mut bad) = (0usize, 0usize);
    for _ in 0..10 {
        let k: f64 = rng.gen_range(0.5..2.0);
        let omega = rng.gen_range(0.5..2.0);
        let c1 = rng.gen_range(0.05..0.95) * k.sqrt() / 2.0;
        let params = SeedParams::for_wronskian(c1, k, 1.0).map_err(err)?;
        let i3 = i3_closed_form(params.c1, params.c2, 1.0).map_err(err)?;
        let basis = OscillatorBasis::constant_frequency(omega, &uniform_grid(0.0, 10.0, 500)).map_err(err)?;
        let (x1, x2) = seed_pair_from_tdho(&basis, &params).map_err(err)?;
        for (a, b) in x1.samples().iter().zip(x2.samples()) {
            points += 1;
            let r = classify_region(a.x, b.x, i3, k, DEFAULT_REGION_TOL).map_err(err)?;
            if r.region == Region::A {
                bad += 1;
            }
        }
    }
    let mut outside = 0usize;
    for _ in 0..1000 {
        let k: f64 = rng.gen_range(0.1..5.0);
        let i3 = 2.0 * k * rng.gen_range(1.01..10.0);
        let (zm, zp, _) = z_roots(i3, k).map_err(err)?;
        let z = if rng.gen_bool(0.5) {
            zp * rng.gen_range(1.01..10.0)
        } else {
            zm / rng.gen_range(1.01..10.0)
        };
        let r = classify_region(z.sqrt(), 1.0, i3, k, DEFAULT_REGION_TOL).map_err(err)?;
        outside += 1;
        if r.region != Region::A || r.lambda12_sign_required != Lambda12Requirement::NonPositive {
            bad += 1;
        }
    }
    check(
        bad == 0,
        format!("{points} constructed seed points in B or C, {outside} outside points in A; {bad} mismatches"),
    )
}

fn generalized_reduction() -> Outcome {
    let grid = uniform_grid(0.0, 10.0, 401);
    let opts = IntegratorOptions::new(TOL).with_grid(grid);
    let k = 1.0;
    let freq = modulated();
    let (ix, iy) = (State::new(0.0, 1.2, 0.1), State::new(0.0, 0.5, -0.4));
    let spec = GeneralizedErmakovSpec::constant(k, 0.0, freq.clone());
    let pair = integrate_generalized_ermakov_with(&spec, ix, iy, 10.0, &opts).map_err(err)?;
    let mp = integrate_mp_with(k, &freq, ix, 10.0, &opts).map_err(err)?;
    let ho = integrate_tdho_with(&freq, iy, 10.0, &opts).map_err(err)?;
    let mut worst = 0.0f64;
    for ((a, b), (c, d)) in pair
        .x
        .samples()
        .iter()
        .zip(mp.samples())
        .zip(pair.y.samples().iter().zip(ho.samples()))
    {
        worst = worst.max((a.x - b.x).abs()).max((c.x - d.x).abs());
    }

    let generic = GeneralizedErmakovSpec::constant(1.0, 1.0, freq);
    let pair = integrate_generalized_ermakov_with(
        &generic,
        State::new(0.0, 1.3, 0.2),
        State::new(0.0, 0.7, -0.3),
        10.0,
        &opts,
    )
    .map_err(err)?;
    let series = pair
        .x
        .samples()
        .iter()
        .zip(pair.y.samples())
        .map(|(x, y)| Ok((x.t, generalized_invariant(x, y, &generic, 1e-10, DEFAULT_LOWER_LIMIT)?)))
        .collect::<pinney::Result<Vec<_>>>()
        .map_err(err)?;
    let drift = DriftReport::from_series(series).map_err(err)?;
    check(
        worst <= 10.0 * TOL && drift.max_abs_drift <= 1e-6,
        format!(
            "reduction max deviation {worst:.2e} (limit {:.0e}); generalized invariant spread {:.2e} (limit 1e-6)",
            10.0 * TOL,
            drift.max_abs_drift
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("invariant constancy", invariant_constancy),
        ("round-trip reconstruction", round_trip),
        ("constant-frequency worked chain", worked_chain),
        ("classical/new rule equivalence", equivalence),
        ("floor bounds", floor_bounds),
        ("sign lemma", sign_lemma),
        ("region coherence", region_coherence),
        ("generalized-system reduction", generalized_reduction),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
