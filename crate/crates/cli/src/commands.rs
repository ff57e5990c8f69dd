//! One function per subcommand. Each returns the samples written as CSV and
//! the JSON result.

use std::f64::consts::PI;

use pinney::classical::{
    i3_closed_form, mu_from_lambda, pinney_trajectory, seed_pair_from_tdho, verify_equivalence, OscillatorBasis,
    SeedParams,
};
use pinney::feasibility::{admissible, classify_region, z_roots, DEFAULT_REGION_TOL};
use pinney::invariants::{aligned_states, mutual_invariant, DriftReport};
use pinney::ode::{
    integrate_generalized_ermakov_with, integrate_mp_with, integrate_tdho_with, uniform_grid, FrequencySpec,
    GeneralizedErmakovSpec, IntegratorOptions, State, Trajectory,
};
use pinney::superposition::{coefficients_from_target, reconstruct_trajectory, Sign};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::to_value;
use crate::{Command, Component, Equation, SignArg};

/// Largest quartic residual accepted for a reconstruction.
pub const QUARTIC_CERT_TOL: f64 = 1e-8;
/// Largest classical versus two-solution difference accepted.
pub const EQUIVALENCE_TOL: f64 = 1e-8;
pub const MU_IDENTITY_TOL: f64 = 1e-9;
/// Largest deviation of the closed-form general solution from direct integration.
pub const CLOSED_FORM_TOL: f64 = 1e-7;

pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.3), seed_from_u64";

pub struct Output {
    pub samples: Vec<State>,
    pub result: Value,
}

impl Output {
    fn report(result: Value) -> Self {
        Self {
            samples: Vec::new(),
            result,
        }
    }
}

pub fn run(cmd: &Command, cfg: &RunConfig) -> Result<Output, CliError> {
    match cmd {
        Command::Integrate {
            equation,
            init,
            init_y,
            shape_f,
            shape_g,
            component,
        } => integrate(cfg, *equation, *init, *init_y, *shape_f, *shape_g, *component),
        Command::Invariants { seed1, seed2, target } => invariants(cfg, *seed1, *seed2, *target),
        Command::Superpose {
            seed1,
            seed2,
            target,
            freq1,
            freq2,
        } => superpose(cfg, *seed1, *seed2, *target, freq1.as_ref(), freq2.as_ref()),
        Command::Region {
            x1,
            x2,
            i3,
            lambda1,
            lambda2,
            region_tol,
        } => region(cfg, *x1, *x2, *i3, *lambda1, *lambda2, *region_tol),
        Command::Classical {
            c1,
            c2,
            sign,
            seed_pair,
            member,
        } => classical(cfg, *c1, *c2, *sign, *seed_pair, *member),
        Command::Equivalence {
            c1,
            lambda1,
            lambda2,
            cases,
        } => equivalence(cfg, *c1, *lambda1, *lambda2, *cases),
        Command::Example { lambda1, lambda2 } => example(cfg, *lambda1, *lambda2),
    }
}

fn options(cfg: &RunConfig, t0: f64) -> Result<IntegratorOptions, CliError> {
    Ok(IntegratorOptions::new(cfg.tol).with_grid(cfg.grid(t0)?))
}

fn mp(cfg: &RunConfig, freq: &FrequencySpec, init: State) -> Result<Trajectory, CliError> {
    Ok(integrate_mp_with(cfg.k, freq, init, cfg.t_end, &options(cfg, init.t)?)?)
}

fn integrate(
    cfg: &RunConfig,
    equation: Equation,
    init: Option<State>,
    init_y: Option<State>,
    shape_f: Option<f64>,
    shape_g: f64,
    component: Component,
) -> Result<Output, CliError> {
    let init = init.unwrap_or(State::new(0.0, 1.0, 0.0));
    let opts = options(cfg, init.t)?;
    match equation {
        Equation::Mp | Equation::Tdho => {
            let traj = if equation == Equation::Mp {
                integrate_mp_with(cfg.k, &cfg.freq, init, cfg.t_end, &opts)?
            } else {
                integrate_tdho_with(&cfg.freq, init, cfg.t_end, &opts)?
            };
            let samples = traj.samples().to_vec();
            let result = json!({
                "equation": if equation == Equation::Mp { "milne_pinney" } else { "oscillator" },
                "initial": init,
                "final": traj.last(),
                "samples": samples,
            });
            Ok(Output { samples, result })
        }
        Equation::Gen => {
            let init_y = init_y.unwrap_or(State::new(init.t, 1.0, 0.0));
            if init_y.t != init.t {
                return Err(CliError::config("--init and --init-y must share the initial time"));
            }
            let f = shape_f.unwrap_or(cfg.k);
            let spec = GeneralizedErmakovSpec::constant(f, shape_g, cfg.freq.clone());
            let pair = integrate_generalized_ermakov_with(&spec, init, init_y, cfg.t_end, &opts)?;
            let samples = match component {
                Component::X => pair.x.samples().to_vec(),
                Component::Y => pair.y.samples().to_vec(),
            };
            let result = json!({
                "equation": "generalized_ermakov_pair",
                "shape_f": f,
                "shape_g": shape_g,
                "initial_x": init,
                "initial_y": init_y,
                "x": pair.x.samples(),
                "y": pair.y.samples(),
            });
            Ok(Output { samples, result })
        }
    }
}

fn drift(a: &Trajectory, b: &Trajectory, k: f64) -> Result<Value, CliError> {
    let series = aligned_states(a, b)?
        .iter()
        .map(|(p, q)| Ok((p.t, mutual_invariant(p, q, k)?.value)))
        .collect::<Result<Vec<_>, pinney::Error>>()?;
    let report = DriftReport::from_series(series)?;
    to_value(&report)
}

fn same_start(states: &[State]) -> Result<(), CliError> {
    if states.windows(2).any(|w| w[0].t != w[1].t) {
        return Err(CliError::config("all initial states must share the same time"));
    }
    Ok(())
}

fn invariants(cfg: &RunConfig, seed1: State, seed2: State, target: Option<State>) -> Result<Output, CliError> {
    let mut starts = vec![seed1, seed2];
    starts.extend(target);
    same_start(&starts)?;
    let x1 = mp(cfg, &cfg.freq, seed1)?;
    let x2 = mp(cfg, &cfg.freq, seed2)?;
    let mut result = json!({ "I3": drift(&x1, &x2, cfg.k)? });
    if let Some(target) = target {
        let x = mp(cfg, &cfg.freq, target)?;
        result["I1"] = drift(&x1, &x, cfg.k)?;
        result["I2"] = drift(&x2, &x, cfg.k)?;
    }
    Ok(Output::report(result))
}

fn superpose(
    cfg: &RunConfig,
    seed1: State,
    seed2: State,
    target: State,
    freq1: Option<&FrequencySpec>,
    freq2: Option<&FrequencySpec>,
) -> Result<Output, CliError> {
    same_start(&[seed1, seed2, target])?;
    let freq1 = freq1.unwrap_or(&cfg.freq);
    let freq2 = freq2.unwrap_or(&cfg.freq);
    let coeffs = coefficients_from_target(&seed1, &seed2, &target, cfg.k)?;
    let x1 = mp(cfg, freq1, seed1)?;
    let x2 = mp(cfg, freq2, seed2)?;
    let reference = mp(cfg, freq1, target)?;
    let (x, report) = reconstruct_trajectory(&x1, &x2, &coeffs, Some(&reference))?;
    if !(report.quartic_residual_max <= QUARTIC_CERT_TOL) {
        return Err(CliError::Verification(format!(
            "quartic residual {:e} exceeds {QUARTIC_CERT_TOL:e}",
            report.quartic_residual_max
        )));
    }
    let region = if seed1.x > 0.0 && seed2.x > 0.0 {
        Some(admissible(
            coeffs.lambda1,
            coeffs.lambda2,
            seed1.x,
            seed2.x,
            coeffs.i3,
            cfg.k,
            DEFAULT_REGION_TOL,
        )?)
    } else {
        None
    };
    let samples = x.samples().to_vec();
    let result = json!({
        "coefficients": coeffs,
        "region_at_start": region,
        "reconstruction": report,
        "certified": true,
        "samples": samples,
    });
    Ok(Output { samples, result })
}

fn region(
    cfg: &RunConfig,
    x1: f64,
    x2: f64,
    i3: f64,
    lambda1: Option<f64>,
    lambda2: Option<f64>,
    tol: f64,
) -> Result<Output, CliError> {
    let report = match (lambda1, lambda2) {
        (Some(l1), Some(l2)) => admissible(l1, l2, x1, x2, i3, cfg.k, tol)?,
        (None, None) => classify_region(x1, x2, i3, cfg.k, tol)?,
        _ => return Err(CliError::config("--lambda1 and --lambda2 go together")),
    };
    Ok(Output::report(to_value(&report)?))
}

/// Oscillator basis on the run grid: closed form for constant frequency,
/// otherwise integrated from `(0, 1, 0)` and `(0, 0, 1)`.
fn basis(cfg: &RunConfig, grid: &[f64]) -> Result<OscillatorBasis, CliError> {
    Ok(match cfg.freq {
        FrequencySpec::Constant { omega } => OscillatorBasis::constant_frequency(omega, grid)?,
        ref freq => OscillatorBasis::integrate(
            freq,
            State::new(grid[0], 1.0, 0.0),
            State::new(grid[0], 0.0, 1.0),
            grid.to_vec(),
            cfg.tol,
        )?,
    })
}

fn sign(s: SignArg) -> Sign {
    match s {
        SignArg::Plus => Sign::Plus,
        SignArg::Minus => Sign::Minus,
    }
}

fn classical(
    cfg: &RunConfig,
    c1: f64,
    c2: Option<f64>,
    s: SignArg,
    seed_pair: bool,
    member: u8,
) -> Result<Output, CliError> {
    let basis = basis(cfg, &cfg.grid(0.0)?)?;
    let w = basis.w();
    if seed_pair {
        let params = match c2 {
            Some(c2) => SeedParams::new(c1, c2, cfg.k)?,
            None => SeedParams::for_wronskian(c1, cfg.k, w)?,
        };
        params.check_constraint(w)?;
        let (x1, x2) = seed_pair_from_tdho(&basis, &params)?;
        let i3 = i3_closed_form(params.c1, params.c2, w)?;
        let samples = if member == 1 { x1.samples() } else { x2.samples() }.to_vec();
        let result = json!({
            "wronskian": w,
            "c1": params.c1,
            "c2": params.c2,
            "I3_closed_form": i3,
            "I3": drift(&x1, &x2, cfg.k)?,
            "member": member,
            "samples": samples,
        });
        return Ok(Output { samples, result });
    }
    let c2 = c2.ok_or_else(|| CliError::config("--c2 is required unless --seed-pair is given"))?;
    let traj = pinney_trajectory(&basis, c1, c2, cfg.k, sign(s))?;
    let samples = traj.samples().to_vec();
    let result = json!({
        "wronskian": w,
        "c1": c1,
        "c2": c2,
        "sign": sign(s),
        "samples": samples,
    });
    Ok(Output { samples, result })
}

/// One checked `(C₁, λ₁, λ₂)` case, or `None` when it is inadmissible.
fn equivalence_case(
    cfg: &RunConfig,
    basis: &OscillatorBasis,
    grid: &[f64],
    c1: f64,
    l1: f64,
    l2: f64,
) -> Result<Option<Value>, CliError> {
    let (k, w) = (cfg.k, basis.w());
    let params = SeedParams::for_wronskian(c1, k, w)?;
    let i3 = i3_closed_form(params.c1, params.c2, w)?;
    let (x1, x2) = seed_pair_from_tdho(basis, &params)?;
    let (a, b) = (x1.samples()[0], x2.samples()[0]);
    let Ok(report) = admissible(l1, l2, a.x, b.x, i3, k, DEFAULT_REGION_TOL) else {
        return Ok(None);
    };
    let mu = mu_from_lambda(l1, l2, params.c1, params.c2);
    let lambda12 = report.lambda12.unwrap_or(f64::NAN);
    if !(lambda12 >= 0.0 && mu.mu1 > 0.0 && mu.mu2 > 0.0) {
        return Ok(None);
    }
    let diff = verify_equivalence(basis, &params, l1, l2, grid)?;
    let lhs = mu.discriminant(k, w);
    let rhs = w * w * lambda12 * (i3 * i3 - 4.0 * k * k);
    let gap = if lhs == rhs {
        0.0
    } else {
        (lhs - rhs).abs() / lhs.abs().max(rhs.abs())
    };
    Ok(Some(json!({
        "c1": params.c1,
        "c2": params.c2,
        "lambda1": l1,
        "lambda2": l2,
        "lambda12": lambda12,
        "mu1": mu.mu1,
        "mu2": mu.mu2,
        "max_diff": diff,
        "mu_identity_gap": gap,
    })))
}

fn equivalence(
    cfg: &RunConfig,
    c1: Option<f64>,
    lambda1: Option<f64>,
    lambda2: Option<f64>,
    n: usize,
) -> Result<Output, CliError> {
    let grid = cfg.grid(0.0)?;
    let basis = basis(cfg, &grid)?;
    let w = basis.w();
    let mut cases = Vec::new();
    let explicit = match (c1, lambda1, lambda2) {
        (Some(c1), Some(l1), Some(l2)) => {
            let case = equivalence_case(cfg, &basis, &grid, c1, l1, l2)?.ok_or_else(|| {
                pinney::Error::Inadmissible(format!(
                    "(lambda1, lambda2) = ({l1}, {l2}) needs lambda12 >= 0 and positive mu at C1 = {c1}"
                ))
            })?;
            cases.push(case);
            true
        }
        (None, None, None) => {
            if n == 0 {
                return Err(CliError::config("--cases must be at least 1"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let c1_max = cfg.k.sqrt() * w.abs() / 2.0;
            let mut attempts = 0usize;
            while cases.len() < n {
                attempts += 1;
                if attempts > 1000 * n {
                    return Err(CliError::Verification(format!(
                        "only {} admissible cases in {} draws",
                        cases.len(),
                        attempts - 1
                    )));
                }
                let c1 = rng.gen_range(0.05..0.95) * c1_max;
                let (l1, l2) = (rng.gen_range(-0.5..2.0), rng.gen_range(-0.5..2.0));
                cases.extend(equivalence_case(cfg, &basis, &grid, c1, l1, l2)?);
            }
            false
        }
        _ => return Err(CliError::config("give all of --c1, --lambda1, --lambda2 or none")),
    };
    let worst = |key: &str| cases.iter().filter_map(|c| c[key].as_f64()).fold(0.0, f64::max);
    let (max_diff, max_gap) = (worst("max_diff"), worst("mu_identity_gap"));
    if !(max_diff <= EQUIVALENCE_TOL && max_gap <= MU_IDENTITY_TOL) {
        return Err(CliError::Verification(format!(
            "max difference {max_diff:e} (limit {EQUIVALENCE_TOL:e}), mu identity gap {max_gap:e} (limit {MU_IDENTITY_TOL:e})"
        )));
    }
    let mut result = json!({
        "wronskian": w,
        "max_diff": max_diff,
        "max_mu_identity_gap": max_gap,
        "cases": cases,
    });
    if !explicit {
        result["rng"] = json!({ "algorithm": RNG_NAME, "seed": cfg.seed });
    }
    Ok(Output::report(result))
}

/// Closed-form solution for `ω ≡ 1` and the seeds `C₁ = √k/4`, `C₂ = √k`:
/// `x² = (√k/4)[5(λ₁+λ₂) + 3(λ₂−λ₁)cos2t ± 2R sin2t]`,
/// `R = √((4λ₁+λ₂)(λ₁+4λ₂) − 4)`. Returns `(x, ẋ)`.
fn closed_form(k: f64, l1: f64, l2: f64, r: f64, t: f64) -> (f64, f64) {
    let c = k.sqrt() / 4.0;
    let (s2, c2) = (2.0 * t).sin_cos();
    let x = (c * (5.0 * (l1 + l2) + 3.0 * (l2 - l1) * c2 + 2.0 * r * s2)).sqrt();
    let dsq = c * (-6.0 * (l2 - l1) * s2 + 4.0 * r * c2);
    (x, dsq / (2.0 * x))
}

fn example(cfg: &RunConfig, l1: f64, l2: f64) -> Result<Output, CliError> {
    let k = cfg.k;
    let grid = uniform_grid(0.0, 2.0 * PI, cfg.points.max(2));
    let freq = FrequencySpec::constant(1.0);
    let basis = OscillatorBasis::constant_frequency(1.0, &grid)?;
    let params = SeedParams::new(k.sqrt() / 4.0, k.sqrt(), k)?;
    let (x1, x2) = seed_pair_from_tdho(&basis, &params)?;
    let (s1, s2) = (x1.samples()[0], x2.samples()[0]);
    let i3 = mutual_invariant(&s1, &s2, k)?.value;
    let i3_formula = i3_closed_form(params.c1, params.c2, basis.w())?;
    let (z_minus, z_plus, _) = z_roots(i3, k)?;
    let region = classify_region(s1.x, s2.x, i3, k, DEFAULT_REGION_TOL)?;

    let equilibrium = k.powf(0.25);
    let coeffs = coefficients_from_target(&s1, &s2, &State::new(0.0, equilibrium, 0.0), k)?;
    let (x, report) = reconstruct_trajectory(&x1, &x2, &coeffs, None)?;
    let equilibrium_err = x
        .samples()
        .iter()
        .map(|s| (s.x - equilibrium).abs())
        .fold(0.0, f64::max);

    let radicand = (4.0 * l1 + l2) * (l1 + 4.0 * l2) - 4.0;
    if !(radicand >= 0.0) || l1 < 0.0 || l2 < 0.0 {
        return Err(pinney::Error::Inadmissible(format!(
            "general solution needs lambda1, lambda2 >= 0 and (4 lambda1 + lambda2)(lambda1 + 4 lambda2) >= 4, got ({l1}, {l2})"
        ))
        .into());
    }
    let r = radicand.sqrt();
    let (x0, v0) = closed_form(k, l1, l2, r, 0.0);
    let direct = integrate_mp_with(
        k,
        &freq,
        State::new(0.0, x0, v0),
        grid[grid.len() - 1],
        &IntegratorOptions::new(cfg.tol).with_grid(grid.clone()),
    )?;
    let closed_vs_direct = direct
        .samples()
        .iter()
        .map(|s| (closed_form(k, l1, l2, r, s.t).0 - s.x).abs())
        .fold(0.0, f64::max);
    let classical_diff = verify_equivalence(&basis, &params, l1, l2, &grid)?;

    if !(equilibrium_err <= QUARTIC_CERT_TOL
        && closed_vs_direct <= CLOSED_FORM_TOL
        && classical_diff <= EQUIVALENCE_TOL)
    {
        return Err(CliError::Verification(format!(
            "equilibrium error {equilibrium_err:e}, closed form vs integration {closed_vs_direct:e}, classical difference {classical_diff:e}"
        )));
    }
    Ok(Output::report(json!({
        "seeds": {
            "c1": params.c1,
            "c2": params.c2,
            "x1_initial": s1,
            "x2_initial": s2,
        },
        "I3": i3,
        "I3_closed_form": i3_formula,
        "z_minus": z_minus,
        "z_plus": z_plus,
        "region": region.region,
        "equilibrium": equilibrium,
        "lambda1": coeffs.lambda1,
        "lambda2": coeffs.lambda2,
        "lambda12": coeffs.lambda12,
        "equilibrium_max_abs_err": equilibrium_err,
        "quartic_residual_max": report.quartic_residual_max,
        "general_solution": {
            "lambda1": l1,
            "lambda2": l2,
            "R": r,
            "initial": State::new(0.0, x0, v0),
            "closed_form_vs_integration": closed_vs_direct,
            "classical_rule_max_diff": classical_diff,
        },
    })))
}
