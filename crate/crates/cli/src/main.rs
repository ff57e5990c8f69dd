#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pinney::ode::{FrequencySpec, State};

use crate::config::{parse_freq, parse_state, Format, GlobalFlags, RunConfig};
use crate::error::CliError;

/// Milne–Pinney equation toolkit: integration, invariants, superposition,
/// feasibility and the classical rule.
#[derive(Parser, Debug)]
#[command(name = "pinney", version, about)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// key = value config file; flags override its entries
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Coefficient of the inverse-cube term (k > 0)
    #[arg(long, global = true)]
    k: Option<f64>,
    /// Frequency: const:W | sin:A,B,C | poly:c0,c1,... | table:PATH
    #[arg(long, global = true, value_parser = parse_freq)]
    freq: Option<FrequencySpec>,
    /// Integrator tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Quadrature tolerance
    #[arg(long, global = true)]
    quad_tol: Option<f64>,
    /// Output format (default: csv for trajectories, json for reports)
    #[arg(long, global = true)]
    format: Option<Format>,
    /// Output file (default: stdout)
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Seed for randomized sweeps
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// End of the time span
    #[arg(long, global = true, allow_hyphen_values = true)]
    t_end: Option<f64>,
    /// Number of output grid points
    #[arg(long, global = true)]
    points: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Equation {
    /// Milne–Pinney equation
    Mp,
    /// Time-dependent harmonic oscillator
    Tdho,
    /// Generalized Ermakov pair with constant shape functions
    Gen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Component {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignArg {
    Plus,
    Minus,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integrate one of the equations
    Integrate {
        #[arg(long, value_enum, default_value = "mp")]
        equation: Equation,
        /// Initial state t,x,v (default 0,1,0)
        #[arg(long, value_parser = parse_state, allow_hyphen_values = true)]
        init: Option<State>,
        /// Initial state of the y component for --equation gen (default 0,1,0)
        #[arg(long, value_parser = parse_state, allow_hyphen_values = true)]
        init_y: Option<State>,
        /// Constant shape function f (default k)
        #[arg(long, allow_hyphen_values = true)]
        shape_f: Option<f64>,
        /// Constant shape function g
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        shape_g: f64,
        /// Component written as CSV for --equation gen
        #[arg(long, value_enum, default_value = "x")]
        component: Component,
    },
    /// Mutual invariants along integrated solutions, with drift
    Invariants {
        #[arg(long, value_parser = parse_state, allow_hyphen_values = true)]
        seed1: State,
        #[arg(long, value_parser = parse_state, allow_hyphen_values = true)]
        seed2: State,
        #[arg(long, value_parser = parse_state, allow_hyphen_values = true)]
        target: Option<State>,
    },
    /// Rebuild a target solution from two seeds and certify it
    Superpose {
        #[arg(long, value_parser = parse_state, allow_hyphen_values = true)]
        seed1: State,
        #[arg(long, value_parser = parse_state, allow_hyphen_values = true)]
        seed2: State,
        #[arg(long, value_parser = parse_state, allow_hyphen_values = true)]
        target: State,
        /// Frequency of the first seed (default --freq)
        #[arg(long, value_parser = parse_freq)]
        freq1: Option<FrequencySpec>,
        /// Frequency of the second seed (default --freq)
        #[arg(long, value_parser = parse_freq)]
        freq2: Option<FrequencySpec>,
    },
    /// Feasibility report for seed positions and coefficients
    Region {
        #[arg(long)]
        x1: f64,
        #[arg(long)]
        x2: f64,
        #[arg(long)]
        i3: f64,
        #[arg(long, allow_hyphen_values = true)]
        lambda1: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        lambda2: Option<f64>,
        #[arg(long, default_value_t = pinney::feasibility::DEFAULT_REGION_TOL)]
        region_tol: f64,
    },
    /// Classical rule from two oscillator solutions, or its seed pair
    Classical {
        #[arg(long)]
        c1: f64,
        /// Required unless --seed-pair (then default kW²/(4·C1))
        #[arg(long)]
        c2: Option<f64>,
        #[arg(long, value_enum, default_value = "plus")]
        sign: SignArg,
        /// Emit one of the two constructed seed solutions instead
        #[arg(long)]
        seed_pair: bool,
        /// Which seed of the pair to write as CSV
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        member: u8,
    },
    /// Check the two-solution rule against the classical rule
    Equivalence {
        #[arg(long)]
        c1: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        lambda1: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        lambda2: Option<f64>,
        /// Number of randomized cases when no explicit case is given
        #[arg(long, default_value_t = 50)]
        cases: usize,
    },
    /// Constant-frequency demonstration of the whole pipeline
    Example {
        #[arg(long, default_value_t = 0.7, allow_hyphen_values = true)]
        lambda1: f64,
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        lambda2: f64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Integrate { .. } => "integrate",
            Command::Invariants { .. } => "invariants",
            Command::Superpose { .. } => "superpose",
            Command::Region { .. } => "region",
            Command::Classical { .. } => "classical",
            Command::Equivalence { .. } => "equivalence",
            Command::Example { .. } => "example",
        }
    }

    fn emits_trajectory(&self) -> bool {
        matches!(
            self,
            Command::Integrate { .. } | Command::Superpose { .. } | Command::Classical { .. }
        )
    }
}

fn flags(g: GlobalArgs) -> GlobalFlags {
    GlobalFlags {
        config: g.config,
        k: g.k,
        freq: g.freq,
        tol: g.tol,
        quad_tol: g.quad_tol,
        format: g.format,
        output: g.output,
        seed: g.seed,
        t_end: g.t_end,
        points: g.points,
    }
}

fn fail(err: &CliError) -> ExitCode {
    eprintln!("error[{}]: {err}", err.reason_code());
    ExitCode::from(err.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let cfg = match RunConfig::resolve(flags(cli.global)) {
        Ok(cfg) => cfg,
        Err(e) => return fail(&e),
    };
    let format = match cfg.format {
        Some(f) => f,
        None if cli.command.emits_trajectory() => Format::Csv,
        None => Format::Json,
    };
    if format == Format::Csv && !cli.command.emits_trajectory() {
        return fail(&CliError::config(format!(
            "{name} produces a report; use --format json"
        )));
    }
    let outcome = commands::run(&cli.command, &cfg).and_then(|out| {
        let text = match format {
            Format::Csv => output::csv(&out.samples),
            Format::Json => output::json_report(name, &cfg, out.result)?,
        };
        output::write(&text, cfg.output.as_deref())
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if format == Format::Json {
                if let Ok(text) = output::json_error(name, &cfg, &err) {
                    let _ = output::write(&text, cfg.output.as_deref());
                }
            }
            fail(&err)
        }
    }
}
