use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Every variant maps onto a stable, machine-readable reason code through
/// [`Error::reason_code`]; the command-line front end reports that code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("t = {t} lies outside the tabulated range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("invalid frequency table: {0}")]
    InvalidTable(String),

    #[error("states are given at different times ({t1} vs {t2})")]
    MismatchedTimes { t1: f64, t2: f64 },

    #[error("zero position where a nonzero one is required")]
    ZeroPosition,

    #[error("|x| = {x:e} fell below the singularity floor {floor:e} at t = {t}")]
    SingularityGuard { t: f64, x: f64, floor: f64 },

    #[error("step size underflow (h = {h:e}) at t = {t}")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integrator exceeded {0} steps")]
    TooManySteps(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape function returned a non-finite value at u = {u}")]
    ShapeFunction { u: f64 },

    #[error("adaptive quadrature did not converge on [{a}, {b}] (estimated error {estimate:e})")]
    QuadratureNonconvergence { a: f64, b: f64, estimate: f64 },

    #[error("degenerate seeds: I3 = {i3} does not exceed 2k = {two_k}")]
    DegenerateSeeds { i3: f64, two_k: f64 },

    #[error("negative radicand {value:e}")]
    NegativeRadicand { value: f64 },

    #[error("nonpositive square {value:e} under the outer root")]
    NonpositiveSquare { value: f64 },

    #[error("no branch of the superposition rule reproduces the target state")]
    BranchUnresolvable,

    #[error("coefficients ({lambda1}, {lambda2}) are both negative")]
    OutsideK { lambda1: f64, lambda2: f64 },

    #[error("lambda12 = {lambda12:e} has the wrong sign for region {region}")]
    Lambda12SignViolation { lambda12: f64, region: char },

    #[error("invalid seed parameters: {0}")]
    InvalidSeedParams(String),

    #[error("ratio x1^2/x2^2 = {ratio} lies outside [{z_minus}, {z_plus}]")]
    InfeasibleRatio { ratio: f64, z_minus: f64, z_plus: f64 },

    #[error("singular change of variables (C1 = C2 = {0})")]
    SingularChange(f64),

    #[error("zero Wronskian")]
    ZeroWronskian,

    #[error("Wronskian drifts by {drift:e} (allowed {allowed:e})")]
    WronskianDrift { drift: f64, allowed: f64 },

    #[error("time spans do not overlap")]
    DisjointSpans,

    #[error("trajectories do not share a time grid")]
    GridMismatch,

    #[error("trajectories were built for different equations: {0}")]
    ConfigMismatch(String),

    #[error("residual check failed: {residual:e} exceeds {allowed:e} at t = {t}")]
    ResidualCheck { t: f64, residual: f64, allowed: f64 },

    #[error("inadmissible coefficients: {0}")]
    Inadmissible(String),
}

impl Error {
    /// Stable identifier for machine-readable reports.
    pub fn reason_code(&self) -> &'static str {
        match self {
            Error::OutOfRange { .. } => "OUT_OF_RANGE",
            Error::InvalidTable(_) => "INVALID_TABLE",
            Error::MismatchedTimes { .. } => "MISMATCHED_TIMES",
            Error::ZeroPosition => "ZERO_POSITION",
            Error::SingularityGuard { .. } => "SINGULARITY_GUARD",
            Error::StepUnderflow { .. } => "STEP_UNDERFLOW",
            Error::TooManySteps(_) => "TOO_MANY_STEPS",
            Error::InvalidParameter(_) => "INVALID_PARAMETER",
            Error::ShapeFunction { .. } => "SHAPE_FUNCTION",
            Error::QuadratureNonconvergence { .. } => "QUADRATURE_NONCONVERGENCE",
            Error::DegenerateSeeds { .. } => "DEGENERATE_SEEDS",
            Error::NegativeRadicand { .. } => "NEGATIVE_RADICAND",
            Error::NonpositiveSquare { .. } => "NONPOSITIVE_SQUARE",
            Error::BranchUnresolvable => "BRANCH_UNRESOLVABLE",
            Error::OutsideK { .. } => "OUTSIDE_K",
            Error::Lambda12SignViolation { .. } => "LAMBDA12_SIGN_VIOLATION",
            Error::InvalidSeedParams(_) => "INVALID_SEED_PARAMS",
            Error::InfeasibleRatio { .. } => "INFEASIBLE_RATIO",
            Error::SingularChange(_) => "SINGULAR_CHANGE",
            Error::ZeroWronskian => "ZERO_WRONSKIAN",
            Error::WronskianDrift { .. } => "WRONSKIAN_DRIFT",
            Error::DisjointSpans => "DISJOINT_SPANS",
            Error::GridMismatch => "GRID_MISMATCH",
            Error::ConfigMismatch(_) => "CONFIG_MISMATCH",
            Error::ResidualCheck { .. } => "RESIDUAL_CHECK",
            Error::Inadmissible(_) => "INADMISSIBLE",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
