use thiserror::Error;

/// Failures raised by the trajectory library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("hidden parameter a must be non-zero: a = 0 collapses the reduced action S0 = hbar*arctan(a*phi1/phi2 + b) to a constant")]
    ZeroHiddenScale,

    #[error("E - V(x) vanishes at x = {x} fm (law of motion divides by E - V)")]
    EnergyEqualsPotential { x: f64 },

    #[error("turning point at x = {x} fm: (E - V)^2 = m0^2 c^4 makes the expression singular")]
    TurningPointSingular { x: f64 },

    #[error("f function is non-positive ({value}) at x = {x} fm")]
    NonPositiveF { x: f64, value: f64 },

    #[error("radicand 1 - (xdot/c)^2 f = {radicand} is not positive")]
    SuperluminalArgument { radicand: f64 },

    #[error("regime mismatch at x = {x} fm: expected {expected}, found {found}")]
    RegimeError { x: f64, expected: &'static str, found: &'static str },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("initial conditions are linearly dependent (initial Wronskian {wronskian})")]
    DependentInitials { wronskian: f64 },

    #[error("step too large: |k h| = {kh:.4} exceeds the accuracy guard {limit}")]
    StepTooLarge { kh: f64, limit: f64 },

    #[error("turning point inside range near x = {x} fm; no samples could be produced")]
    TurningPointInRange { x: f64 },

    #[error("basis grid [{grid_lo}, {grid_hi}] fm does not cover requested x = {x} fm")]
    BasisGap { x: f64, grid_lo: f64, grid_hi: f64 },

    #[error("node detection needs at least 2 trajectories, got {found}")]
    InsufficientTrajectories { found: usize },

    #[error("trajectories never cross; the parameter sets are degenerate or the window holds no node")]
    NoCrossings,

    #[error("too few samples: need at least {needed}, got {found}")]
    TooFewSamples { needed: usize, found: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
