use thiserror::Error;

/// Errors raised by the solver, diagnostics and analytic oracles.
#[derive(Debug, Error)]
pub enum RadmError {
    #[error("invalid grid size {0}: must be even and at least 4")]
    InvalidGrid(usize),

    #[error("grid mismatch: expected n = {expected}, got n = {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("reality condition violated: max |c(-k) - conj c(k)| = {0:.3e}")]
    RealityViolation(f64),

    #[error("brute-force convolution is limited to n <= 8, got n = {0}")]
    OracleTooLarge(usize),

    #[error("numerical blow-up (non-finite values) at step {step}")]
    BlowUp { step: u64 },

    #[error("CFL violation at step {step}: dt = {dt:.3e} exceeds limit {limit:.3e}")]
    Cfl { step: u64, dt: f64, limit: f64 },

    #[error("forcing shell {0} has zero energy and cannot be rescaled")]
    EmptyShell(usize),

    #[error("spectrum shell {0} is empty or out of range; cannot fit a slope")]
    EmptyFitShell(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no flow-reversal regime exists for Wo = {0} (requires Wo > 10)")]
    NoReversalRegime(f64),

    #[error("Bessel argument out of range: |z| = {0} > 50")]
    BesselOutOfRange(f64),

    #[error("J0 denominator is numerically zero (|J0| = {0:.3e})")]
    NearZeroDenominator(f64),

    #[error("imaginary residue {0:.3e} exceeds tolerance")]
    ImaginaryResidue(f64),

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, RadmError>;
