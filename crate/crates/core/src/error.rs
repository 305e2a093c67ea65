use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("truncation underflow: requested order {requested}, available {available}")]
    TruncationUnderflow { requested: u32, available: u32 },

    #[error("series must have constant term 1 (found {0})")]
    NonUnitLeadingTerm(Complex64),

    #[error("germ is the identity through degree {0}")]
    IdentityGerm(u32),

    #[error("every direction is characteristic (x*P2 - y*P1 vanishes identically)")]
    EveryDirectionCharacteristic,

    #[error("director not defined: {0}")]
    NotApplicable(String),

    #[error("germ does not have a unique non-degenerate characteristic direction: {0}")]
    NotUniqueDirection(String),

    #[error("chart singular: x*y = 0 or u*v = 0")]
    ChartSingular,

    #[error("invalid sector parameters: {0}")]
    InvalidParams(String),

    #[error("could not certify an invariant region after {escalations} escalations")]
    CannotCertifyRegion { escalations: u32 },

    #[error("point ({u}, {v}) is outside the working region")]
    OutOfRegion { u: Complex64, v: Complex64 },

    #[error("orbit left the invariant region at step {step}")]
    InvarianceViolation { step: u64 },

    #[error("quadrature failed to converge at u = {at}")]
    QuadratureFailure { at: Complex64 },

    #[error("least-squares fit diverged: residual {residual:e} vs scale {scale:e}")]
    FitDiverged { residual: f64, scale: f64 },

    #[error("could not recover v from omega = {0}")]
    InverseRecovery(Complex64),

    #[error("index {index} out of range 0..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
