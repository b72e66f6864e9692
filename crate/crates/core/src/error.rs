use thiserror::Error;

/// Errors raised anywhere in the reduction pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("squared radius {r} outside potential domain (must be {bound})")]
    Domain { r: f64, bound: String },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("constraint violation: |eta1 - 1| = {c1:e}, |eta2| = {c2:e}")]
    ConstraintViolation { c1: f64, c2: f64 },

    #[error("eta1 = {0:e} is outside the localization chart")]
    Localization(f64),

    #[error("singular denominator m1 + (m1 + m2) s4 = {0:e}")]
    SingularDenominator(f64),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("potential does not provide U itself")]
    MissingPotentialEnergy,

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("integration exceeded {0} steps")]
    TooManySteps(usize),

    #[error("no convergence: {0}")]
    ConvergenceFailure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
