use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range (valid: 0..{bound})")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("length mismatch: expected {expected} samples, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("{name} = {value} is out of range ({expected})")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("sample list is empty")]
    EmptySamples,

    #[error("boundary condition violated: {0}")]
    BoundaryViolation(String),

    #[error("bivector input: {0}")]
    Parse(String),

    #[error("ODE solution blew up near t = {t}")]
    OdeBlowUp { t: f64 },

    #[error("path is not cotangent: defect {defect:e} exceeds {tol:e}")]
    NotCotangent { defect: f64, tol: f64 },

    #[error("only {closed} of {required} sampled tangent vectors closed up periodically")]
    NonClosingTangents { closed: usize, required: usize },

    #[error("optimizer diverged after {} iterations (residual history {history:?})", history.len())]
    OptimizerDivergence { history: Vec<f64> },

    #[error("slot gradient {slot} of `{label}` disagrees with finite differences (rel. error {error:e})")]
    InconsistentSlotGradient {
        label: String,
        slot: &'static str,
        error: f64,
    },
}

impl Error {
    /// Failures of a numerical procedure, as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::OdeBlowUp { .. }
                | Error::NotCotangent { .. }
                | Error::NonClosingTangents { .. }
                | Error::OptimizerDivergence { .. }
                | Error::InconsistentSlotGradient { .. }
        )
    }
}
