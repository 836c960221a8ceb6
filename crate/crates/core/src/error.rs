use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid slope schedule: {0}")]
    InvalidSchedule(String),
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    #[error("no Δ2 witness for n = {n} below t = {t_cap:e}")]
    WitnessNotFound { n: u32, t_cap: f64 },
    #[error("random variables live on different spaces")]
    SpaceMismatch,
    #[error("empty sequence")]
    EmptySequence,
    #[error("scenario set is empty")]
    EmptyScenarioSet,
    #[error("bracket invalid: {0}")]
    BracketInvalid(String),
    #[error("family does not converge: {0}")]
    FamilyNotConvergent(String),
    #[error("mode mismatch: {0}")]
    ModeMismatch(String),
    #[error("every probe has an infinite conjugate value")]
    AllProbesInfinite,
    #[error("blocks overflow region mass: {0}")]
    RegionOverflow(String),
    #[error("lambda = {0} is below 1, tail bound not certified")]
    InvalidLambda(f64),
    #[error("unsupported input: {0}")]
    UnsupportedInput(String),
    #[error("truncation too small: {0}")]
    TruncationTooSmall(String),
    #[error("certificate verification failed: {0}")]
    CertificateVerification(String),
    #[error("input family does not converge: {0}")]
    NonConvergentInput(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("bound violated at index {index}: {detail}")]
    BoundViolation { index: usize, detail: String },
    #[error("cross-check failed: {0}")]
    CrossCheckFailure(String),
}

impl LabError {
    /// Numeric failures are reported with a distinct exit status by the CLI.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            LabError::NumericFailure(_) | LabError::CrossCheckFailure(_)
        )
    }
}
