use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("enumeration of {requested} items exceeds the budget of {cap}")]
    BudgetExceeded { requested: u128, cap: u64 },

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("tolerance {tol:e} unreachable: {reason}")]
    TolUnreachable { tol: f64, reason: String },

    #[error("interaction is not uniformly absolutely convergent: {0}")]
    NotUac(String),

    #[error("configurations differ at infinitely many sites")]
    BackgroundMismatch,

    #[error("cocycle limit did not converge within radius {radius} (last increment {increment:e})")]
    NonConvergent { radius: u64, increment: f64 },

    #[error("kernel value underflows the positivity floor at {0}")]
    NullKernel(String),

    #[error("pattern of length {len} is shorter than the measure's word length {word_len}")]
    PatternTooShort { len: usize, word_len: usize },

    #[error("power iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("sub-window [{lo}, {hi}] violates the required margin inside the sampled volume")]
    MarginViolation { lo: i64, hi: i64 },

    #[error("tau charges a cylinder of mu-measure zero")]
    NonAbsolutelyContinuous,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Stable machine-readable identifier, used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::AlphabetMismatch(_) => "alphabet_mismatch",
            Error::TolUnreachable { .. } => "tol_unreachable",
            Error::NotUac(_) => "not_uac",
            Error::BackgroundMismatch => "background_mismatch",
            Error::NonConvergent { .. } => "non_convergent",
            Error::NullKernel(_) => "null_kernel",
            Error::PatternTooShort { .. } => "pattern_too_short",
            Error::NoConvergence { .. } => "no_convergence",
            Error::MarginViolation { .. } => "margin_violation",
            Error::NonAbsolutelyContinuous => "non_absolutely_continuous",
            Error::InvalidInput(_) => "invalid_input",
        }
    }
}
