use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy { kind: &'static str, name: String, available: String },

    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),

    #[error("Hilbert-space dimension {dim} exceeds the configured limit {limit}")]
    DimensionOverflow { dim: usize, limit: usize },

    #[error("eigensolver failed on a {dim}x{dim} problem: {reason}")]
    Eigensolver { dim: usize, reason: String },

    /// `E_alpha` coincides with an unperturbed level within the degeneracy guard.
    #[error("E_alpha = {e_alpha} is degenerate with unperturbed level k = {k} (E0 = {e0}){}", state_suffix(*.alpha))]
    Degenerate { alpha: Option<usize>, k: usize, e_alpha: f64, e0: f64 },

    #[error("no admissible shift parameter: max Re(w) = {re_max} >= 1")]
    NoAdmissibleShift { re_max: f64 },

    #[error("PT-region search emptied S without reaching a passing set")]
    SearchExhausted,

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolution cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn state_suffix(alpha: Option<usize>) -> String {
    alpha.map(|a| format!(" for state {a}")).unwrap_or_default()
}
