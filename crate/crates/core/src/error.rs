use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("invalid physical constants: {0}")]
    InvalidConstants(String),

    #[error("index {index} lies outside the interior block (size {interior})")]
    OutsideInterior { index: usize, interior: usize },

    #[error("polynomial degree {degree} exceeds the cap of {cap}")]
    DegreeExceeded { degree: u32, cap: u32 },

    #[error("unsupported time profile operation: {0}")]
    UnsupportedProfile(String),

    #[error("field contains impulsive (delta) terms, which this computation does not support")]
    ImpulsiveField,

    #[error("operator `{label}` is not hermitian (defect {defect:e})")]
    NotHermitian { label: String, defect: f64 },

    #[error("observable `{name}` is not a motion invariant of H0 (residual {residual:e})")]
    InadmissibleObservable { name: String, residual: f64 },

    #[error("observable `{name}` is not diagonal in the H0 eigenbasis (off-diagonal {offdiag:e})")]
    NotCodiagonal { name: String, offdiag: f64 },

    #[error("s-matrix entry ({k}, {kp}) is undefined (degenerate observable eigenvalues)")]
    UndefinedEntry { k: usize, kp: usize },

    #[error("initial and final index coincide ({0})")]
    SameState(usize),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("numerical policy `{policy}` violated: {detail}")]
    NumericalPolicy { policy: &'static str, detail: String },
}
