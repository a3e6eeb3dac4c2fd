use core::fmt;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An angle or parameter lies outside the domain an operation accepts.
    Domain(&'static str, f64),
    /// Two operands have incompatible shapes.
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    /// A configuration value violates its invariant.
    InvalidConfig(&'static str),
    /// A linear system was rank deficient.
    Singular { context: &'static str, condition: f64 },
    /// A spatial phase cannot be produced by any angle in (-90°, 90°).
    UnreachablePhase(f64),
    /// More than one angle maps to the same spatial phase (d/λ > 0.5).
    AmbiguousPhase(f64),
    /// The deflated signal subspace lost rank.
    SubspaceCollapse { rank: usize, required: usize },
    /// NaN or infinity found in an input.
    NonFinite(&'static str),
    /// Every Monte Carlo trial failed.
    AllTrialsFailed,
    /// Precoders handed to the benchmark radiate different total power.
    UnequalPower { reference: f64, found: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(what, v) => write!(f, "{what} out of domain: {v}"),
            Error::DimensionMismatch {
                context,
                expected,
                found,
            } => write!(f, "{context}: expected dimension {expected}, found {found}"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Singular { context, condition } => {
                write!(f, "{context}: singular system (condition number {condition:e})")
            }
            Error::UnreachablePhase(p) => {
                write!(f, "spatial phase {p} rad is not reachable by any real angle")
            }
            Error::AmbiguousPhase(p) => {
                write!(f, "spatial phase {p} rad maps to more than one angle")
            }
            Error::SubspaceCollapse { rank, required } => {
                write!(f, "deflated signal subspace has rank {rank}, need {required}")
            }
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::AllTrialsFailed => write!(f, "all Monte Carlo trials failed"),
            Error::UnequalPower { reference, found } => {
                write!(f, "precoder Frobenius norm {found} differs from reference {reference}")
            }
        }
    }
}

impl core::error::Error for Error {}
