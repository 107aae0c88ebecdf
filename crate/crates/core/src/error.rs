//! Error type shared by every module of the crate.

use alloc::string::String;
use core::fmt;

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Everything that can go wrong while building datasets or testing candidates.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A named variable does not exist.
    UnknownVariable(String),
    /// Two columns share a name.
    DuplicateVariable(String),
    /// The designated target does not have exactly two observed values.
    NonBinaryTarget {
        /// Target column name.
        name: String,
        /// Number of distinct observed values.
        distinct: usize,
    },
    /// No rows are left (for instance after dropping rows with missing cells).
    NoRows,
    /// A record or column has the wrong length or an out-of-range value.
    MalformedData(String),
    /// An assignment does not type-check against the dataset.
    InvalidAssignment(String),
    /// A parameter is outside its admissible range.
    InvalidParameter(String),
    /// The antecedent of a rule matches no row.
    ZeroSupport,
    /// The treatment takes a single value in the (sub)population.
    SingleClassTreatment,
    /// A contingency table has an empty treatment or control arm.
    EmptyArm,
    /// Every propensity stratum was dropped for lack of overlap.
    NoOverlap,
}

impl Error {
    /// True for the errors that only mean "this candidate cannot be tested".
    pub fn is_untestable(&self) -> bool {
        matches!(
            self,
            Error::NoRows | Error::SingleClassTreatment | Error::EmptyArm | Error::NoOverlap
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnknownVariable(name) => write!(f, "unknown variable `{name}`"),
            Error::DuplicateVariable(name) => write!(f, "duplicate variable `{name}`"),
            Error::NonBinaryTarget { name, distinct } => write!(
                f,
                "target `{name}` must have exactly 2 distinct values, found {distinct}"
            ),
            Error::NoRows => f.write_str("no rows"),
            Error::MalformedData(msg) => write!(f, "malformed data: {msg}"),
            Error::InvalidAssignment(msg) => write!(f, "invalid assignment: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::ZeroSupport => f.write_str("antecedent matches no row"),
            Error::SingleClassTreatment => f.write_str("treatment takes a single value"),
            Error::EmptyArm => f.write_str("treatment or control arm is empty"),
            Error::NoOverlap => f.write_str("no propensity stratum has both arms populated"),
        }
    }
}

impl core::error::Error for Error {}
