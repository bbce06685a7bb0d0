//! Error type shared across the pipeline.

use std::fmt;

/// Pipeline stages, used to tag errors raised inside `compute_zeta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Parse,
    Polytope,
    Nondegeneracy,
    Precision,
    Nullstellensatz,
    FrobeniusLift,
    Reduction,
    Basis,
    Matrix,
    Zeta,
    Oracle,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Parse => "parse",
            Stage::Polytope => "polytope",
            Stage::Nondegeneracy => "nondegen",
            Stage::Precision => "precision",
            Stage::Nullstellensatz => "nullstellensatz",
            Stage::FrobeniusLift => "frobenius",
            Stage::Reduction => "reduction",
            Stage::Basis => "basis",
            Stage::Matrix => "matrix",
            Stage::Zeta => "zeta",
            Stage::Oracle => "oracle",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// The support of the input spans a point or a segment, not a polygon.
    DimensionTooLow,
    /// The polytope has no interior lattice point, so the curve has genus 0.
    GenusZero,
    /// The input fails the nondegeneracy condition; carries a description of
    /// the offending face and, when found, a witness point.
    Degenerate(String),
    /// Inversion of a non-unit was attempted.
    NonUnit,
    /// A vertex coefficient of the defining polynomial is not a unit.
    NonUnitVertex,
    /// Gaussian elimination could not find a unit pivot for the given row.
    NoUnitPivot { row: usize },
    /// Newton iteration hit a non-invertible derivative.
    NonUnitDerivative,
    /// A linear system over Z_q admits no solution at the working precision.
    Inconsistent,
    /// The cohomology basis does not have the expected dimension.
    DimensionMismatch { expected: usize, got: usize },
    /// Not enough p-adic precision is left to recover integer output.
    PrecisionExhausted,
    /// A recovered coefficient violates the Weil bound.
    WeilViolation,
    /// A brute-force enumeration would exceed the configured guard.
    TooLarge,
    /// A nondegeneracy search would have to exceed the degree cap.
    ExceedsSearchBound,
    /// Curve file syntax error.
    Parse { line: usize, msg: String },
    /// A curve file lists the same exponent pair twice.
    DuplicateTerm { i: i64, j: i64 },
    /// Invariant violation; indicates a bug, not bad input.
    Internal(String),
    /// An error tagged with the pipeline stage it occurred in.
    Staged {
        stage: Stage,
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn staged(self, stage: Stage) -> Error {
        match self {
            Error::Staged { .. } => self,
            e => Error::Staged {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// The stage tag, if any.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Staged { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionTooLow => write!(f, "Newton polytope is not two-dimensional"),
            Error::GenusZero => write!(f, "polytope has no interior lattice point (genus 0)"),
            Error::Degenerate(w) => write!(f, "input is degenerate: {w}"),
            Error::NonUnit => write!(f, "attempted to invert a non-unit"),
            Error::NonUnitVertex => write!(f, "vertex coefficient is not a unit"),
            Error::NoUnitPivot { row } => {
                write!(f, "no unit pivot for row {row} (input degenerate?)")
            }
            Error::NonUnitDerivative => write!(f, "Newton iteration derivative is not a unit"),
            Error::Inconsistent => write!(f, "linear system has no p-adic solution"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "cohomology basis dimension {got}, expected {expected}")
            }
            Error::PrecisionExhausted => write!(f, "p-adic precision exhausted"),
            Error::WeilViolation => write!(f, "coefficient exceeds the Weil bound"),
            Error::TooLarge => write!(f, "enumeration exceeds the search guard"),
            Error::ExceedsSearchBound => write!(f, "nondegeneracy search bound exceeded"),
            Error::Parse { line, msg } => write!(f, "parse error at line {line}: {msg}"),
            Error::DuplicateTerm { i, j } => write!(f, "duplicate term for exponent ({i}, {j})"),
            Error::Internal(msg) => write!(f, "internal error: {msg}"),
            Error::Staged { stage, source } => write!(f, "[{stage}] {source}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
