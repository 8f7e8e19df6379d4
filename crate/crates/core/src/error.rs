//! Crate-wide error type.

use crate::model::{EquationSet, FaultSignature};

/// Errors produced by model loading and by the structural analyses.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("empty identifier")]
    EmptyId,
    #[error("duplicate equation id `{0}`")]
    DuplicateEquation(String),
    #[error("duplicate {kind} id `{id}`")]
    DuplicateVariable { kind: &'static str, id: String },
    #[error("equation `{equation}` references undeclared {kind} `{id}`")]
    UndeclaredVariable {
        equation: String,
        kind: &'static str,
        id: String,
    },
    #[error("equation `{equation}` lists `{var}` twice with the same occurrence kind")]
    DuplicateIncidence { equation: String, var: String },
    #[error("equation `{equation}` has more than one differentiated unknown")]
    MultipleDifferentiated { equation: String },
    #[error("fault `{fault}` appears in multiple equations (`{first}` and `{second}`)")]
    FaultInMultipleEquations {
        fault: String,
        first: String,
        second: String,
    },
    #[error("fault `{0}` does not appear in any equation")]
    UnplacedFault(String),
    #[error("unknown `{0}` does not occur in any equation")]
    UnusedUnknown(String),
    #[error("unknown equation id `{0}`")]
    UnknownEquation(String),
    #[error("unknown fault id `{0}`")]
    UnknownFault(String),
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("graph edge references missing endpoint ({row}, {col})")]
    InvalidEdge { row: String, col: String },

    #[error("{0} is not a PSO set")]
    NotPso(EquationSet),
    #[error("{subset} is not back-substitution computable (blocked unknowns: {blocked:?})")]
    NotBackSubstitutable {
        subset: EquationSet,
        blocked: Vec<String>,
    },
    #[error("operator `{operator}` reports no blocked unknowns on a non-testable set {subset}")]
    OperatorContract {
        operator: String,
        subset: EquationSet,
    },
    #[error("subset of size {size} exceeds the oracle bound {bound}")]
    OracleBoundExceeded { size: usize, bound: usize },
    #[error("operator `{operator}` is not union-closed: union {union} of testable PSO sets fails the predicate")]
    UnionClosureViolation {
        operator: String,
        union: EquationSet,
    },
    #[error("duplicate fault signature {0} in result collection")]
    DuplicateSignature(FaultSignature),
    #[error("signature {0} is not a union of irreducible signatures")]
    SignatureCoverage(FaultSignature),
    #[error("fault mode must not be empty")]
    EmptyFaultMode,

    #[error("linear data mismatch for equation `{equation}`: {detail}")]
    StructureMismatch { equation: String, detail: String },
    #[error("zero pivot coefficient on `{variable}` in equation `{equation}`")]
    ZeroPivot { equation: String, variable: String },
    #[error("computation order has {found} residual equations, expected exactly one")]
    ResidualCount { found: usize },
    #[error("noise covariance is not symmetric")]
    AsymmetricCovariance,
    #[error("residual covariance is not positive definite")]
    NotPositiveDefinite,
    #[error("residual {index} has gain {gain} on target fault `{fault}`, expected 1")]
    FaultGainMismatch {
        index: usize,
        fault: String,
        gain: String,
    },
    #[error("{0}")]
    Dimension(String),
}

impl Error {
    /// True for errors caused by malformed or inconsistent input files,
    /// as opposed to violated analysis preconditions.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. }
                | Error::EmptyId
                | Error::DuplicateEquation(_)
                | Error::DuplicateVariable { .. }
                | Error::UndeclaredVariable { .. }
                | Error::DuplicateIncidence { .. }
                | Error::MultipleDifferentiated { .. }
                | Error::FaultInMultipleEquations { .. }
                | Error::UnplacedFault(_)
                | Error::UnusedUnknown(_)
                | Error::StructureMismatch { .. }
                | Error::AsymmetricCovariance
        )
    }
}
