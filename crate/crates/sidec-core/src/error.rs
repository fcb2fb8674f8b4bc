//! Crate-wide error type. Every failure names what went wrong and where;
//! singular matrices carry a kernel witness so callers can audit the claim.

use thiserror::Error;

use crate::matrix::ExactMatrix;

#[derive(Debug, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,

    #[error("invalid rational '{text}': {reason}")]
    BadRational { text: String, reason: String },

    #[error("row {row} has {found} entries, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix is not upper triangular: nonzero entry at ({row}, {col})")]
    NotUpperTriangular { row: usize, col: usize },

    #[error("matrix is singular; a kernel witness vector is attached")]
    Singular { witness: Box<ExactMatrix> },

    #[error("matrix dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("field has no cells")]
    EmptyField,

    #[error("duplicate cell id '{id}'")]
    DuplicateCellId { id: String },

    #[error("cell '{id}' has non-positive weight")]
    NonPositiveWeight { id: String },

    #[error("cell '{id}' has an atomic mass with count 0; counts must be at least 1")]
    ZeroAtomCount { id: String },

    #[error(
        "cell '{id}' addresses entry ({row}, {col}), which is not strictly upper \
         triangular within block size {block_size}"
    )]
    BadEntryIndex {
        id: String,
        row: usize,
        col: usize,
        block_size: usize,
    },

    #[error("no cell with id '{id}'")]
    UnknownCell { id: String },

    #[error("fields have different cell skeletons: {detail}")]
    SkeletonMismatch { detail: String },

    #[error("certificate does not replay: {detail}")]
    CertificateInvalid { detail: String },

    #[error("k must be at least 1")]
    InvalidK,

    #[error("cell '{cell}' has a zero superdiagonal entry at ({index}, {next}); perturb first", next = index + 1)]
    ZeroSuperdiagonal { cell: String, index: usize },

    #[error(
        "field has a superdiagonal entry vanishing on some cell ({detail}); \
         the similarity reduction and the uniqueness decision require invertible \
         superdiagonals -- apply a superdiagonal perturbation first"
    )]
    SuperdiagonalsNotInvertible { detail: String },

    #[error("{context}: infinite multiplicity present (continuous cell '{cell}')")]
    InfiniteMultiplicity { context: String, cell: String },

    #[error("cell '{cell}' is not in canonical form: {detail}")]
    NotCanonical { cell: String, detail: String },

    #[error("matrix is not idempotent; P^2 - P has a nonzero entry at ({row}, {col})")]
    NotIdempotent {
        row: usize,
        col: usize,
        residual: Box<ExactMatrix>,
    },

    #[error("matrix does not commute with the model; AP - PA has a nonzero entry at ({row}, {col})")]
    NotInCommutant {
        row: usize,
        col: usize,
        residual: Box<ExactMatrix>,
    },

    #[error("family members {i} and {j} do not commute")]
    FamilyNotCommuting { i: usize, j: usize },

    #[error(
        "idempotent family is not maximal abelian: it generates {found} minimal \
         idempotents, the model has {expected} strongly irreducible summands"
    )]
    FamilyNotMaximal { expected: usize, found: usize },

    #[error("minimal idempotents cannot be matched: {detail}")]
    AtomMatchImpossible { detail: String },

    #[error(
        "idempotents are not similar inside the commutant: class vectors differ \
         at spectral value {value}, block size {block_size} ({left} vs {right}); \
         the per-carrier trace is a similarity invariant"
    )]
    ClassVectorMismatch {
        value: String,
        block_size: usize,
        left: String,
        right: String,
    },

    #[error("model summands must have distinct (spectral value, block size) pairs; {detail}")]
    DuplicateSummand { detail: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
