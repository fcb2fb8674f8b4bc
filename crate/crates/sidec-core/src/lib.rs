//! Exact-arithmetic analysis of operators presented as finite fields of
//! weighted spectral cells: strong-irreducibility tests, canonical-form
//! reductions with similarity certificates, commutant and idempotent
//! structure, and the K-theoretic invariants that decide whether the
//! decomposition into strongly irreducible summands is unique up to
//! similarity.
//!
//! All scalars are Gaussian rationals, so every certificate in the crate is
//! an exact identity that can be replayed by multiplying matrices and
//! comparing entries. Values are immutable after construction and all
//! operations are pure functions, safe to share across threads.

pub mod commutant;
pub mod error;
pub mod field;
pub mod k0;
pub mod matrix;
pub mod reduce;
pub mod scalar;
pub mod si;
#[doc(hidden)]
pub mod testkit;

pub use error::{Error, Result};
pub use field::OperatorField;
pub use matrix::ExactMatrix;
pub use scalar::{GaussianRational, Rational};
