//! Strong irreducibility of upper-triangular fibers.
//!
//! For an upper-triangular matrix the commutant contains no idempotent other
//! than 0 and I exactly when the diagonal is constant and every
//! superdiagonal entry is nonzero. [`triangular_si_test`] checks that
//! syntactic criterion; [`weyr_si_oracle`] independently decides the same
//! question by testing whether the rank sequence of powers of M - aI is the
//! single-block staircase. The two must agree everywhere, and the test suite
//! holds them to it.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::OperatorField;
use crate::matrix::ExactMatrix;
use crate::scalar::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SiFailure {
    /// Diagonal entries at the two named positions (0-based) differ.
    NonConstantDiagonal { first: usize, other: usize },
    /// The (index, index+1) superdiagonal entry (1-based) vanishes.
    ZeroSuperdiagonal { index: usize },
}

impl std::fmt::Display for SiFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SiFailure::NonConstantDiagonal { first, other } => write!(
                f,
                "diagonal entries {} and {} differ",
                first + 1,
                other + 1
            ),
            SiFailure::ZeroSuperdiagonal { index } => {
                write!(f, "superdiagonal entry ({}, {}) is zero", index, index + 1)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiVerdict {
    pub strongly_irreducible: bool,
    /// First violated condition, scanning the diagonal then the
    /// superdiagonal.
    pub failure: Option<SiFailure>,
}

fn require_upper_triangular(m: &ExactMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NonSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if let Some((row, col)) = m.first_lower_nonzero() {
        return Err(Error::NotUpperTriangular { row, col });
    }
    Ok(())
}

/// Decide strong irreducibility of an upper-triangular matrix from its
/// entries: constant diagonal and nowhere-vanishing superdiagonal.
pub fn triangular_si_test(m: &ExactMatrix) -> Result<SiVerdict> {
    require_upper_triangular(m)?;
    let n = m.rows();
    for i in 1..n {
        if m.get(i, i) != m.get(0, 0) {
            return Ok(SiVerdict {
                strongly_irreducible: false,
                failure: Some(SiFailure::NonConstantDiagonal { first: 0, other: i }),
            });
        }
    }
    for i in 0..n.saturating_sub(1) {
        if m.get(i, i + 1).is_zero() {
            return Ok(SiVerdict {
                strongly_irreducible: false,
                failure: Some(SiFailure::ZeroSuperdiagonal { index: i + 1 }),
            });
        }
    }
    Ok(SiVerdict {
        strongly_irreducible: true,
        failure: None,
    })
}

/// Independent oracle: an upper-triangular matrix is strongly irreducible
/// iff its diagonal is constant, say equal to alpha, and the ranks of the
/// powers of M - alpha*I fall by exactly one each step, i.e. the matrix is
/// similar to a single Jordan block.
pub fn weyr_si_oracle(m: &ExactMatrix) -> Result<bool> {
    require_upper_triangular(m)?;
    let n = m.rows();
    let alpha = m.get(0, 0).clone();
    for i in 1..n {
        if m.get(i, i) != &alpha {
            return Ok(false);
        }
    }
    let ranks = m.weyr_sequence(&alpha);
    Ok((0..=n).all(|j| ranks[j] == n - j))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellSiResult {
    pub cell_id: String,
    pub verdict: SiVerdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSiReport {
    pub cells: Vec<CellSiResult>,
    /// True when every superdiagonal entry is nonzero on every cell: over
    /// finitely many positive-weight cells this is exactly invertibility of
    /// the superdiagonal multiplication operators.
    pub invertible_superdiagonals: bool,
    pub failing_cells: Vec<String>,
    /// Cells with a superdiagonal entry whose modulus squared lies strictly
    /// between zero and the configured threshold. Empty at the default
    /// threshold of zero, which matches the algebraic notion exactly.
    pub near_singular_cells: Vec<String>,
}

pub fn field_si_check(field: &OperatorField) -> FieldSiReport {
    field_si_check_with_threshold(field, &Rational::zero())
}

/// As [`field_si_check`], additionally reporting cells whose superdiagonal
/// moduli squared fall below `threshold_squared` without vanishing.
pub fn field_si_check_with_threshold(
    field: &OperatorField,
    threshold_squared: &Rational,
) -> FieldSiReport {
    let mut cells = Vec::new();
    let mut failing = Vec::new();
    let mut near_singular = Vec::new();
    let mut invertible = true;
    let mut sorted: Vec<&_> = field.cells.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    for cell in sorted {
        let verdict = triangular_si_test(&cell.fiber()).expect("cell fibers are upper triangular");
        if !verdict.strongly_irreducible {
            failing.push(cell.id.clone());
        }
        let mut near = false;
        for i in 1..cell.block_size {
            let sq = cell.superdiagonal(i).modulus_squared();
            if sq.is_zero() {
                invertible = false;
            } else if &sq < threshold_squared {
                near = true;
            }
        }
        if near {
            near_singular.push(cell.id.clone());
        }
        cells.push(CellSiResult {
            cell_id: cell.id.clone(),
            verdict,
        });
    }
    FieldSiReport {
        cells,
        invertible_superdiagonals: invertible,
        failing_cells: failing,
        near_singular_cells: near_singular,
    }
}
