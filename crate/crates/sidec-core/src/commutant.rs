//! Commutants and idempotent structure of canonical-form operators at desk
//! scale.
//!
//! A [`JordanSumModel`] materializes finitely many Jordan-type summands,
//! each block size with a finite multiplicity, into one exact matrix. The
//! commutant of that matrix has a completely explicit basis: within a block
//! the commuting operators are the upper-triangular Toeplitz matrices, and
//! between blocks of different sizes the intertwiners are Toeplitz blocks
//! padded with zero rows below or zero columns on the left. The structured
//! basis is cross-checked against a brute-force oracle that computes the
//! kernel of X -> AX - XB as a linear system.
//!
//! On top of the basis sit the idempotent tools: exact diagonalization of a
//! commutant idempotent by an invertible commutant element, the weighted
//! block-trace rank of an idempotent, extraction of the minimal idempotents
//! of a commuting family, and conjugation of one maximal abelian family of
//! idempotents onto another.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::field::{MassType, OperatorField, DEFAULT_DIM_CAP};
use crate::matrix::ExactMatrix;
use crate::scalar::{GaussianRational, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JordanSummand {
    pub block_size: usize,
    pub multiplicity: u64,
    #[serde(rename = "value")]
    pub spectral_value: GaussianRational,
    /// Ids of the field cells this summand came from, when built from a
    /// field; empty for models assembled directly.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cell_ids: Vec<String>,
}

/// A finite direct sum of Jordan-type blocks: for each summand,
/// `multiplicity` copies of the `block_size` x `block_size` block with
/// constant diagonal `spectral_value` and unit superdiagonal.
///
/// Summands are kept sorted by spectral value and then by decreasing block
/// size, with distinct (value, size) pairs; copy indices, carrier offsets
/// and every derived report follow that order deterministically.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JordanSumModel {
    summands: Vec<JordanSummand>,
}

/// One copy of one summand inside the materialized matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CopyInfo {
    pub summand: usize,
    pub copy: usize,
    pub offset: usize,
    pub block_size: usize,
}

impl JordanSumModel {
    pub fn new(mut summands: Vec<JordanSummand>) -> Result<Self> {
        summands.sort_by(|a, b| {
            a.spectral_value
                .cmp(&b.spectral_value)
                .then(b.block_size.cmp(&a.block_size))
        });
        for pair in summands.windows(2) {
            if pair[0].spectral_value == pair[1].spectral_value
                && pair[0].block_size == pair[1].block_size
            {
                return Err(Error::DuplicateSummand {
                    detail: format!(
                        "value {} at block size {}",
                        pair[0].spectral_value, pair[0].block_size
                    ),
                });
            }
        }
        for s in &summands {
            if s.block_size == 0 || s.multiplicity == 0 {
                return Err(Error::DuplicateSummand {
                    detail: "block sizes and multiplicities must be positive".into(),
                });
            }
        }
        if summands.is_empty() {
            return Err(Error::EmptyField);
        }
        Ok(Self { summands })
    }

    /// Shorthand constructor from (block size, multiplicity, value) triples.
    pub fn from_parts(parts: &[(usize, u64, GaussianRational)]) -> Result<Self> {
        Self::new(
            parts
                .iter()
                .map(|(block_size, multiplicity, value)| JordanSummand {
                    block_size: *block_size,
                    multiplicity: *multiplicity,
                    spectral_value: value.clone(),
                    cell_ids: Vec::new(),
                })
                .collect(),
        )
    }

    /// Build the model underlying a canonical field. Every cell must be in
    /// canonical form and atomic: a continuous cell has infinite spectral
    /// multiplicity and cannot be materialized as a finite matrix.
    pub fn from_canonical_field(field: &OperatorField) -> Result<Self> {
        field.validate()?;
        let mut groups: BTreeMap<(GaussianRational, usize), (u64, Vec<String>)> = BTreeMap::new();
        for cell in &field.cells {
            if !cell.is_canonical() {
                return Err(Error::NotCanonical {
                    cell: cell.id.clone(),
                    detail: "expected unit superdiagonal and no other strict-upper entries".into(),
                });
            }
            let count = match cell.mass {
                MassType::Atomic { count } => count,
                MassType::Continuous => {
                    return Err(Error::InfiniteMultiplicity {
                        context: "materializing a finite model".into(),
                        cell: cell.id.clone(),
                    })
                }
            };
            let slot = groups
                .entry((cell.spectral_value.clone(), cell.block_size))
                .or_insert_with(|| (0, Vec::new()));
            slot.0 += count;
            slot.1.push(cell.id.clone());
        }
        Self::new(
            groups
                .into_iter()
                .map(|((value, size), (mult, mut ids))| {
                    ids.sort();
                    JordanSummand {
                        block_size: size,
                        multiplicity: mult,
                        spectral_value: value,
                        cell_ids: ids,
                    }
                })
                .collect(),
        )
    }

    pub fn summands(&self) -> &[JordanSummand] {
        &self.summands
    }

    pub fn total_dimension(&self) -> usize {
        self.summands
            .iter()
            .map(|s| s.block_size * s.multiplicity as usize)
            .sum()
    }

    pub fn total_copies(&self) -> usize {
        self.summands.iter().map(|s| s.multiplicity as usize).sum()
    }

    /// All copies in order, with their carrier offsets.
    pub fn copies(&self) -> Vec<CopyInfo> {
        let mut out = Vec::with_capacity(self.total_copies());
        let mut offset = 0;
        for (summand, s) in self.summands.iter().enumerate() {
            for copy in 0..s.multiplicity as usize {
                out.push(CopyInfo {
                    summand,
                    copy,
                    offset,
                    block_size: s.block_size,
                });
                offset += s.block_size;
            }
        }
        out
    }

    /// Carrier range (start, length) of summand `i` in the materialization.
    pub fn carrier(&self, i: usize) -> (usize, usize) {
        let start: usize = self.summands[..i]
            .iter()
            .map(|s| s.block_size * s.multiplicity as usize)
            .sum();
        (
            start,
            self.summands[i].block_size * self.summands[i].multiplicity as usize,
        )
    }

    pub fn matrix(&self) -> Result<ExactMatrix> {
        self.matrix_with_cap(DEFAULT_DIM_CAP)
    }

    pub fn matrix_with_cap(&self, cap: usize) -> Result<ExactMatrix> {
        let dim = self.total_dimension();
        if dim > cap {
            return Err(Error::DimensionCap { dim, cap });
        }
        let mut m = ExactMatrix::zeros(dim, dim);
        for info in self.copies() {
            let s = &self.summands[info.summand];
            m.embed(
                info.offset,
                info.offset,
                &ExactMatrix::jordan_block(info.block_size, &s.spectral_value),
            );
        }
        Ok(m)
    }

    /// Projection onto the carrier of one copy: the simplest idempotents in
    /// the commutant, and the atoms of the canonical family.
    pub fn copy_projection(&self, copy_index: usize) -> ExactMatrix {
        let copies = self.copies();
        let info = &copies[copy_index];
        let dim = self.total_dimension();
        let mut p = ExactMatrix::zeros(dim, dim);
        for t in 0..info.block_size {
            p.set(info.offset + t, info.offset + t, GaussianRational::one());
        }
        p
    }

    /// The leading matrix of a commutant element: the copies x copies matrix
    /// of top-left block entries. On the commutant this map is an algebra
    /// homomorphism onto a block upper-triangular matrix algebra, and it is
    /// what the idempotent machinery reasons about.
    pub fn leading_matrix(&self, b: &ExactMatrix) -> ExactMatrix {
        let copies = self.copies();
        ExactMatrix::from_fn(copies.len(), copies.len(), |u, v| {
            b.get(copies[u].offset, copies[v].offset).clone()
        })
    }

    /// Lift a copies x copies matrix of scalars, supported on same-summand
    /// pairs, to the commutant: scalar s at (u, v) becomes s * I on the
    /// (copy u, copy v) block. Entries between different summands must be
    /// zero; intertwiners there are not scalar blocks.
    fn lift_same_size(&self, s: &ExactMatrix) -> ExactMatrix {
        let copies = self.copies();
        let dim = self.total_dimension();
        let mut out = ExactMatrix::zeros(dim, dim);
        for (u, cu) in copies.iter().enumerate() {
            for (v, cv) in copies.iter().enumerate() {
                let e = s.get(u, v);
                if e.is_zero() {
                    continue;
                }
                assert_eq!(
                    cu.summand, cv.summand,
                    "scalar lift is only defined within a summand"
                );
                for t in 0..cu.block_size {
                    out.set(cu.offset + t, cv.offset + t, e.clone());
                }
            }
        }
        out
    }
}

impl<'de> Deserialize<'de> for JordanSumModel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            summands: Vec<JordanSummand>,
        }
        let raw = Raw::deserialize(d)?;
        JordanSumModel::new(raw.summands).map_err(D::Error::custom)
    }
}

/// Basis of the space of X with A*X = X*B, computed as the kernel of the
/// linear map X -> AX - XB on entry vectors. Brute force by design: this is
/// the oracle the structured basis is checked against.
pub fn sylvester_kernel(a: &ExactMatrix, b: &ExactMatrix) -> Vec<ExactMatrix> {
    assert!(a.is_square() && b.is_square());
    let p = a.rows();
    let q = b.rows();
    let mut system = ExactMatrix::zeros(p * q, p * q);
    for i in 0..p {
        for j in 0..q {
            let row = i * q + j;
            for k in 0..p {
                let coeff = a.get(i, k);
                if !coeff.is_zero() {
                    let cur = system.get(row, k * q + j) + coeff;
                    system.set(row, k * q + j, cur);
                }
            }
            for l in 0..q {
                let coeff = b.get(l, j);
                if !coeff.is_zero() {
                    let cur = system.get(row, i * q + l) - coeff;
                    system.set(row, i * q + l, cur);
                }
            }
        }
    }
    system
        .kernel()
        .into_iter()
        .map(|v| ExactMatrix::from_fn(p, q, |i, j| v.get(i * q + j, 0).clone()))
        .collect()
}

/// Which structural slot a basis element spans.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisTag {
    pub from_copy: usize,
    pub to_copy: usize,
    /// Toeplitz diagonal index within the intertwiner block.
    pub degree: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommutantBasis {
    pub model: JordanSumModel,
    pub elements: Vec<ExactMatrix>,
    pub tags: Vec<BasisTag>,
}

impl CommutantBasis {
    pub fn dimension(&self) -> usize {
        self.elements.len()
    }
}

/// The intertwiner block sending copy `v` (size q) into copy `u` (size p)
/// along Toeplitz diagonal `degree`: ones on the shifted diagonal of the
/// min(p, q) Toeplitz block, placed flush to the top rows when p > q and
/// flush to the right columns when p < q.
fn intertwiner_block(p: usize, q: usize, degree: usize) -> ExactMatrix {
    let m = p.min(q);
    let col_shift = q - m;
    let mut block = ExactMatrix::zeros(p, q);
    for t in 0..m - degree {
        block.set(t, col_shift + t + degree, GaussianRational::one());
    }
    block
}

/// Closed-form basis of the commutant of the model matrix, one element per
/// (ordered copy pair with equal spectral value, Toeplitz diagonal). The
/// construction is verified before it is returned: every element commutes
/// with the model matrix exactly, and the count matches the brute-force
/// Sylvester oracle.
pub fn commutant_basis(model: &JordanSumModel) -> Result<CommutantBasis> {
    let a = model.matrix()?;
    let copies = model.copies();
    let summands = model.summands();
    let dim = model.total_dimension();
    let mut elements = Vec::new();
    let mut tags = Vec::new();
    for (u, cu) in copies.iter().enumerate() {
        for (v, cv) in copies.iter().enumerate() {
            if summands[cu.summand].spectral_value != summands[cv.summand].spectral_value {
                continue;
            }
            let block = (cu.block_size, cv.block_size);
            for degree in 0..block.0.min(block.1) {
                let mut e = ExactMatrix::zeros(dim, dim);
                e.embed(
                    cu.offset,
                    cv.offset,
                    &intertwiner_block(block.0, block.1, degree),
                );
                assert!(
                    e.commutes_with(&a),
                    "structured basis element must commute with the model"
                );
                elements.push(e);
                tags.push(BasisTag {
                    from_copy: u,
                    to_copy: v,
                    degree,
                });
            }
        }
    }
    let oracle_dim = sylvester_kernel(&a, &a).len();
    if oracle_dim != elements.len() {
        return Err(Error::AtomMatchImpossible {
            detail: format!(
                "structured commutant dimension {} disagrees with the oracle {}",
                elements.len(),
                oracle_dim
            ),
        });
    }
    Ok(CommutantBasis {
        model: model.clone(),
        elements,
        tags,
    })
}

fn require_idempotent(p: &ExactMatrix) -> Result<()> {
    if let Some((row, col, residual)) = p.idempotency_defect() {
        return Err(Error::NotIdempotent {
            row,
            col,
            residual: Box::new(residual),
        });
    }
    Ok(())
}

fn require_in_commutant(a: &ExactMatrix, p: &ExactMatrix) -> Result<()> {
    let residual = a.mul(p).sub(&p.mul(a));
    if let Some((row, col)) = residual.first_nonzero() {
        return Err(Error::NotInCommutant {
            row,
            col,
            residual: Box::new(residual),
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdempotentDiagonalization {
    pub transform: ExactMatrix,
    pub transform_inv: ExactMatrix,
    /// transform * P * transform_inv: diagonal with entries 0 and 1, full
    /// copies at a time.
    pub diagonal: ExactMatrix,
}

/// Conjugate an idempotent of the commutant to a 0/1 diagonal matrix by an
/// invertible element of the commutant, exactly.
///
/// Stage one works on the leading matrix: within each summand its diagonal
/// block is an idempotent scalar matrix, conjugated to a sorted 0/1 diagonal
/// by a range-plus-kernel basis and lifted back. The stage is skipped for
/// summands whose block already has a 0/1 diagonal and off-diagonal entries
/// only between the 0 and 1 eigenspaces, so inputs shaped like the printed
/// block form are fixed rather than resorted. Stage two removes everything
/// off the target in one corrective conjugation X = I + C built from the
/// residue; idempotency makes the residue square to zero blockwise, the
/// correction is nilpotent-compatible, and for a pure block-form input the
/// inverse is exactly I - C.
pub fn diagonalize_idempotent(
    model: &JordanSumModel,
    p: &ExactMatrix,
) -> Result<IdempotentDiagonalization> {
    let a = model.matrix()?;
    let dim = model.total_dimension();
    assert_eq!((p.rows(), p.cols()), (dim, dim), "idempotent has model dimension");
    require_idempotent(p)?;
    require_in_commutant(&a, p)?;

    let copies = model.copies();
    let r = copies.len();
    let leading = model.leading_matrix(p);

    // Stage one: per-summand conjugation of the leading diagonal blocks.
    let mut stage_one = ExactMatrix::zeros(r, r);
    let mut stage_one_inv = ExactMatrix::zeros(r, r);
    let mut copy_start = 0;
    for s in model.summands() {
        let n = s.multiplicity as usize;
        let block = leading.submatrix(copy_start, copy_start, n, n);
        let (s_block, s_block_inv) = stage_one_block(&block);
        stage_one.embed(copy_start, copy_start, &s_block);
        stage_one_inv.embed(copy_start, copy_start, &s_block_inv);
        copy_start += n;
    }
    let x1 = model.lift_same_size(&stage_one);
    let x1_inv = model.lift_same_size(&stage_one_inv);
    debug_assert!(x1.mul(&x1_inv).is_identity());
    let p1 = x1.mul(p).mul(&x1_inv);

    // Stage two: target D blows each unit leading diagonal entry up to the
    // full copy projection; the correction C = (2D - I)(P1 - D) conjugates
    // P1 onto D.
    let leading1 = model.leading_matrix(&p1);
    let mut target = ExactMatrix::zeros(dim, dim);
    for (u, info) in copies.iter().enumerate() {
        let e = leading1.get(u, u);
        assert!(
            e.is_zero() || e.is_one(),
            "leading diagonal must be 0/1 after stage one"
        );
        if e.is_one() {
            for t in 0..info.block_size {
                target.set(
                    info.offset + t,
                    info.offset + t,
                    GaussianRational::one(),
                );
            }
        }
    }
    let identity = ExactMatrix::identity(dim);
    let residue = p1.sub(&target);
    let correction = target
        .scale(&GaussianRational::from_integer(2))
        .sub(&identity)
        .mul(&residue);
    let x2 = identity.add(&correction);
    let x2_inv = x2
        .inverse()
        .expect("stage-two correction is unipotent modulo the radical");
    let diagonal = x2.mul(&p1).mul(&x2_inv);
    assert_eq!(diagonal, target, "stage two lands exactly on the target");

    let transform = x2.mul(&x1);
    let transform_inv = x1_inv.mul(&x2_inv);
    debug_assert!(transform.mul(&transform_inv).is_identity());
    debug_assert!(transform.commutes_with(&a));
    Ok(IdempotentDiagonalization {
        transform,
        transform_inv,
        diagonal,
    })
}

/// Conjugator for one leading diagonal block (an idempotent scalar matrix):
/// identity when the block is already compatible with a 0/1 diagonal via a
/// pure corner correction, otherwise the range-plus-kernel basis that sorts
/// the ones to the front.
fn stage_one_block(block: &ExactMatrix) -> (ExactMatrix, ExactMatrix) {
    let n = block.rows();
    let diag_zero_one = (0..n).all(|i| {
        let e = block.get(i, i);
        e.is_zero() || e.is_one()
    });
    if diag_zero_one {
        let corners_clear = (0..n).all(|i| {
            (0..n).all(|j| {
                i == j
                    || block.get(i, j).is_zero()
                    || block.get(i, i) != block.get(j, j)
            })
        });
        if corners_clear {
            return (ExactMatrix::identity(n), ExactMatrix::identity(n));
        }
    }
    // Columns of the idempotent spanning its range, then a kernel basis:
    // in that basis the block is the sorted 0/1 diagonal.
    let mut columns: Vec<ExactMatrix> = block
        .pivot_columns()
        .into_iter()
        .map(|j| block.column(j))
        .collect();
    columns.extend(block.kernel());
    assert_eq!(columns.len(), n, "range and kernel of an idempotent fill the space");
    let mut basis = ExactMatrix::zeros(n, n);
    for (j, col) in columns.iter().enumerate() {
        for i in 0..n {
            basis.set(i, j, col.get(i, 0).clone());
        }
    }
    let inv = basis.inverse().expect("range plus kernel basis is invertible");
    (inv, basis)
}

/// The weighted block-trace rank of a commutant idempotent: the sum over
/// summands of (1 / block size) times the trace of the restriction to the
/// summand's carrier. Always a nonnegative integer for idempotents in the
/// commutant -- each restricted trace is the block size times the rank of a
/// leading idempotent -- and returned as an exact rational.
pub fn idempotent_rank(model: &JordanSumModel, q: &ExactMatrix) -> Result<Rational> {
    let a = model.matrix()?;
    require_idempotent(q)?;
    require_in_commutant(&a, q)?;
    let mut total = Rational::zero();
    for i in 0..model.summands().len() {
        let (start, len) = model.carrier(i);
        let mut trace = GaussianRational::zero();
        for t in start..start + len {
            trace = &trace + q.get(t, t);
        }
        assert!(trace.is_real(), "carrier traces of commutant idempotents are real");
        total += trace.re() / &Rational::from_integer(model.summands()[i].block_size.into());
    }
    Ok(total)
}

/// A finite commuting family of idempotents in the commutant, standing for
/// a bounded maximal abelian set of idempotents at desk scale.
#[derive(Clone, Debug, PartialEq)]
pub struct IdempotentFamily {
    members: Vec<ExactMatrix>,
}

impl IdempotentFamily {
    pub fn new(model: &JordanSumModel, members: Vec<ExactMatrix>) -> Result<Self> {
        let a = model.matrix()?;
        for p in &members {
            require_idempotent(p)?;
            require_in_commutant(&a, p)?;
        }
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                if !members[i].commutes_with(&members[j]) {
                    return Err(Error::FamilyNotCommuting { i, j });
                }
            }
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[ExactMatrix] {
        &self.members
    }

    /// The canonical maximal abelian family: all copy projections.
    pub fn canonical(model: &JordanSumModel) -> Self {
        let members = (0..model.total_copies())
            .map(|u| model.copy_projection(u))
            .collect();
        Self { members }
    }

    /// Conjugate every member by x: x * member * x_inv.
    pub fn conjugated(&self, x: &ExactMatrix, x_inv: &ExactMatrix) -> Self {
        Self {
            members: self
                .members
                .iter()
                .map(|p| x.mul(p).mul(x_inv))
                .collect(),
        }
    }

    /// Join of all members in the generated lattice.
    pub fn join(&self) -> ExactMatrix {
        let dim = self
            .members
            .first()
            .map(ExactMatrix::rows)
            .unwrap_or(0);
        let mut join = ExactMatrix::zeros(dim, dim);
        for p in &self.members {
            // p v q = p + q - pq for commuting idempotents.
            join = join.add(p).sub(&join.mul(p));
        }
        join
    }
}

/// The atoms of the lattice generated by a commuting idempotent family:
/// nonzero, pairwise orthogonal, and summing to the family's join. For a
/// maximal abelian family there are as many atoms as the model has copies,
/// each of rank one.
pub fn minimal_idempotents(
    model: &JordanSumModel,
    family: &IdempotentFamily,
) -> Result<Vec<ExactMatrix>> {
    let _ = model.matrix()?;
    let mut atoms = vec![family.join()];
    for p in family.members() {
        let mut refined = Vec::with_capacity(atoms.len() * 2);
        for atom in &atoms {
            let inside = atom.mul(p);
            let outside = atom.sub(&inside);
            if !inside.is_zero() {
                refined.push(inside);
            }
            if !outside.is_zero() {
                refined.push(outside);
            }
        }
        atoms = refined;
    }
    // Deterministic order: group by the summand carrying the atom, keeping
    // refinement order within a group.
    let mut keyed: Vec<(usize, usize, ExactMatrix)> = Vec::with_capacity(atoms.len());
    for (idx, atom) in atoms.into_iter().enumerate() {
        let summand = (0..model.summands().len())
            .find(|&i| {
                let (start, len) = model.carrier(i);
                (start..start + len).any(|t| !atom.get(t, t).is_zero())
            })
            .unwrap_or(0);
        keyed.push((summand, idx, atom));
    }
    keyed.sort_by_key(|(summand, idx, _)| (*summand, *idx));
    Ok(keyed.into_iter().map(|(_, _, atom)| atom).collect())
}

/// An invertible commutant element carrying one maximal abelian family onto
/// another, atom by atom.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyMatch {
    pub transform: ExactMatrix,
    pub transform_inv: ExactMatrix,
    /// Atom pairing: (index into the target family's atoms, index into the
    /// source family's atoms), both in the deterministic atom order.
    pub pairs: Vec<(usize, usize)>,
    pub target_atoms: Vec<ExactMatrix>,
    pub source_atoms: Vec<ExactMatrix>,
}

/// For each atom, the summand whose carrier it occupies, verified to be a
/// single summand with leading rank one.
fn atom_slots(model: &JordanSumModel, atoms: &[ExactMatrix]) -> Result<Vec<usize>> {
    let mut slots = Vec::with_capacity(atoms.len());
    for atom in atoms {
        let mut slot = None;
        for i in 0..model.summands().len() {
            let (start, len) = model.carrier(i);
            let mut trace = GaussianRational::zero();
            for t in start..start + len {
                trace = &trace + atom.get(t, t);
            }
            if trace.is_zero() {
                continue;
            }
            let m = GaussianRational::from_integer(model.summands()[i].block_size as i64);
            if trace != m || slot.is_some() {
                return Err(Error::AtomMatchImpossible {
                    detail: "an atom does not carry exactly one summand copy".into(),
                });
            }
            slot = Some(i);
        }
        slots.push(slot.ok_or_else(|| Error::AtomMatchImpossible {
            detail: "a minimal idempotent has zero trace".into(),
        })?);
    }
    Ok(slots)
}

/// Assemble the commutant element mapping each copy slot onto the range of
/// its matched atom: column (slot j) = N^(m-j) v for a cyclic vector v of
/// the atom's range, N = A - value. Intertwines the model action by
/// construction of the chains.
fn family_conjugator(
    model: &JordanSumModel,
    atoms: &[ExactMatrix],
    slots: &[usize],
) -> Result<ExactMatrix> {
    let copies = model.copies();
    let dim = model.total_dimension();
    // Atoms per summand, in atom order, must fill the summand's copies.
    let mut by_summand: Vec<Vec<usize>> = vec![Vec::new(); model.summands().len()];
    for (t, &slot) in slots.iter().enumerate() {
        by_summand[slot].push(t);
    }
    for (i, s) in model.summands().iter().enumerate() {
        if by_summand[i].len() != s.multiplicity as usize {
            return Err(Error::AtomMatchImpossible {
                detail: format!(
                    "summand with block size {} at {} receives {} atoms, needs {}",
                    s.block_size,
                    s.spectral_value,
                    by_summand[i].len(),
                    s.multiplicity
                ),
            });
        }
    }
    let mut y = ExactMatrix::zeros(dim, dim);
    let a = model.matrix()?;
    for info in &copies {
        let s = &model.summands()[info.summand];
        let atom = &atoms[by_summand[info.summand][info.copy]];
        let m = info.block_size;
        let shifted = a.sub(&ExactMatrix::scalar(dim, &s.spectral_value));
        // First atom column not annihilated by N^(m-1) is a cyclic vector.
        let depth = shifted.pow(m - 1);
        let mut cyclic = None;
        for j in 0..dim {
            let col = atom.column(j);
            if col.is_zero() {
                continue;
            }
            if !depth.mul(&col).is_zero() {
                cyclic = Some(col);
                break;
            }
        }
        let cyclic = cyclic.ok_or_else(|| Error::AtomMatchImpossible {
            detail: "no cyclic vector found; the atom range is not a single block".into(),
        })?;
        let mut chain = cyclic;
        // Columns slot m, m-1, ..., 1 hold v, Nv, ..., N^(m-1)v.
        for j in (0..m).rev() {
            for t in 0..dim {
                y.set(t, info.offset + j, chain.get(t, 0).clone());
            }
            if j > 0 {
                chain = shifted.mul(&chain);
            }
        }
    }
    Ok(y)
}

/// Find an invertible commutant element X with X * Q * X^-1 inside the
/// lattice generated by the target family, for every member Q of the source
/// family, matching minimal idempotents by block size and spectral value.
/// Both families must be maximal abelian: their atoms number the model's
/// copies and sum to the identity.
pub fn conjugate_families(
    model: &JordanSumModel,
    target: &IdempotentFamily,
    source: &IdempotentFamily,
) -> Result<FamilyMatch> {
    let a = model.matrix()?;
    let expected = model.total_copies();
    let target_atoms = minimal_idempotents(model, target)?;
    let source_atoms = minimal_idempotents(model, source)?;
    for atoms in [&target_atoms, &source_atoms] {
        if atoms.len() != expected {
            return Err(Error::FamilyNotMaximal {
                expected,
                found: atoms.len(),
            });
        }
        let mut sum = ExactMatrix::zeros(a.rows(), a.cols());
        for atom in atoms.iter() {
            sum = sum.add(atom);
        }
        if !sum.is_identity() {
            return Err(Error::FamilyNotMaximal {
                expected,
                found: atoms.len(),
            });
        }
    }
    let target_slots = atom_slots(model, &target_atoms)?;
    let source_slots = atom_slots(model, &source_atoms)?;
    let y_target = family_conjugator(model, &target_atoms, &target_slots)?;
    let y_source = family_conjugator(model, &source_atoms, &source_slots)?;
    let y_source_inv = y_source.inverse().map_err(|_| Error::AtomMatchImpossible {
        detail: "source family conjugator is singular".into(),
    })?;
    let y_target_inv = y_target.inverse().map_err(|_| Error::AtomMatchImpossible {
        detail: "target family conjugator is singular".into(),
    })?;
    let transform = y_target.mul(&y_source_inv);
    let transform_inv = y_source.mul(&y_target_inv);
    if !transform.commutes_with(&a) {
        return Err(Error::AtomMatchImpossible {
            detail: "conjugator does not commute with the model".into(),
        });
    }

    // Copy slot -> atom index, for both sides; pairs follow source order.
    let slot_of = |slots: &[usize]| -> Vec<usize> {
        // atoms are grouped per summand in order; assign copy indices.
        let mut next: BTreeMap<usize, usize> = BTreeMap::new();
        let copies = model.copies();
        let mut copy_index_of_atom = vec![0usize; slots.len()];
        for (t, &slot) in slots.iter().enumerate() {
            let within = next.entry(slot).or_insert(0);
            let copy_index = copies
                .iter()
                .position(|c| c.summand == slot && c.copy == *within)
                .expect("copy exists");
            copy_index_of_atom[t] = copy_index;
            *within += 1;
        }
        copy_index_of_atom
    };
    let target_copy_of_atom = slot_of(&target_slots);
    let source_copy_of_atom = slot_of(&source_slots);
    let mut pairs = Vec::with_capacity(expected);
    for (s_idx, copy) in source_copy_of_atom.iter().enumerate() {
        let t_idx = target_copy_of_atom
            .iter()
            .position(|c| c == copy)
            .expect("both sides fill every copy");
        pairs.push((t_idx, s_idx));
        // The conjugation must carry the source atom exactly onto the
        // matched target atom.
        let carried = transform.mul(&source_atoms[s_idx]).mul(&transform_inv);
        if carried != target_atoms[t_idx] {
            return Err(Error::AtomMatchImpossible {
                detail: "conjugated atom does not land on its match".into(),
            });
        }
    }
    // Every source member lands inside the target lattice: it equals the
    // sum of the target atoms matched to the source atoms below it.
    for member in source.members() {
        let carried = transform.mul(member).mul(&transform_inv);
        let mut expected_sum = ExactMatrix::zeros(a.rows(), a.cols());
        for &(t_idx, s_idx) in &pairs {
            let product = source_atoms[s_idx].mul(member);
            if product == source_atoms[s_idx] {
                expected_sum = expected_sum.add(&target_atoms[t_idx]);
            } else if !product.is_zero() {
                return Err(Error::AtomMatchImpossible {
                    detail: "family member does not decompose over its atoms".into(),
                });
            }
        }
        if carried != expected_sum {
            return Err(Error::AtomMatchImpossible {
                detail: "conjugated member leaves the target lattice".into(),
            });
        }
    }
    Ok(FamilyMatch {
        transform,
        transform_inv,
        pairs,
        target_atoms,
        source_atoms,
    })
}
