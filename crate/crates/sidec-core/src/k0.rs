//! Similarity-class invariants of the commutant and the uniqueness verdict.
//!
//! For a canonical field, the rank function assigns to each spectral value
//! the number of distinct block sizes present there. Idempotent classes in
//! the commutant are classified by their per-summand counts -- the class
//! vector -- and the semigroup of classes is the free commutative monoid on
//! the rank-function coordinates, with its group completion the
//! corresponding free abelian group. The decomposition into strongly
//! irreducible summands is unique up to similarity exactly when every
//! multiplicity in the field's profile is finite; a continuous cell defeats
//! uniqueness, and the witness is the pair of inequivalent idempotent
//! families described symbolically in [`UniquenessVerdict`].


use serde::{Deserialize, Serialize};

use crate::commutant::{diagonalize_idempotent, JordanSumModel};
use crate::error::{Error, Result};
use crate::field::{Multiplicity, OperatorField};
use crate::matrix::ExactMatrix;
use crate::scalar::{GaussianRational, Rational};
use crate::si::field_si_check;

/// Idempotent class coordinates at one spectral value, by decreasing block
/// size.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankVector {
    pub spectral_value: GaussianRational,
    /// (block size, count) pairs, block sizes strictly decreasing.
    pub coordinates: Vec<(usize, u64)>,
}

impl RankVector {
    pub fn counts(&self) -> Vec<u64> {
        self.coordinates.iter().map(|&(_, c)| c).collect()
    }
}

/// The per-spectral-value presentation of the idempotent class semigroup
/// and its group completion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectralClassGroup {
    pub spectral_value: GaussianRational,
    /// Number of distinct block sizes at this value.
    pub rank: usize,
    /// `N^rank`, written as text for reports.
    #[serde(rename = "V")]
    pub semigroup: String,
    /// `Z^rank`.
    #[serde(rename = "K0")]
    pub group: String,
    /// Block sizes at this value, strictly decreasing.
    pub block_sizes: Vec<usize>,
    /// Identity class coordinates: the multiplicity at each block size, by
    /// decreasing size.
    pub identity_class: Vec<Multiplicity>,
    /// Indices into `identity_class` of infinite coordinates. Every bounded
    /// class function vanishes there, so they contribute nothing to the
    /// group.
    pub vanishing: Vec<usize>,
    /// No infinite coordinate at this value.
    pub unique_here: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct K0Descriptor {
    pub per_value: Vec<SpectralClassGroup>,
}

fn require_canonical(field: &OperatorField) -> Result<()> {
    field.validate()?;
    for cell in &field.cells {
        if !cell.is_canonical() {
            return Err(Error::NotCanonical {
                cell: cell.id.clone(),
                detail: "expected unit superdiagonal and no other strict-upper entries".into(),
            });
        }
    }
    Ok(())
}

/// The rank function of a canonical field: spectral value -> number of
/// distinct block sizes with positive weight there. Simple by construction,
/// since a finite-cell field takes finitely many values.
pub fn spectral_rank_function(
    field: &OperatorField,
) -> Result<Vec<(GaussianRational, usize)>> {
    require_canonical(field)?;
    let profile = field.multiplicity_profile();
    let mut out: Vec<(GaussianRational, usize)> = Vec::new();
    for entry in &profile.entries {
        match out.iter_mut().find(|(v, _)| v == &entry.spectral_value) {
            Some((_, r)) => *r += 1,
            None => out.push((entry.spectral_value.clone(), 1)),
        }
    }
    Ok(out)
}

/// The class semigroup and group presentations of a canonical field,
/// per spectral value, with the identity class spelled out. Infinite
/// multiplicities are allowed; their coordinates are flagged vanishing.
pub fn class_group_descriptor(field: &OperatorField) -> Result<K0Descriptor> {
    require_canonical(field)?;
    let profile = field.multiplicity_profile();
    let mut grouped: Vec<(GaussianRational, Vec<(usize, Multiplicity)>)> = Vec::new();
    for entry in &profile.entries {
        match grouped.iter_mut().find(|(v, _)| v == &entry.spectral_value) {
            Some((_, coords)) => coords.push((entry.block_size, entry.multiplicity.clone())),
            None => grouped.push((
                entry.spectral_value.clone(),
                vec![(entry.block_size, entry.multiplicity.clone())],
            )),
        }
    }
    let per_value = grouped
        .into_iter()
        .map(|(spectral_value, mut coords)| {
            coords.sort_by_key(|c| std::cmp::Reverse(c.0));
            let rank = coords.len();
            let vanishing: Vec<usize> = coords
                .iter()
                .enumerate()
                .filter(|(_, (_, m))| !m.is_finite())
                .map(|(i, _)| i)
                .collect();
            SpectralClassGroup {
                spectral_value,
                rank,
                semigroup: format!("N^{rank}"),
                group: format!("Z^{rank}"),
                block_sizes: coords.iter().map(|&(s, _)| s).collect(),
                identity_class: coords.into_iter().map(|(_, m)| m).collect(),
                unique_here: vanishing.is_empty(),
                vanishing,
            }
        })
        .collect();
    Ok(K0Descriptor { per_value })
}

/// The class vector of a commutant idempotent: for each spectral value, the
/// per-summand counts (1 / block size) * trace of the restriction to the
/// summand carrier, by decreasing block size. Two commutant idempotents are
/// similar inside the commutant exactly when their vectors agree; see
/// [`similarity_between_idempotents`].
pub fn class_vector(model: &JordanSumModel, q: &ExactMatrix) -> Result<Vec<RankVector>> {
    let a = model.matrix()?;
    if let Some((row, col, residual)) = q.idempotency_defect() {
        return Err(Error::NotIdempotent {
            row,
            col,
            residual: Box::new(residual),
        });
    }
    let commutator = a.mul(q).sub(&q.mul(&a));
    if let Some((row, col)) = commutator.first_nonzero() {
        return Err(Error::NotInCommutant {
            row,
            col,
            residual: Box::new(commutator),
        });
    }
    let mut out: Vec<RankVector> = Vec::new();
    for (i, s) in model.summands().iter().enumerate() {
        let (start, len) = model.carrier(i);
        let mut trace = GaussianRational::zero();
        for t in start..start + len {
            trace = &trace + q.get(t, t);
        }
        assert!(trace.is_real());
        let ratio = trace.re() / &Rational::from_integer(s.block_size.into());
        assert!(
            ratio.denom() == &num_bigint::BigInt::from(1) && !ratio.numer().sign().eq(&num_bigint::Sign::Minus),
            "carrier trace of a commutant idempotent is a nonnegative multiple of the block size"
        );
        let count = u64::try_from(ratio.numer().clone()).expect("small count");
        match out
            .iter_mut()
            .find(|v| v.spectral_value == s.spectral_value)
        {
            Some(v) => v.coordinates.push((s.block_size, count)),
            None => out.push(RankVector {
                spectral_value: s.spectral_value.clone(),
                coordinates: vec![(s.block_size, count)],
            }),
        }
    }
    // Summands are sorted by decreasing size within a value already.
    Ok(out)
}

/// An explicit similarity between two commutant idempotents with equal
/// class vectors, or the exact trace obstruction when the vectors differ.
pub fn similarity_between_idempotents(
    model: &JordanSumModel,
    p: &ExactMatrix,
    q: &ExactMatrix,
) -> Result<ExactMatrix> {
    let vp = class_vector(model, p)?;
    let vq = class_vector(model, q)?;
    for (a, b) in vp.iter().zip(vq.iter()) {
        for (&(size, ca), &(_, cb)) in a.coordinates.iter().zip(b.coordinates.iter()) {
            if ca != cb {
                return Err(Error::ClassVectorMismatch {
                    value: a.spectral_value.to_string(),
                    block_size: size,
                    left: ca.to_string(),
                    right: cb.to_string(),
                });
            }
        }
    }
    let dp = diagonalize_idempotent(model, p)?;
    let dq = diagonalize_idempotent(model, q)?;
    // Equal class vectors mean equal per-summand rank profiles, but the 0/1
    // patterns may sit on different copies; permute within summands.
    let copies = model.copies();
    let r = copies.len();
    let dim = model.total_dimension();
    let mut perm = ExactMatrix::zeros(dim, dim);
    let mut used = vec![false; r];
    for info_u in copies.iter() {
        let on_p = dp.diagonal.get(info_u.offset, info_u.offset).is_one();
        let v = copies
            .iter()
            .enumerate()
            .position(|(v, info_v)| {
                !used[v]
                    && info_v.summand == info_u.summand
                    && dq.diagonal.get(info_v.offset, info_v.offset).is_one() == on_p
            })
            .expect("equal rank profiles admit a copy matching");
        used[v] = true;
        let info_v = &copies[v];
        for t in 0..info_u.block_size {
            perm.set(info_u.offset + t, info_v.offset + t, GaussianRational::one());
        }
    }
    // perm * diag(q-pattern) * perm^T = diag(p-pattern); assemble
    // S = Xp^-1 * perm * Xq, so that S q S^-1 = p.
    let perm_inv = perm.transpose();
    let s = dp.transform_inv.mul(&perm).mul(&dq.transform);
    let s_inv = dq.transform_inv.mul(&perm_inv).mul(&dp.transform);
    debug_assert!(s.mul(&s_inv).is_identity());
    assert_eq!(s.mul(q).mul(&s_inv), *p, "similarity lands on the target idempotent");
    Ok(s)
}

/// A witness that uniqueness fails: one spectral point carrying infinite
/// multiplicity at one block size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonUniquenessWitness {
    pub spectral_value: GaussianRational,
    pub block_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessVerdict {
    pub unique: bool,
    pub witnesses: Vec<NonUniquenessWitness>,
    /// Symbolic description of two inequivalent maximal abelian idempotent
    /// families when uniqueness fails.
    pub narrative: Option<String>,
}

fn witness_narrative(witnesses: &[NonUniquenessWitness]) -> String {
    let mut text = String::from(
        "At the listed spectral points the diagonal part acts with infinite \
         multiplicity, and two bounded maximal abelian families of idempotents \
         in the commutant exist that no invertible commutant element can carry \
         onto each other: one family contains minimal idempotents whose fiber \
         rank equals the block size (coordinate projections of the multiplicity \
         space), while in the other family every nonzero idempotent has infinite \
         fiber rank (characteristic-function projections of a continuous \
         parameter). Conjugation preserves fiber rank, so the families are not \
         similar. Witnesses:",
    );
    for w in witnesses {
        text.push_str(&format!(
            " block size {} at {};",
            w.block_size, w.spectral_value
        ));
    }
    text
}

/// Decide uniqueness of the strongly irreducible decomposition for a valid
/// field satisfying the invertible-superdiagonal hypothesis. Uniqueness
/// holds exactly when the multiplicity profile carries no infinite token;
/// the all-size-one case is the spectral picture of a normal operator and
/// is decided by the same rule.
pub fn decide_uniqueness(field: &OperatorField) -> Result<UniquenessVerdict> {
    field.validate()?;
    let si = field_si_check(field);
    if !si.invertible_superdiagonals {
        return Err(Error::SuperdiagonalsNotInvertible {
            detail: format!("cells {:?}", si.failing_cells),
        });
    }
    let profile = field.multiplicity_profile();
    let witnesses: Vec<NonUniquenessWitness> = profile
        .infinite_entries()
        .into_iter()
        .map(|e| NonUniquenessWitness {
            spectral_value: e.spectral_value.clone(),
            block_size: e.block_size,
        })
        .collect();
    let unique = witnesses.is_empty();
    let narrative = if unique {
        None
    } else {
        Some(witness_narrative(&witnesses))
    };
    Ok(UniquenessVerdict {
        unique,
        witnesses,
        narrative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{atomic_cell, canonical_cell, continuous_cell};
    use crate::scalar::ratio;

    fn gr(n: i64) -> GaussianRational {
        GaussianRational::from_integer(n)
    }

    /// Canonical field with sizes 3, 2, 1 at multiplicities 2, 3, 2 over a
    /// single spectral value.
    fn rank_three_field() -> OperatorField {
        OperatorField::new(
            "rank-three",
            vec![
                canonical_cell("c3", gr(0), ratio(1, 1), 2, 3),
                canonical_cell("c2", gr(0), ratio(1, 1), 3, 2),
                canonical_cell("c1", gr(0), ratio(1, 1), 2, 1),
            ],
        )
    }

    #[test]
    fn rank_function_counts_distinct_sizes() {
        let r = spectral_rank_function(&rank_three_field()).unwrap();
        assert_eq!(r, vec![(gr(0), 3)]);

        let single = OperatorField::new(
            "single",
            vec![canonical_cell("c", gr(2), ratio(1, 1), 4, 3)],
        );
        assert_eq!(spectral_rank_function(&single).unwrap(), vec![(gr(2), 1)]);

        let two_values = OperatorField::new(
            "two",
            vec![
                canonical_cell("a2", gr(0), ratio(1, 1), 1, 2),
                canonical_cell("a1", gr(0), ratio(1, 1), 1, 1),
                canonical_cell("b4", gr(1), ratio(1, 1), 1, 4),
            ],
        );
        assert_eq!(
            spectral_rank_function(&two_values).unwrap(),
            vec![(gr(0), 2), (gr(1), 1)]
        );
    }

    #[test]
    fn rank_function_requires_canonical_input() {
        let field = OperatorField::new(
            "raw",
            vec![atomic_cell("c", gr(0), ratio(1, 1), 1, 2, &[((1, 2), gr(2))])],
        );
        assert!(matches!(
            spectral_rank_function(&field),
            Err(Error::NotCanonical { .. })
        ));
    }

    #[test]
    fn descriptor_of_the_reference_field() {
        let d = class_group_descriptor(&rank_three_field()).unwrap();
        assert_eq!(d.per_value.len(), 1);
        let g = &d.per_value[0];
        assert_eq!(g.rank, 3);
        assert_eq!(g.semigroup, "N^3");
        assert_eq!(g.group, "Z^3");
        assert_eq!(g.block_sizes, vec![3, 2, 1]);
        assert_eq!(
            g.identity_class,
            vec![
                Multiplicity::Finite(2),
                Multiplicity::Finite(3),
                Multiplicity::Finite(2),
            ]
        );
        assert!(g.vanishing.is_empty());
        assert!(g.unique_here);
    }

    #[test]
    fn descriptor_of_a_trivial_field() {
        let field = OperatorField::new(
            "trivial",
            vec![canonical_cell("c", gr(5), ratio(1, 1), 1, 1)],
        );
        let d = class_group_descriptor(&field).unwrap();
        let g = &d.per_value[0];
        assert_eq!((g.rank, g.semigroup.as_str(), g.group.as_str()), (1, "N^1", "Z^1"));
        assert_eq!(g.identity_class, vec![Multiplicity::Finite(1)]);
    }

    #[test]
    fn infinite_coordinate_is_flagged_vanishing() {
        let field = OperatorField::new(
            "inf",
            vec![continuous_cell(
                "c",
                gr(0),
                ratio(1, 1),
                2,
                &[((1, 2), gr(1))],
            )],
        );
        let d = class_group_descriptor(&field).unwrap();
        let g = &d.per_value[0];
        assert!(!g.unique_here);
        assert_eq!(g.vanishing, vec![0]);
        assert_eq!(g.identity_class, vec![Multiplicity::Infinite]);
    }

    #[test]
    fn identity_class_vector_of_the_reference_model() {
        let model = JordanSumModel::from_parts(&[(3, 2, gr(0)), (2, 3, gr(0)), (1, 2, gr(0))])
            .unwrap();
        let v = class_vector(&model, &ExactMatrix::identity(14)).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].coordinates, vec![(3, 2), (2, 3), (1, 2)]);
        assert_eq!(v[0].counts(), vec![2, 3, 2]);

        let zero = class_vector(&model, &ExactMatrix::zeros(14, 14)).unwrap();
        assert_eq!(zero[0].counts(), vec![0, 0, 0]);

        // A single size-2 copy projection: (0, 1, 0).
        let p = model.copy_projection(2);
        let vp = class_vector(&model, &p).unwrap();
        assert_eq!(vp[0].counts(), vec![0, 1, 0]);
    }

    #[test]
    fn similarity_found_for_equal_vectors_and_obstruction_reported_otherwise() {
        let model = JordanSumModel::from_parts(&[(2, 2, gr(0))]).unwrap();
        let p = model.copy_projection(0);
        let q = model.copy_projection(1);
        let s = similarity_between_idempotents(&model, &p, &q).unwrap();
        let s_inv = s.inverse().unwrap();
        assert_eq!(s.mul(&q).mul(&s_inv), p);
        let a = model.matrix().unwrap();
        assert!(s.commutes_with(&a));

        let sum = p.add(&q);
        match similarity_between_idempotents(&model, &p, &sum) {
            Err(Error::ClassVectorMismatch { left, right, .. }) => {
                assert_eq!((left.as_str(), right.as_str()), ("1", "2"));
            }
            other => panic!("expected class vector mismatch, got {other:?}"),
        }
    }

    #[test]
    fn finite_multiplicity_is_unique() {
        let verdict = decide_uniqueness(&rank_three_field()).unwrap();
        assert!(verdict.unique);
        assert!(verdict.witnesses.is_empty());
        assert!(verdict.narrative.is_none());
    }

    #[test]
    fn continuous_cell_defeats_uniqueness() {
        let field = OperatorField::new(
            "inf",
            vec![continuous_cell(
                "c",
                gr(0),
                ratio(1, 1),
                3,
                &[((1, 2), gr(1)), ((2, 3), gr(1))],
            )],
        );
        let verdict = decide_uniqueness(&field).unwrap();
        assert!(!verdict.unique);
        assert_eq!(verdict.witnesses.len(), 1);
        assert_eq!(verdict.witnesses[0].block_size, 3);
        assert!(verdict.narrative.is_some());
    }

    #[test]
    fn normal_operator_case_follows_the_same_rule() {
        // All-size-one cells: finite atoms are unique, a continuous cell is
        // the infinite-multiplicity scalar picture and is not.
        let finite = OperatorField::new(
            "normal-finite",
            vec![atomic_cell("a", gr(1), ratio(1, 1), 5, 1, &[])],
        );
        assert!(decide_uniqueness(&finite).unwrap().unique);

        let infinite = OperatorField::new(
            "normal-infinite",
            vec![continuous_cell("a", gr(1), ratio(1, 1), 1, &[])],
        );
        let verdict = decide_uniqueness(&infinite).unwrap();
        assert!(!verdict.unique);
        assert_eq!(verdict.witnesses[0].block_size, 1);
    }

    #[test]
    fn zero_superdiagonal_routes_to_perturbation() {
        let field = OperatorField::new(
            "blocked",
            vec![atomic_cell("c", gr(0), ratio(1, 1), 1, 2, &[])],
        );
        assert!(matches!(
            decide_uniqueness(&field),
            Err(Error::SuperdiagonalsNotInvertible { .. })
        ));
    }
}
