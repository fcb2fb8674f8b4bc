//! Constructive reductions on operator fields.
//!
//! Two moves are implemented, both certified. The superdiagonal perturbation
//! replaces entries of modulus below 1/(2kn) by the real constant 1/(2kn),
//! making every superdiagonal invertible while staying within operator norm
//! 1/k of the original. The similarity reduction conjugates a field with
//! invertible superdiagonals onto its canonical form -- unit superdiagonal,
//! no other strict-upper entries -- cell by cell, with the conjugators and
//! their inverses recorded and the intertwining identity verified exactly.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{
    entry_supnorm_bound, OperatorField, SpectralCell, SupNormBound,
};
use crate::matrix::ExactMatrix;
use crate::scalar::{ratio, GaussianRational, Rational};
use crate::si::field_si_check;

/// The replacement threshold 1/(2kn) for block size n at stage k.
pub fn perturbation_threshold(k: u64, block_size: usize) -> Rational {
    ratio(1, 2 * k as i64 * block_size as i64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationCertificate {
    pub k: u64,
    pub original: OperatorField,
    pub perturbed: OperatorField,
    /// Certified upper bound on the norm of the difference, with its
    /// per-cell and per-entry audit trail.
    pub bound: SupNormBound,
}

impl PerturbationCertificate {
    /// Replay the certificate: the bound is below 1/k, every perturbed
    /// superdiagonal clears the threshold, and nothing else changed.
    pub fn verify(&self) -> Result<()> {
        let k = self.k;
        if k == 0 {
            return Err(Error::InvalidK);
        }
        self.original.same_skeleton(&self.perturbed)?;
        if self.bound.bound >= ratio(1, k as i64) {
            return Err(Error::CertificateInvalid {
                detail: format!(
                    "certified bound {} is not below 1/{k}",
                    self.bound.bound
                ),
            });
        }
        for cell in &self.perturbed.cells {
            let original = self.original.cell(&cell.id).expect("skeleton checked");
            let threshold = perturbation_threshold(k, cell.block_size);
            let threshold_sq = &threshold * &threshold;
            for i in 1..cell.block_size {
                let new = cell.superdiagonal(i);
                let old = original.superdiagonal(i);
                if new.modulus_squared() < threshold_sq {
                    return Err(Error::CertificateInvalid {
                        detail: format!(
                            "cell '{}' superdiagonal ({i}, {}) below threshold after perturbation",
                            cell.id,
                            i + 1
                        ),
                    });
                }
                if old.modulus_squared() >= threshold_sq && new != old {
                    return Err(Error::CertificateInvalid {
                        detail: format!(
                            "cell '{}' superdiagonal ({i}, {}) was above threshold but changed",
                            cell.id,
                            i + 1
                        ),
                    });
                }
            }
            // Off-superdiagonal entries must be untouched.
            for (&(i, j), value) in &cell.upper_entries {
                if j != i + 1 {
                    let old = original
                        .upper_entries
                        .get(&(i, j))
                        .cloned()
                        .unwrap_or_else(GaussianRational::zero);
                    if *value != old {
                        return Err(Error::CertificateInvalid {
                            detail: format!(
                                "cell '{}' entry ({i}, {j}) changed off the superdiagonal",
                                cell.id
                            ),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// True when the perturbation actually changed some entry.
    pub fn changed_anything(&self) -> bool {
        !self.bound.bound.is_zero()
    }
}

/// Replace each superdiagonal entry of modulus below 1/(2kn) -- zero
/// included -- by the real constant 1/(2kn); entries already at or above the
/// threshold are kept. Diagonal and non-superdiagonal entries never change,
/// so spectral data and the multiplicity profile are preserved exactly.
///
/// Per cell of block size n the n-1 entry deviations are each below 1/(kn),
/// so the per-cell sums -- and with them the certified bound, cells being
/// direct summands -- stay strictly below 1/k.
pub fn perturb_superdiagonals(
    field: &OperatorField,
    k: u64,
) -> Result<PerturbationCertificate> {
    if k == 0 {
        return Err(Error::InvalidK);
    }
    field.validate()?;
    let mut cells = Vec::with_capacity(field.cells.len());
    for cell in &field.cells {
        let threshold = perturbation_threshold(k, cell.block_size);
        let threshold_sq = &threshold * &threshold;
        let mut entries = cell.upper_entries.clone();
        for i in 1..cell.block_size {
            let entry = cell.superdiagonal(i);
            if entry.modulus_squared() < threshold_sq {
                entries.insert(
                    (i, i + 1),
                    GaussianRational::from_rational(threshold.clone()),
                );
            }
        }
        cells.push(SpectralCell {
            upper_entries: entries,
            ..cell.clone()
        });
    }
    let perturbed = OperatorField::new(field.name.clone(), cells);
    let bound = entry_supnorm_bound(field, &perturbed)?;
    let certificate = PerturbationCertificate {
        k,
        original: field.clone(),
        perturbed,
        bound,
    };
    certificate.verify()?;
    Ok(certificate)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSimilarity {
    pub cell_id: String,
    pub transform: ExactMatrix,
    pub transform_inv: ExactMatrix,
}

/// Per-cell invertible conjugators X with X * X^-1 = I and
/// X * fiber(source) = fiber(target) * X, both exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityCertificate {
    pub source: OperatorField,
    pub target: OperatorField,
    pub cells: Vec<CellSimilarity>,
}

impl SimilarityCertificate {
    pub fn verify(&self) -> Result<()> {
        let mismatch = |detail: String| Err(Error::CertificateInvalid { detail });
        if self.cells.len() != self.source.cells.len() {
            return mismatch("certificate does not cover every cell".into());
        }
        for cs in &self.cells {
            let a = self.source.fiber_matrix(&cs.cell_id)?;
            let j = self.target.fiber_matrix(&cs.cell_id)?;
            if !cs.transform.mul(&cs.transform_inv).is_identity()
                || !cs.transform_inv.mul(&cs.transform).is_identity()
            {
                return mismatch(format!(
                    "cell '{}': transform and claimed inverse do not multiply to I",
                    cs.cell_id
                ));
            }
            if cs.transform.mul(&a) != j.mul(&cs.transform) {
                return mismatch(format!(
                    "cell '{}': intertwining identity fails",
                    cs.cell_id
                ));
            }
        }
        Ok(())
    }
}

/// The canonical target of a field: identical cells except that every fiber
/// becomes the single Jordan-type block with unit superdiagonal.
pub fn canonical_form_of(field: &OperatorField) -> OperatorField {
    let cells = field
        .cells
        .iter()
        .map(|cell| {
            let entries = (1..cell.block_size)
                .map(|i| ((i, i + 1), GaussianRational::one()))
                .collect();
            SpectralCell {
                upper_entries: entries,
                ..cell.clone()
            }
        })
        .collect();
    OperatorField::new(field.name.clone(), cells)
}

/// For one fiber A = alpha*I + N with nonzero superdiagonals a_1..a_{n-1},
/// solve X*A = J*X for upper-triangular invertible X with J the canonical
/// block. Row 1 seeds the recursion: row_{i+1} = row_i * N. The seed is
/// (1/(a_1...a_{n-1}), 0, ..., 0), which normalizes the last diagonal entry
/// of X to 1 and sets every free entry to zero.
fn cell_similarity(cell: &SpectralCell) -> Result<ExactMatrix> {
    let n = cell.block_size;
    let fiber = cell.fiber();
    let mut product = GaussianRational::one();
    for i in 1..n {
        let a = cell.superdiagonal(i);
        if a.is_zero() {
            return Err(Error::ZeroSuperdiagonal {
                cell: cell.id.clone(),
                index: i,
            });
        }
        product = &product * &a;
    }
    let nilpotent = fiber.sub(&ExactMatrix::scalar(n, &cell.spectral_value));
    let mut x = ExactMatrix::zeros(n, n);
    x.set(0, 0, GaussianRational::one().checked_div(&product)?);
    for i in 1..n {
        // row_i = row_{i-1} * N
        for j in 0..n {
            let mut s = GaussianRational::zero();
            for t in 0..j {
                let lhs = x.get(i - 1, t);
                let rhs = nilpotent.get(t, j);
                if !lhs.is_zero() && !rhs.is_zero() {
                    s = &s + &(lhs * rhs);
                }
            }
            x.set(i, j, s);
        }
    }
    Ok(x)
}

/// Conjugate every fiber onto the canonical form. Precondition: every
/// superdiagonal entry is nonzero on every cell; the error names the first
/// cell and position violating it.
pub fn build_similarity(field: &OperatorField) -> Result<SimilarityCertificate> {
    field.validate()?;
    let target = canonical_form_of(field);
    let mut sorted: Vec<&SpectralCell> = field.cells.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let mut cells = Vec::with_capacity(sorted.len());
    for cell in sorted {
        let transform = cell_similarity(cell)?;
        let transform_inv = transform.inverse().map_err(|_| Error::CertificateInvalid {
            detail: format!("constructed transform for cell '{}' is singular", cell.id),
        })?;
        cells.push(CellSimilarity {
            cell_id: cell.id.clone(),
            transform,
            transform_inv,
        });
    }
    let certificate = SimilarityCertificate {
        source: field.clone(),
        target,
        cells,
    };
    // The recursion is not trusted: the certificate is replayed before it
    // is handed out.
    certificate.verify()?;
    Ok(certificate)
}

/// Similarity certificate plus the canonical field it lands on. The
/// canonical field has the same cells, weights and spectral values, hence
/// the same multiplicity profile; on canonical input the certificate is the
/// identity.
pub fn reduce_to_canonical(
    field: &OperatorField,
) -> Result<(SimilarityCertificate, OperatorField)> {
    let certificate = build_similarity(field)?;
    let canonical = certificate.target.clone();
    Ok((certificate, canonical))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisReport {
    /// Simple multiplicity per block size; structurally true for
    /// finite-cell fields.
    pub simple_multiplicity: bool,
    pub invertible_superdiagonals: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceStep {
    pub k: u64,
    pub certificate: PerturbationCertificate,
    pub hypotheses: HypothesisReport,
}

/// The approximating sequence A_1, A_2, ...: A_k is the k-th superdiagonal
/// perturbation of the field, each within 1/k in norm and each satisfying
/// the invertible-superdiagonal hypothesis. Requires every multiplicity in
/// the profile to be finite.
pub fn approximation_sequence(
    field: &OperatorField,
    k_max: u64,
) -> Result<Vec<SequenceStep>> {
    if k_max == 0 {
        return Err(Error::InvalidK);
    }
    field.validate()?;
    let profile = field.multiplicity_profile();
    if let Some(entry) = profile.infinite_entries().first() {
        let cell = field
            .cells
            .iter()
            .find(|c| {
                c.block_size == entry.block_size && c.spectral_value == entry.spectral_value
            })
            .map(|c| c.id.clone())
            .unwrap_or_default();
        return Err(Error::InfiniteMultiplicity {
            context: "approximating sequence requires bounded multiplicity".into(),
            cell,
        });
    }
    (1..=k_max)
        .map(|k| {
            let certificate = perturb_superdiagonals(field, k)?;
            let si = field_si_check(&certificate.perturbed);
            let hypotheses = HypothesisReport {
                simple_multiplicity: true,
                invertible_superdiagonals: si.invertible_superdiagonals,
            };
            Ok(SequenceStep {
                k,
                certificate,
                hypotheses,
            })
        })
        .collect()
}
