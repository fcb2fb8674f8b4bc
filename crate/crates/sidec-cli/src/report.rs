//! The analysis pipeline and its structured report.
//!
//! A report is a pure function of the input field and the flags: sections
//! appear in a fixed order, every collection inside is sorted, and all
//! numbers are exact strings. Reports carry enough data -- fields,
//! transforms, audits, idempotents -- for the `verify` subcommand to replay
//! every certificate with nothing but matrix products and comparisons.

use serde::{Deserialize, Serialize};

use sidec_core::commutant::{commutant_basis, IdempotentFamily, JordanSumModel};
use sidec_core::field::{OperatorField, SupNormBound, ValidationReport};
use sidec_core::k0::{class_group_descriptor, class_vector, decide_uniqueness, K0Descriptor, RankVector, UniquenessVerdict};
use sidec_core::matrix::ExactMatrix;
use sidec_core::reduce::{
    approximation_sequence, perturb_superdiagonals, reduce_to_canonical, CellSimilarity,
    HypothesisReport,
};
use sidec_core::si::{field_si_check, FieldSiReport};
use sidec_core::{commutant, Error};

pub const REPORT_SCHEMA: &str = "sidec/analysis-report/v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "lowercase")]
pub enum Section<T> {
    Ok(T),
    Skipped { reason: String },
    Failed { error: String },
}

impl<T> Section<T> {
    pub fn ok(&self) -> Option<&T> {
        match self {
            Section::Ok(t) => Some(t),
            _ => None,
        }
    }

    pub fn from_result(result: Result<T, Error>) -> Self {
        match result {
            Ok(t) => Section::Ok(t),
            Err(e) => Section::Failed {
                error: e.to_string(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagsDoc {
    pub perturb_k: Option<u64>,
    pub sequence_k_max: Option<u64>,
    pub max_dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationDoc {
    pub k: u64,
    pub bound: SupNormBound,
    /// The perturbed field; the original is the report's `field`.
    pub perturbed_field: OperatorField,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceStepDoc {
    pub k: u64,
    pub bound: SupNormBound,
    pub perturbed_field: OperatorField,
    pub hypotheses: HypothesisReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceDoc {
    pub k_max: u64,
    pub steps: Vec<SequenceStepDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionDoc {
    /// Per-cell conjugators onto the canonical form. The source field is
    /// the perturbed field when a perturbation ran, otherwise the input.
    pub cells: Vec<CellSimilarity>,
    pub canonical_field: OperatorField,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimalIdempotentDoc {
    pub matrix: ExactMatrix,
    /// Weighted block-trace rank; 1 for minimal idempotents.
    pub rank: u64,
    pub class_vector: Vec<RankVector>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutantDoc {
    pub model: JordanSumModel,
    pub dimension: usize,
    pub minimal_idempotents: Vec<MinimalIdempotentDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema: String,
    pub field_name: String,
    pub flags: FlagsDoc,
    pub field: OperatorField,
    pub validation: Section<ValidationReport>,
    pub si: Section<FieldSiReport>,
    pub hypotheses: Section<HypothesisReport>,
    pub perturbation: Section<PerturbationDoc>,
    pub sequence: Section<SequenceDoc>,
    pub reduction: Section<ReductionDoc>,
    pub commutant: Section<CommutantDoc>,
    pub k0: Section<K0Descriptor>,
    pub verdict: Section<UniquenessVerdict>,
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serialization");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Exit code contract: 0 unique, 2 not unique, 1 anything unresolved.
    pub fn exit_code(&self) -> i32 {
        match &self.verdict {
            Section::Ok(v) if v.unique => 0,
            Section::Ok(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AnalysisOptions {
    pub perturb_k: Option<u64>,
    pub sequence_k_max: Option<u64>,
    pub max_dim: usize,
}

fn skipped<T>(reason: impl Into<String>) -> Section<T> {
    Section::Skipped {
        reason: reason.into(),
    }
}

/// Run the pipeline: validate, SI check, optional perturbation, optional
/// approximating sequence, reduction to canonical form, commutant
/// structure, class-group descriptor, uniqueness verdict. Stages whose
/// preconditions fail are skipped with the reason recorded; later stages
/// that depend on them are skipped too.
pub fn run_analysis(field: &OperatorField, opts: &AnalysisOptions) -> AnalysisReport {
    let flags = FlagsDoc {
        perturb_k: opts.perturb_k,
        sequence_k_max: opts.sequence_k_max,
        max_dim: opts.max_dim,
    };
    let mut report = AnalysisReport {
        schema: REPORT_SCHEMA.to_string(),
        field_name: field.name.clone(),
        flags,
        field: field.clone(),
        validation: skipped("not reached"),
        si: skipped("not reached"),
        hypotheses: skipped("not reached"),
        perturbation: skipped("not requested; pass --perturb <k>"),
        sequence: skipped("not requested; pass --sequence <k-max>"),
        reduction: skipped("not reached"),
        commutant: skipped("not reached"),
        k0: skipped("not reached"),
        verdict: skipped("not reached"),
    };

    match field.validate_with_cap(opts.max_dim) {
        Ok(v) => report.validation = Section::Ok(v),
        Err(e) => {
            report.validation = Section::Failed {
                error: e.to_string(),
            };
            let blocked = "field failed validation";
            report.si = skipped(blocked);
            report.hypotheses = skipped(blocked);
            if opts.perturb_k.is_some() {
                report.perturbation = skipped(blocked);
            }
            if opts.sequence_k_max.is_some() {
                report.sequence = skipped(blocked);
            }
            report.reduction = skipped(blocked);
            report.commutant = skipped(blocked);
            report.k0 = skipped(blocked);
            report.verdict = skipped(blocked);
            return report;
        }
    }

    report.si = Section::Ok(field_si_check(field));

    // Optional perturbation; downstream stages run on its output.
    let mut working = field.clone();
    if let Some(k) = opts.perturb_k {
        match perturb_superdiagonals(field, k) {
            Ok(cert) => {
                working = cert.perturbed.clone();
                report.perturbation = Section::Ok(PerturbationDoc {
                    k,
                    bound: cert.bound,
                    perturbed_field: cert.perturbed,
                });
            }
            Err(e) => {
                report.perturbation = Section::Failed {
                    error: e.to_string(),
                };
            }
        }
    }

    let working_si = field_si_check(&working);
    report.hypotheses = Section::Ok(HypothesisReport {
        simple_multiplicity: true,
        invertible_superdiagonals: working_si.invertible_superdiagonals,
    });

    if let Some(k_max) = opts.sequence_k_max {
        report.sequence = Section::from_result(approximation_sequence(field, k_max).map(
            |steps| SequenceDoc {
                k_max,
                steps: steps
                    .into_iter()
                    .map(|s| SequenceStepDoc {
                        k: s.k,
                        bound: s.certificate.bound,
                        perturbed_field: s.certificate.perturbed,
                        hypotheses: s.hypotheses,
                    })
                    .collect(),
            },
        ));
    }

    let canonical = if working_si.invertible_superdiagonals {
        match reduce_to_canonical(&working) {
            Ok((cert, canonical)) => {
                report.reduction = Section::Ok(ReductionDoc {
                    cells: cert.cells,
                    canonical_field: canonical.clone(),
                });
                Some(canonical)
            }
            Err(e) => {
                report.reduction = Section::Failed {
                    error: e.to_string(),
                };
                None
            }
        }
    } else {
        report.reduction = skipped(format!(
            "superdiagonal entries vanish on cells {:?}; rerun with --perturb <k> to \
             restore invertibility first",
            working_si.failing_cells
        ));
        None
    };

    match &canonical {
        None => {
            let blocked = "requires the canonical form";
            report.commutant = skipped(blocked);
            report.k0 = skipped(blocked);
        }
        Some(canonical) => {
            report.k0 = Section::from_result(class_group_descriptor(canonical));
            if canonical.multiplicity_profile().all_finite() {
                report.commutant = Section::from_result(build_commutant_doc(canonical, opts.max_dim));
            } else {
                report.commutant = skipped(
                    "infinite multiplicity present; the commutant is not a finite matrix algebra",
                );
            }
        }
    }

    report.verdict = match decide_uniqueness(&working) {
        Ok(v) => Section::Ok(v),
        Err(Error::SuperdiagonalsNotInvertible { detail }) => skipped(format!(
            "undecided: superdiagonals are not invertible ({detail}); rerun with --perturb <k>"
        )),
        Err(e) => Section::Failed {
            error: e.to_string(),
        },
    };

    report
}

fn build_commutant_doc(canonical: &OperatorField, max_dim: usize) -> Result<CommutantDoc, Error> {
    let model = JordanSumModel::from_canonical_field(canonical)?;
    // Enforce the configured cap before any materialization.
    model.matrix_with_cap(max_dim)?;
    let basis = commutant_basis(&model)?;
    let family = IdempotentFamily::canonical(&model);
    let atoms = commutant::minimal_idempotents(&model, &family)?;
    let mut minimal = Vec::with_capacity(atoms.len());
    for atom in atoms {
        let rank = commutant::idempotent_rank(&model, &atom)?;
        let vector = class_vector(&model, &atom)?;
        let rank_u64 = u64::try_from(rank.numer().clone()).unwrap_or(u64::MAX);
        minimal.push(MinimalIdempotentDoc {
            matrix: atom,
            rank: rank_u64,
            class_vector: vector,
        });
    }
    Ok(CommutantDoc {
        model,
        dimension: basis.dimension(),
        minimal_idempotents: minimal,
    })
}

/// Family file format for `masa-match`: the ambient model and the family
/// members as matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyFile {
    pub model: JordanSumModel,
    pub members: Vec<ExactMatrix>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MasaMatchReport {
    pub schema: String,
    pub model: JordanSumModel,
    pub transform: ExactMatrix,
    pub transform_inv: ExactMatrix,
    /// (target atom index, source atom index) pairs.
    pub pairs: Vec<(usize, usize)>,
    pub target_atoms: Vec<ExactMatrix>,
    pub source_atoms: Vec<ExactMatrix>,
}

pub const MASA_SCHEMA: &str = "sidec/masa-match/v1";

pub fn run_masa_match(target: &FamilyFile, source: &FamilyFile) -> Result<MasaMatchReport, Error> {
    if target.model != source.model {
        return Err(Error::AtomMatchImpossible {
            detail: "the two family files carry different models".into(),
        });
    }
    let model = target.model.clone();
    let target_family = IdempotentFamily::new(&model, target.members.clone())?;
    let source_family = IdempotentFamily::new(&model, source.members.clone())?;
    let matched = commutant::conjugate_families(&model, &target_family, &source_family)?;
    Ok(MasaMatchReport {
        schema: MASA_SCHEMA.to_string(),
        model,
        transform: matched.transform,
        transform_inv: matched.transform_inv,
        pairs: matched.pairs,
        target_atoms: matched.target_atoms,
        source_atoms: matched.source_atoms,
    })
}
