//! Independent re-validation of analysis reports.
//!
//! The checker shares no code with the stages that construct certificates:
//! it rebuilds fibers and model matrices from the embedded data and then
//! only multiplies, adds and compares exact values. Each check prints one
//! line; any failure fails the run.

use num_traits::{Signed, Zero};

use sidec_core::field::{MassType, OperatorField, SpectralCell, SupNormBound};
use sidec_core::matrix::ExactMatrix;
use sidec_core::scalar::{ratio, GaussianRational, Rational};

use crate::report::{AnalysisReport, Section, REPORT_SCHEMA};

pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

pub struct VerifyOutcome {
    pub checks: Vec<Check>,
}

impl VerifyOutcome {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Checker {
    checks: Vec<Check>,
}

impl Checker {
    fn record(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    fn pass(&mut self, name: &str) {
        self.record(name, true, "");
    }

    fn check(&mut self, name: &str, passed: bool, detail: &str) {
        if passed {
            self.pass(name);
        } else {
            self.record(name, false, detail);
        }
    }
}

fn fiber_of(cell: &SpectralCell) -> ExactMatrix {
    // Local fiber assembly: constant diagonal, stored upper entries.
    let n = cell.block_size;
    let mut m = ExactMatrix::zeros(n, n);
    for i in 0..n {
        m.set(i, i, cell.spectral_value.clone());
    }
    for (&(i, j), v) in &cell.upper_entries {
        m.set(i - 1, j - 1, v.clone());
    }
    m
}

fn skeletons_match(a: &OperatorField, b: &OperatorField) -> bool {
    a.cells.len() == b.cells.len()
        && a.cells.iter().all(|cell| {
            b.cell(&cell.id).is_some_and(|peer| {
                peer.block_size == cell.block_size
                    && peer.weight == cell.weight
                    && peer.mass == cell.mass
                    && peer.spectral_value == cell.spectral_value
            })
        })
}

/// Replay a perturbation certificate: audit arithmetic, threshold rules,
/// untouched data, and the bound comparison against 1/k.
fn check_perturbation(
    checker: &mut Checker,
    prefix: &str,
    original: &OperatorField,
    perturbed: &OperatorField,
    bound: &SupNormBound,
    k: u64,
) {
    if !skeletons_match(original, perturbed) {
        checker.check(prefix, false, "perturbed field changes the skeleton");
        return;
    }
    let zero = GaussianRational::zero();
    let mut max_total = Rational::zero();
    let mut audit_ok = true;
    let mut rules_ok = true;
    let mut detail = String::new();
    for cell in &original.cells {
        let peer = perturbed.cell(&cell.id).expect("skeletons match");
        let n = cell.block_size;
        let threshold = ratio(1, 2 * k as i64 * n as i64);
        let threshold_sq = &threshold * &threshold;
        // Rule check on each strict-upper position.
        for i in 1..=n {
            for j in i + 1..=n {
                let old = cell.upper_entries.get(&(i, j)).unwrap_or(&zero);
                let new = peer.upper_entries.get(&(i, j)).unwrap_or(&zero);
                if j == i + 1 {
                    let old_sq = old.modulus_squared();
                    if old_sq >= threshold_sq {
                        if new != old {
                            rules_ok = false;
                            detail = format!("cell '{}' ({i},{j}): above-threshold entry changed", cell.id);
                        }
                    } else if *new != GaussianRational::from_rational(threshold.clone()) {
                        rules_ok = false;
                        detail = format!(
                            "cell '{}' ({i},{j}): below-threshold entry not replaced by 1/(2kn)",
                            cell.id
                        );
                    }
                } else if new != old {
                    rules_ok = false;
                    detail = format!("cell '{}' ({i},{j}): off-superdiagonal entry changed", cell.id);
                }
            }
        }
        // Audit check: claimed per-entry bounds dominate the true moduli
        // and totals add up.
        let Some(cell_bound) = bound.per_cell.iter().find(|c| c.cell_id == cell.id) else {
            audit_ok = false;
            detail = format!("cell '{}' missing from the bound audit", cell.id);
            continue;
        };
        let mut total = Rational::zero();
        for e in &cell_bound.entries {
            let old = cell.upper_entries.get(&(e.row, e.col)).unwrap_or(&zero);
            let new = peer.upper_entries.get(&(e.row, e.col)).unwrap_or(&zero);
            let diff_sq = (old - new).modulus_squared();
            if diff_sq != e.difference_modulus_squared
                || e.upper.is_negative()
                || &e.upper * &e.upper < diff_sq
            {
                audit_ok = false;
                detail = format!(
                    "cell '{}' ({},{}): audit entry does not dominate the difference",
                    cell.id, e.row, e.col
                );
            }
            total += &e.upper;
        }
        if total != cell_bound.total {
            audit_ok = false;
            detail = format!("cell '{}': audit total does not add up", cell.id);
        }
        // Every actual difference must be audited.
        let mut positions: Vec<(usize, usize)> = cell.upper_entries.keys().copied().collect();
        positions.extend(peer.upper_entries.keys().copied());
        for (i, j) in positions {
            let old = cell.upper_entries.get(&(i, j)).unwrap_or(&zero);
            let new = peer.upper_entries.get(&(i, j)).unwrap_or(&zero);
            if old != new && !cell_bound.entries.iter().any(|e| (e.row, e.col) == (i, j)) {
                audit_ok = false;
                detail = format!("cell '{}' ({i},{j}): changed entry missing from audit", cell.id);
            }
        }
        if total > max_total {
            max_total = total;
        }
    }
    checker.check(&format!("{prefix}: replacement rules"), rules_ok, &detail);
    checker.check(&format!("{prefix}: bound audit"), audit_ok, &detail);
    checker.check(
        &format!("{prefix}: bound value"),
        bound.bound == max_total && bound.bound < ratio(1, k as i64),
        "claimed bound is not the max of cell totals strictly below 1/k",
    );
}

/// Rebuild the model matrix from the embedded summand data.
fn model_matrix(model: &sidec_core::commutant::JordanSumModel) -> ExactMatrix {
    let dim = model.total_dimension();
    let mut a = ExactMatrix::zeros(dim, dim);
    let mut offset = 0;
    for s in model.summands() {
        for _ in 0..s.multiplicity {
            for t in 0..s.block_size {
                a.set(offset + t, offset + t, s.spectral_value.clone());
                if t + 1 < s.block_size {
                    a.set(offset + t, offset + t + 1, GaussianRational::one());
                }
            }
            offset += s.block_size;
        }
    }
    a
}

pub fn verify_report(report: &AnalysisReport) -> VerifyOutcome {
    let mut checker = Checker { checks: Vec::new() };
    let c = &mut checker;

    c.check(
        "schema",
        report.schema == REPORT_SCHEMA,
        &format!("unknown schema '{}'", report.schema),
    );

    // Field sanity: positive weights, well-placed entries, unique ids.
    let field_ok = report.field.validate_with_cap(report.flags.max_dim).is_ok();
    c.check("field: validates", field_ok, "embedded field fails validation");

    // SI section: recompute verdicts entrywise.
    if let Section::Ok(si) = &report.si {
        let mut ok = true;
        let mut invertible = true;
        for cell in &report.field.cells {
            let fiber = fiber_of(cell);
            let n = cell.block_size;
            let mut si_here = true;
            for t in 1..n {
                if fiber.get(t, t) != fiber.get(0, 0) {
                    si_here = false;
                }
            }
            for t in 0..n.saturating_sub(1) {
                if fiber.get(t, t + 1).is_zero() {
                    si_here = false;
                    invertible = false;
                }
            }
            match si.cells.iter().find(|r| r.cell_id == cell.id) {
                Some(claimed) if claimed.verdict.strongly_irreducible == si_here => {}
                _ => ok = false,
            }
        }
        c.check(
            "si: per-cell verdicts",
            ok,
            "claimed verdict disagrees with the entries",
        );
        c.check(
            "si: superdiagonal invertibility flag",
            si.invertible_superdiagonals == invertible,
            "flag disagrees with the entries",
        );
    }

    if let Section::Ok(p) = &report.perturbation {
        check_perturbation(c, "perturbation", &report.field, &p.perturbed_field, &p.bound, p.k);
    }

    if let Section::Ok(seq) = &report.sequence {
        let mut prev_bound: Option<Rational> = None;
        let mut monotone = true;
        for step in &seq.steps {
            check_perturbation(
                c,
                &format!("sequence k={}", step.k),
                &report.field,
                &step.perturbed_field,
                &step.bound,
                step.k,
            );
            if let Some(prev) = prev_bound {
                if !(prev.is_zero() || step.bound.bound < prev) {
                    monotone = false;
                }
            }
            prev_bound = Some(step.bound.bound.clone());
        }
        c.check(
            "sequence: bounds strictly decrease while nonzero",
            monotone,
            "bound failed to decrease",
        );
        c.check(
            "sequence: covers 1..k_max",
            seq.steps.len() as u64 == seq.k_max
                && seq.steps.iter().enumerate().all(|(i, s)| s.k == i as u64 + 1),
            "steps are not 1..k_max",
        );
    }

    // The field the reduction acted on.
    let working: &OperatorField = report
        .perturbation
        .ok()
        .map(|p| &p.perturbed_field)
        .unwrap_or(&report.field);

    if let Section::Ok(reduction) = &report.reduction {
        let mut ok = true;
        let mut detail = String::new();
        if !skeletons_match(working, &reduction.canonical_field) {
            ok = false;
            detail = "canonical field changes the skeleton".into();
        }
        for cell in &working.cells {
            let Some(cs) = reduction.cells.iter().find(|cs| cs.cell_id == cell.id) else {
                ok = false;
                detail = format!("cell '{}' has no similarity certificate", cell.id);
                continue;
            };
            let canonical_cell = reduction
                .canonical_field
                .cell(&cell.id)
                .expect("skeletons match");
            let j = fiber_of(canonical_cell);
            // Canonical shape: unit superdiagonal, zero elsewhere above.
            let n = cell.block_size;
            for t in 0..n {
                for u in t + 1..n {
                    let expected_one = u == t + 1;
                    let e = j.get(t, u);
                    if (expected_one && !e.is_one()) || (!expected_one && !e.is_zero()) {
                        ok = false;
                        detail = format!("cell '{}': target fiber is not canonical", cell.id);
                    }
                }
            }
            let a = fiber_of(cell);
            if !cs.transform.mul(&cs.transform_inv).is_identity()
                || !cs.transform_inv.mul(&cs.transform).is_identity()
            {
                ok = false;
                detail = format!("cell '{}': transform inverse fails", cell.id);
            }
            if cs.transform.mul(&a) != j.mul(&cs.transform) {
                ok = false;
                detail = format!("cell '{}': intertwining identity fails", cell.id);
            }
        }
        c.check("reduction: certificates replay", ok, &detail);
    }

    if let Section::Ok(doc) = &report.commutant {
        let a = model_matrix(&doc.model);
        let dim = a.rows();
        // Model must match the canonical field's profile.
        if let Section::Ok(reduction) = &report.reduction {
            let mut expected: Vec<(GaussianRational, usize, u64)> = Vec::new();
            for cell in &reduction.canonical_field.cells {
                let count = match cell.mass {
                    MassType::Atomic { count } => count,
                    MassType::Continuous => 0,
                };
                match expected.iter_mut().find(|(v, s, _)| {
                    v == &cell.spectral_value && *s == cell.block_size
                }) {
                    Some((_, _, c0)) => *c0 += count,
                    None => expected.push((cell.spectral_value.clone(), cell.block_size, count)),
                }
            }
            let mut model_counts: Vec<(GaussianRational, usize, u64)> = doc
                .model
                .summands()
                .iter()
                .map(|s| (s.spectral_value.clone(), s.block_size, s.multiplicity))
                .collect();
            model_counts.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.cmp(&y.1)));
            expected.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.cmp(&y.1)));
            c.check(
                "commutant: model matches the canonical field",
                model_counts == expected,
                "summands disagree with the canonical field",
            );
        }
        // Dimension by the pairwise closed form.
        let mut dimension = 0usize;
        for s in doc.model.summands() {
            for t in doc.model.summands() {
                if s.spectral_value == t.spectral_value {
                    dimension += s.multiplicity as usize
                        * t.multiplicity as usize
                        * s.block_size.min(t.block_size);
                }
            }
        }
        c.check(
            "commutant: dimension",
            dimension == doc.dimension,
            &format!("closed form gives {dimension}, report says {}", doc.dimension),
        );
        // Minimal idempotents: exact idempotents in the commutant, rank
        // one, orthogonal, summing to the identity.
        let copies: u64 = doc.model.summands().iter().map(|s| s.multiplicity).sum();
        let mut ok = doc.minimal_idempotents.len() as u64 == copies;
        let mut detail = if ok {
            String::new()
        } else {
            "count differs from the number of copies".to_string()
        };
        let mut sum = ExactMatrix::zeros(dim, dim);
        for (idx, m) in doc.minimal_idempotents.iter().enumerate() {
            let p = &m.matrix;
            if p.mul(p) != *p {
                ok = false;
                detail = format!("idempotent {idx} fails P^2 = P");
            }
            if a.mul(p) != p.mul(&a) {
                ok = false;
                detail = format!("idempotent {idx} does not commute with the model");
            }
            // Weighted block-trace rank directly from the diagonal.
            let mut rank = Rational::zero();
            let mut offset = 0usize;
            for s in doc.model.summands() {
                let len = s.block_size * s.multiplicity as usize;
                let mut trace = GaussianRational::zero();
                for t in offset..offset + len {
                    trace = &trace + p.get(t, t);
                }
                if !trace.is_real() {
                    ok = false;
                    detail = format!("idempotent {idx} has a non-real carrier trace");
                } else {
                    rank += trace.re() / &Rational::from_integer((s.block_size as i64).into());
                }
                offset += len;
            }
            if rank != Rational::from_integer((m.rank as i64).into()) || m.rank != 1 {
                ok = false;
                detail = format!("idempotent {idx} does not have rank 1");
            }
            for other in &doc.minimal_idempotents[idx + 1..] {
                if !p.mul(&other.matrix).is_zero() {
                    ok = false;
                    detail = format!("idempotent {idx} is not orthogonal to a peer");
                }
            }
            sum = sum.add(p);
        }
        if !sum.is_identity() {
            ok = false;
            detail = "minimal idempotents do not sum to the identity".into();
        }
        c.check("commutant: minimal idempotents replay", ok, &detail);
    }

    if let Section::Ok(k0) = &report.k0 {
        if let Section::Ok(reduction) = &report.reduction {
            let canonical = &reduction.canonical_field;
            let mut ok = true;
            let mut detail = String::new();
            // Recount distinct block sizes and multiplicities per value.
            let mut values: Vec<GaussianRational> = Vec::new();
            for cell in &canonical.cells {
                if !values.contains(&cell.spectral_value) {
                    values.push(cell.spectral_value.clone());
                }
            }
            if values.len() != k0.per_value.len() {
                ok = false;
                detail = "descriptor misses a spectral value".into();
            }
            for group in &k0.per_value {
                let mut sizes: Vec<usize> = canonical
                    .cells
                    .iter()
                    .filter(|cell| cell.spectral_value == group.spectral_value)
                    .map(|cell| cell.block_size)
                    .collect();
                sizes.sort_unstable();
                sizes.dedup();
                sizes.reverse();
                if sizes != group.block_sizes || sizes.len() != group.rank {
                    ok = false;
                    detail = format!("rank at {} disagrees", group.spectral_value);
                }
                if group.semigroup != format!("N^{}", group.rank)
                    || group.group != format!("Z^{}", group.rank)
                {
                    ok = false;
                    detail = "presentation strings disagree with the rank".into();
                }
                for (i, &size) in group.block_sizes.iter().enumerate() {
                    let mut finite_total = 0u64;
                    let mut infinite = false;
                    for cell in &canonical.cells {
                        if cell.spectral_value == group.spectral_value && cell.block_size == size {
                            match cell.mass {
                                MassType::Atomic { count } => finite_total += count,
                                MassType::Continuous => infinite = true,
                            }
                        }
                    }
                    let claimed = &group.identity_class[i];
                    let matches = match claimed {
                        sidec_core::field::Multiplicity::Finite(n) => {
                            !infinite && *n == finite_total
                        }
                        sidec_core::field::Multiplicity::Infinite => infinite,
                    };
                    if !matches || group.vanishing.contains(&i) != infinite {
                        ok = false;
                        detail = format!(
                            "identity class coordinate at {} size {size} disagrees",
                            group.spectral_value
                        );
                    }
                }
            }
            c.check("k0: descriptor recount", ok, &detail);
        }
    }

    if let Section::Ok(verdict) = &report.verdict {
        // Uniqueness is equivalent to the absence of continuous cells in
        // the working field.
        let infinite: Vec<(&GaussianRational, usize)> = working
            .cells
            .iter()
            .filter(|cell| matches!(cell.mass, MassType::Continuous))
            .map(|cell| (&cell.spectral_value, cell.block_size))
            .collect();
        let expect_unique = infinite.is_empty();
        let witnesses_ok = verdict.witnesses.iter().all(|w| {
            infinite
                .iter()
                .any(|(v, n)| *v == &w.spectral_value && *n == w.block_size)
        }) && (verdict.unique == verdict.witnesses.is_empty());
        c.check(
            "verdict: uniqueness matches the multiplicity data",
            verdict.unique == expect_unique && witnesses_ok,
            "verdict disagrees with the mass types",
        );
        c.check(
            "verdict: narrative present exactly when non-unique",
            verdict.unique == verdict.narrative.is_none(),
            "narrative flag mismatch",
        );
    }

    VerifyOutcome {
        checks: checker.checks,
    }
}
