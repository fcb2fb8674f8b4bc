//! Human-readable rendering of reports. Sections appear in a fixed order;
//! timing is shown here and only here, so the structured output stays
//! byte-stable.

use std::fmt::Write;

use sidec_core::field::Multiplicity;
use sidec_core::scalar::format_rational;

use crate::report::{AnalysisReport, MasaMatchReport, Section};

fn section_status<T>(s: &Section<T>) -> String {
    match s {
        Section::Ok(_) => "ok".to_string(),
        Section::Skipped { reason } => format!("skipped ({reason})"),
        Section::Failed { error } => format!("failed ({error})"),
    }
}

pub fn render_analysis(report: &AnalysisReport, elapsed_ms: u128) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "field '{}'", report.field_name);
    let _ = writeln!(
        w,
        "flags: perturb_k={:?} sequence_k_max={:?} max_dim={}",
        report.flags.perturb_k, report.flags.sequence_k_max, report.flags.max_dim
    );

    let _ = writeln!(w, "\n[validate] {}", section_status(&report.validation));
    if let Section::Ok(v) = &report.validation {
        let _ = writeln!(w, "  cells: {}", v.cell_count);
        for b in &v.per_block_size {
            let _ = writeln!(
                w,
                "  block size {}: multiplicity function simple: {}",
                b.block_size, b.multiplicity_simple
            );
        }
    }

    let _ = writeln!(w, "\n[si] {}", section_status(&report.si));
    if let Section::Ok(si) = &report.si {
        for cell in &si.cells {
            match &cell.verdict.failure {
                None => {
                    let _ = writeln!(w, "  cell '{}': strongly irreducible", cell.cell_id);
                }
                Some(reason) => {
                    let _ = writeln!(w, "  cell '{}': not strongly irreducible ({reason})", cell.cell_id);
                }
            }
        }
        let _ = writeln!(
            w,
            "  superdiagonals invertible on every cell: {}",
            si.invertible_superdiagonals
        );
    }

    let _ = writeln!(w, "\n[hypotheses] {}", section_status(&report.hypotheses));
    if let Section::Ok(h) = &report.hypotheses {
        let _ = writeln!(w, "  simple multiplicity: {}", h.simple_multiplicity);
        let _ = writeln!(
            w,
            "  invertible superdiagonals: {}",
            h.invertible_superdiagonals
        );
    }

    let _ = writeln!(w, "\n[perturbation] {}", section_status(&report.perturbation));
    if let Section::Ok(p) = &report.perturbation {
        let _ = writeln!(
            w,
            "  k = {}, certified bound {} < 1/{}",
            p.k,
            format_rational(&p.bound.bound),
            p.k
        );
        for cell in &p.bound.per_cell {
            if !cell.entries.is_empty() {
                let _ = writeln!(
                    w,
                    "  cell '{}' (n={}): {} entries, total {}",
                    cell.cell_id,
                    cell.block_size,
                    cell.entries.len(),
                    format_rational(&cell.total)
                );
            }
        }
    }

    let _ = writeln!(w, "\n[sequence] {}", section_status(&report.sequence));
    if let Section::Ok(seq) = &report.sequence {
        for step in &seq.steps {
            let _ = writeln!(
                w,
                "  k = {:3}: bound {} (superdiagonals invertible: {})",
                step.k,
                format_rational(&step.bound.bound),
                step.hypotheses.invertible_superdiagonals
            );
        }
    }

    let _ = writeln!(w, "\n[reduction] {}", section_status(&report.reduction));
    if let Section::Ok(r) = &report.reduction {
        let _ = writeln!(
            w,
            "  {} cells conjugated onto the canonical form; certificates verified exactly",
            r.cells.len()
        );
    }

    let _ = writeln!(w, "\n[commutant] {}", section_status(&report.commutant));
    if let Section::Ok(doc) = &report.commutant {
        let _ = writeln!(w, "  dimension: {}", doc.dimension);
        let _ = writeln!(
            w,
            "  minimal idempotents in the canonical family: {}",
            doc.minimal_idempotents.len()
        );
    }

    let _ = writeln!(w, "\n[k0] {}", section_status(&report.k0));
    if let Section::Ok(k0) = &report.k0 {
        for g in &k0.per_value {
            let class: Vec<String> = g.identity_class.iter().map(Multiplicity::to_string).collect();
            let _ = writeln!(
                w,
                "  at {}: rank {}, V = {}, K0 = {}, [I] = ({})",
                g.spectral_value,
                g.rank,
                g.semigroup,
                g.group,
                class.join(", ")
            );
            if !g.vanishing.is_empty() {
                let _ = writeln!(w, "    vanishing coordinates: {:?}", g.vanishing);
            }
        }
    }

    let _ = writeln!(w, "\n[verdict] {}", section_status(&report.verdict));
    if let Section::Ok(v) = &report.verdict {
        if v.unique {
            let _ = writeln!(
                w,
                "  the strongly irreducible decomposition is unique up to similarity"
            );
        } else {
            let _ = writeln!(
                w,
                "  the strongly irreducible decomposition is NOT unique up to similarity"
            );
            for witness in &v.witnesses {
                let _ = writeln!(
                    w,
                    "  witness: infinite multiplicity at {} (block size {})",
                    witness.spectral_value, witness.block_size
                );
            }
            if let Some(narrative) = &v.narrative {
                let _ = writeln!(w, "  {narrative}");
            }
        }
    }

    let _ = writeln!(w, "\nelapsed: {elapsed_ms} ms");
    out
}

pub fn render_masa_match(report: &MasaMatchReport, elapsed_ms: u128) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "masa match over {} summands", report.model.summands().len());
    let _ = writeln!(
        w,
        "  {} minimal idempotents matched; conjugator verified in the commutant",
        report.pairs.len()
    );
    for (t, s) in &report.pairs {
        let _ = writeln!(w, "  source atom {s} -> target atom {t}");
    }
    let _ = writeln!(w, "elapsed: {elapsed_ms} ms");
    out
}
