//! Command-line frontend for exact analysis of spectral-cell operator
//! fields: validation, strong-irreducibility checks, certified perturbation
//! and reduction, commutant structure, class-group invariants, the
//! uniqueness verdict, and independent re-verification of emitted reports.
//!
//! Exit codes: 0 on success (and a unique decomposition for `decide`),
//! 2 when the decomposition is provably not unique, 1 on errors and
//! undecided pipelines.

use sidec_cli::{render, report, verify};

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use sidec_core::commutant::{commutant_basis, JordanSumModel};
use sidec_core::field::{OperatorField, DEFAULT_DIM_CAP};
use sidec_core::k0::class_group_descriptor;
use sidec_core::reduce::{perturb_superdiagonals, reduce_to_canonical};
use sidec_core::si::{field_si_check, field_si_check_with_threshold};

use report::{run_analysis, run_masa_match, AnalysisOptions, FamilyFile, Section};

const MAX_DIM_ENV: &str = "SIDEC_MAX_DIM";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "sidec",
    about = "Exact canonical forms, commutants and uniqueness verdicts for operators \
             given as finite spectral-cell fields",
    version
)]
struct Cli {
    /// Output format for reports.
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,

    /// Cap on block sizes and materialized matrix dimensions
    /// (overrides the SIDEC_MAX_DIM environment variable; default 64).
    #[arg(long, global = true)]
    max_dim: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the field file's structural invariants.
    Validate { field: PathBuf },
    /// Per-cell strong-irreducibility report and superdiagonal
    /// invertibility.
    SiCheck {
        field: PathBuf,
        /// Also report superdiagonal entries with modulus below this
        /// rational as near-singular (default 0: algebraic notion only).
        #[arg(long, value_name = "P/Q")]
        min_modulus: Option<String>,
    },
    /// Certified superdiagonal perturbation at stage k.
    Perturb {
        field: PathBuf,
        #[arg(short, long)]
        k: u64,
        /// Write the perturbed field to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Conjugate the field onto its canonical form, with certificates.
    Reduce {
        field: PathBuf,
        /// Write the canonical field to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Commutant dimension and structured basis of a canonical field.
    Commutant { field: PathBuf },
    /// Class semigroup and group presentations of a canonical field.
    K0 { field: PathBuf },
    /// Run the full pipeline and decide uniqueness up to similarity.
    Decide {
        field: PathBuf,
        /// Insert the certified perturbation at this stage first.
        #[arg(long, value_name = "K")]
        perturb: Option<u64>,
        /// Also emit the approximating sequence up to this stage.
        #[arg(long, value_name = "K_MAX")]
        sequence: Option<u64>,
    },
    /// Approximating sequence of invertible-superdiagonal fields.
    Sequence {
        field: PathBuf,
        #[arg(long)]
        k_max: u64,
    },
    /// Conjugate one maximal abelian idempotent family onto another.
    MasaMatch {
        /// Target family file (model plus members).
        target: PathBuf,
        /// Source family file; the transform carries source onto target.
        source: PathBuf,
    },
    /// Independently re-verify every certificate in an analysis report.
    Verify { report: PathBuf },
}

fn read_field(path: &Path) -> Result<OperatorField> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    OperatorField::from_json(&text)
        .with_context(|| format!("parsing field file {}", path.display()))
}

fn emit<T: serde::Serialize>(format: Format, value: &T, text: String) {
    match format {
        Format::Json => {
            let mut json = serde_json::to_string_pretty(value).expect("serializable report");
            json.push('\n');
            print!("{json}");
        }
        Format::Text => print!("{text}"),
    }
}

fn max_dim(cli: &Cli) -> Result<usize> {
    if let Some(dim) = cli.max_dim {
        return Ok(dim);
    }
    match std::env::var(MAX_DIM_ENV) {
        Ok(raw) => raw
            .parse()
            .with_context(|| format!("{MAX_DIM_ENV} must be a positive integer, got '{raw}'")),
        Err(_) => Ok(DEFAULT_DIM_CAP),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let started = Instant::now();
    let cap = max_dim(&cli)?;
    match &cli.command {
        Command::Validate { field } => {
            let field = read_field(field)?;
            let report = field.validate_with_cap(cap)?;
            emit(cli.format, &report, format!("{report}\n"));
            Ok(ExitCode::SUCCESS)
        }
        Command::SiCheck { field, min_modulus } => {
            let field = read_field(field)?;
            field.validate_with_cap(cap)?;
            let report = match min_modulus {
                Some(raw) => {
                    let threshold = sidec_core::scalar::parse_rational(raw)?;
                    field_si_check_with_threshold(&field, &(&threshold * &threshold))
                }
                None => field_si_check(&field),
            };
            let mut text = String::new();
            for cell in &report.cells {
                text.push_str(&match &cell.verdict.failure {
                    None => format!("cell '{}': strongly irreducible\n", cell.cell_id),
                    Some(f) => format!("cell '{}': not strongly irreducible ({f})\n", cell.cell_id),
                });
            }
            text.push_str(&format!(
                "superdiagonals invertible on every cell: {}\n",
                report.invertible_superdiagonals
            ));
            if !report.near_singular_cells.is_empty() {
                text.push_str(&format!(
                    "near-singular superdiagonals on cells: {:?}\n",
                    report.near_singular_cells
                ));
            }
            emit(cli.format, &report, text);
            Ok(ExitCode::SUCCESS)
        }
        Command::Perturb { field, k, out } => {
            let field = read_field(field)?;
            field.validate_with_cap(cap)?;
            let cert = perturb_superdiagonals(&field, *k)?;
            if let Some(path) = out {
                fs::write(path, cert.perturbed.to_json())
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            let text = format!(
                "perturbed at k = {}: certified bound {} < 1/{}\n",
                k,
                sidec_core::scalar::format_rational(&cert.bound.bound),
                k
            );
            emit(cli.format, &cert, text);
            Ok(ExitCode::SUCCESS)
        }
        Command::Reduce { field, out } => {
            let field = read_field(field)?;
            field.validate_with_cap(cap)?;
            let (cert, canonical) = reduce_to_canonical(&field)?;
            if let Some(path) = out {
                fs::write(path, canonical.to_json())
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            let text = format!(
                "reduced {} cells onto the canonical form; certificates verified exactly\n",
                cert.cells.len()
            );
            emit(cli.format, &cert, text);
            Ok(ExitCode::SUCCESS)
        }
        Command::Commutant { field } => {
            let field = read_field(field)?;
            field.validate_with_cap(cap)?;
            let model = JordanSumModel::from_canonical_field(&field)?;
            model.matrix_with_cap(cap)?;
            let basis = commutant_basis(&model)?;
            #[derive(serde::Serialize)]
            struct CommutantOut<'a> {
                model: &'a JordanSumModel,
                dimension: usize,
                tags: &'a [sidec_core::commutant::BasisTag],
                elements: &'a [sidec_core::ExactMatrix],
            }
            let out = CommutantOut {
                model: &model,
                dimension: basis.dimension(),
                tags: &basis.tags,
                elements: &basis.elements,
            };
            let text = format!(
                "commutant dimension {} over {} copies\n",
                basis.dimension(),
                model.total_copies()
            );
            emit(cli.format, &out, text);
            Ok(ExitCode::SUCCESS)
        }
        Command::K0 { field } => {
            let field = read_field(field)?;
            field.validate_with_cap(cap)?;
            let descriptor = class_group_descriptor(&field)?;
            let mut text = String::new();
            for g in &descriptor.per_value {
                let class: Vec<String> = g
                    .identity_class
                    .iter()
                    .map(|m| m.to_string())
                    .collect();
                text.push_str(&format!(
                    "at {}: rank {}, V = {}, K0 = {}, [I] = ({})\n",
                    g.spectral_value,
                    g.rank,
                    g.semigroup,
                    g.group,
                    class.join(", ")
                ));
            }
            emit(cli.format, &descriptor, text);
            Ok(ExitCode::SUCCESS)
        }
        Command::Decide {
            field,
            perturb,
            sequence,
        } => {
            let field = read_field(field)?;
            let opts = AnalysisOptions {
                perturb_k: *perturb,
                sequence_k_max: *sequence,
                max_dim: cap,
            };
            let report = run_analysis(&field, &opts);
            match cli.format {
                Format::Json => print!("{}", report.to_json()),
                Format::Text => print!(
                    "{}",
                    render::render_analysis(&report, started.elapsed().as_millis())
                ),
            }
            Ok(match report.exit_code() {
                0 => ExitCode::SUCCESS,
                2 => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            })
        }
        Command::Sequence { field, k_max } => {
            let field = read_field(field)?;
            let opts = AnalysisOptions {
                perturb_k: None,
                sequence_k_max: Some(*k_max),
                max_dim: cap,
            };
            let report = run_analysis(&field, &opts);
            match &report.sequence {
                Section::Ok(seq) => {
                    let mut text = String::new();
                    for step in &seq.steps {
                        text.push_str(&format!(
                            "k = {:3}: bound {}\n",
                            step.k,
                            sidec_core::scalar::format_rational(&step.bound.bound)
                        ));
                    }
                    emit(cli.format, seq, text);
                    Ok(ExitCode::SUCCESS)
                }
                Section::Failed { error } => bail!("sequence failed: {error}"),
                Section::Skipped { reason } => bail!("sequence skipped: {reason}"),
            }
        }
        Command::MasaMatch { target, source } => {
            let read_family = |path: &Path| -> Result<FamilyFile> {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing family file {}", path.display()))
            };
            let target = read_family(target)?;
            let source = read_family(source)?;
            let matched = run_masa_match(&target, &source)?;
            let text = render::render_masa_match(&matched, started.elapsed().as_millis());
            emit(cli.format, &matched, text);
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { report } => {
            let text = fs::read_to_string(report)
                .with_context(|| format!("reading {}", report.display()))?;
            let report = report::AnalysisReport::from_json(&text)
                .context("parsing analysis report")?;
            let outcome = verify::verify_report(&report);
            for check in &outcome.checks {
                if check.passed {
                    println!("ok   - {}", check.name);
                } else {
                    println!("FAIL - {}: {}", check.name, check.detail);
                }
            }
            let passed = outcome.checks.iter().filter(|c| c.passed).count();
            println!("{passed}/{} checks passed", outcome.checks.len());
            Ok(if outcome.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
