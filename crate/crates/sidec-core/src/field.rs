//! The operator data model: a finite list of weighted spectral cells. Each
//! cell carries one point of the diagonal spectrum, a positive measure
//! weight, an atomic or continuous mass type, a block size n, and the
//! constant values of the strictly upper triangular entries on that cell.
//!
//! A field stands for a direct sum over its cells of upper-triangular
//! operator blocks with constant diagonal; the norm of a difference of two
//! fields with the same skeleton is the max over cells, which is what the
//! certified bound in [`entry_supnorm_bound`] computes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{Signed, Zero};
use serde::de::Error as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matrix::ExactMatrix;
use crate::scalar::{
    format_rational, rational_serde, sqrt_upper_bound, GaussianRational, Rational,
};

/// Default cap on block sizes and materialized matrix dimensions. Exact
/// arithmetic on larger systems is possible but rarely what anyone wants
/// interactively; the cap is a reported error, never a silent truncation.
pub const DEFAULT_DIM_CAP: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MassType {
    Atomic { count: u64 },
    Continuous,
}

/// Spectral multiplicity: a positive integer or the infinite token.
/// Finite versus infinite is the dividing line for uniqueness of the
/// strongly irreducible decomposition, so the token is first class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Multiplicity {
    Finite(u64),
    Infinite,
}

impl Multiplicity {
    pub fn is_finite(&self) -> bool {
        matches!(self, Multiplicity::Finite(_))
    }

    fn add_mass(&mut self, mass: &MassType) {
        match (&*self, mass) {
            (Multiplicity::Finite(a), MassType::Atomic { count }) => {
                *self = Multiplicity::Finite(a + count)
            }
            _ => *self = Multiplicity::Infinite,
        }
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Multiplicity::Finite(n) => write!(f, "{n}"),
            Multiplicity::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Multiplicity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Multiplicity::Finite(n) => s.serialize_u64(*n),
            Multiplicity::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Multiplicity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Finite(u64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Finite(n) => Ok(Multiplicity::Finite(n)),
            Repr::Text(t) if t == "inf" => Ok(Multiplicity::Infinite),
            Repr::Text(t) => Err(D::Error::custom(format!("invalid multiplicity '{t}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralCell {
    pub id: String,
    #[serde(rename = "value")]
    pub spectral_value: GaussianRational,
    #[serde(with = "rational_serde")]
    pub weight: Rational,
    pub mass: MassType,
    #[serde(rename = "n")]
    pub block_size: usize,
    /// Strictly upper triangular entries, keyed by 1-based (row, col) with
    /// row < col. Missing positions are zero.
    #[serde(
        rename = "entries",
        with = "entries_serde",
        default,
        skip_serializing_if = "BTreeMap::is_empty"
    )]
    pub upper_entries: BTreeMap<(usize, usize), GaussianRational>,
}

impl SpectralCell {
    /// The n x n upper-triangular fiber carried by this cell: constant
    /// diagonal equal to the spectral value, stored upper entries, zero fill.
    pub fn fiber(&self) -> ExactMatrix {
        let n = self.block_size;
        let mut m = ExactMatrix::scalar(n, &self.spectral_value);
        for (&(i, j), v) in &self.upper_entries {
            m.set(i - 1, j - 1, v.clone());
        }
        m
    }

    /// The (i, i+1) entry, 1-based, defaulting to zero.
    pub fn superdiagonal(&self, i: usize) -> GaussianRational {
        self.upper_entries
            .get(&(i, i + 1))
            .cloned()
            .unwrap_or_else(GaussianRational::zero)
    }

    /// Canonical cells carry exactly the unit superdiagonal and nothing else.
    pub fn is_canonical(&self) -> bool {
        let expected = self.block_size.saturating_sub(1);
        self.upper_entries.len() == expected
            && (1..self.block_size).all(|i| {
                self.upper_entries
                    .get(&(i, i + 1))
                    .is_some_and(GaussianRational::is_one)
            })
    }

    fn validate(&self, cap: usize) -> Result<()> {
        if !self.weight.is_positive() {
            return Err(Error::NonPositiveWeight {
                id: self.id.clone(),
            });
        }
        if let MassType::Atomic { count: 0 } = self.mass {
            return Err(Error::ZeroAtomCount {
                id: self.id.clone(),
            });
        }
        if self.block_size == 0 || self.block_size > cap {
            return Err(Error::DimensionCap {
                dim: self.block_size,
                cap,
            });
        }
        for &(i, j) in self.upper_entries.keys() {
            if i == 0 || j == 0 || i >= j || j > self.block_size {
                return Err(Error::BadEntryIndex {
                    id: self.id.clone(),
                    row: i,
                    col: j,
                    block_size: self.block_size,
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorField {
    pub name: String,
    pub cells: Vec<SpectralCell>,
}

/// Cells serialize sorted by id so that equal fields have equal bytes.
impl Serialize for OperatorField {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Canonical<'a> {
            name: &'a str,
            cells: Vec<&'a SpectralCell>,
        }
        let mut cells: Vec<&SpectralCell> = self.cells.iter().collect();
        cells.sort_by(|a, b| a.id.cmp(&b.id));
        Canonical {
            name: &self.name,
            cells,
        }
        .serialize(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSizeReport {
    pub block_size: usize,
    /// Whether the multiplicity function at this block size is simple. Under
    /// the finite-cell model it always is: each spectral value receives a
    /// single multiplicity. Recorded because the uniqueness analysis
    /// assumes it.
    pub multiplicity_simple: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub cell_count: usize,
    pub per_block_size: Vec<BlockSizeReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub block_size: usize,
    pub spectral_value: GaussianRational,
    pub multiplicity: Multiplicity,
    #[serde(with = "rational_serde")]
    pub total_weight: Rational,
}

/// One entry per distinct (block size, spectral value) pair, sorted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityProfile {
    pub entries: Vec<ProfileEntry>,
}

impl MultiplicityProfile {
    pub fn all_finite(&self) -> bool {
        self.entries.iter().all(|e| e.multiplicity.is_finite())
    }

    pub fn infinite_entries(&self) -> Vec<&ProfileEntry> {
        self.entries
            .iter()
            .filter(|e| !e.multiplicity.is_finite())
            .collect()
    }
}

impl OperatorField {
    pub fn new(name: impl Into<String>, cells: Vec<SpectralCell>) -> Self {
        Self {
            name: name.into(),
            cells,
        }
    }

    pub fn cell(&self, id: &str) -> Option<&SpectralCell> {
        self.cells.iter().find(|c| c.id == id)
    }

    pub fn validate(&self) -> Result<ValidationReport> {
        self.validate_with_cap(DEFAULT_DIM_CAP)
    }

    pub fn validate_with_cap(&self, cap: usize) -> Result<ValidationReport> {
        if self.cells.is_empty() {
            return Err(Error::EmptyField);
        }
        let mut seen = BTreeSet::new();
        for cell in &self.cells {
            if !seen.insert(&cell.id) {
                return Err(Error::DuplicateCellId {
                    id: cell.id.clone(),
                });
            }
            cell.validate(cap)?;
        }
        let sizes: BTreeSet<usize> = self.cells.iter().map(|c| c.block_size).collect();
        Ok(ValidationReport {
            cell_count: self.cells.len(),
            per_block_size: sizes
                .into_iter()
                .map(|block_size| BlockSizeReport {
                    block_size,
                    multiplicity_simple: true,
                })
                .collect(),
        })
    }

    pub fn fiber_matrix(&self, id: &str) -> Result<ExactMatrix> {
        self.cell(id)
            .map(SpectralCell::fiber)
            .ok_or_else(|| Error::UnknownCell { id: id.to_string() })
    }

    /// Group cells by (block size, spectral value). A group is assigned the
    /// sum of its atomic counts, or the infinite token as soon as any
    /// continuous cell contributes; weights add up in both cases.
    pub fn multiplicity_profile(&self) -> MultiplicityProfile {
        let mut groups: BTreeMap<(usize, GaussianRational), (Multiplicity, Rational)> =
            BTreeMap::new();
        for cell in &self.cells {
            let key = (cell.block_size, cell.spectral_value.clone());
            match groups.get_mut(&key) {
                Some((mult, weight)) => {
                    mult.add_mass(&cell.mass);
                    *weight += &cell.weight;
                }
                None => {
                    let mult = match &cell.mass {
                        MassType::Atomic { count } => Multiplicity::Finite(*count),
                        MassType::Continuous => Multiplicity::Infinite,
                    };
                    groups.insert(key, (mult, cell.weight.clone()));
                }
            }
        }
        MultiplicityProfile {
            entries: groups
                .into_iter()
                .map(|((block_size, spectral_value), (multiplicity, total_weight))| ProfileEntry {
                    block_size,
                    spectral_value,
                    multiplicity,
                    total_weight,
                })
                .collect(),
        }
    }

    /// All cells share id, block size, weight, mass and spectral value with
    /// a partner in the other field; only upper entries may differ.
    pub fn same_skeleton(&self, other: &OperatorField) -> Result<()> {
        let mismatch = |detail: String| Err(Error::SkeletonMismatch { detail });
        if self.cells.len() != other.cells.len() {
            return mismatch(format!(
                "{} cells vs {} cells",
                self.cells.len(),
                other.cells.len()
            ));
        }
        for cell in &self.cells {
            let Some(peer) = other.cell(&cell.id) else {
                return mismatch(format!("cell '{}' missing from one side", cell.id));
            };
            if cell.block_size != peer.block_size
                || cell.weight != peer.weight
                || cell.mass != peer.mass
                || cell.spectral_value != peer.spectral_value
            {
                return mismatch(format!("cell '{}' differs beyond its entries", cell.id));
            }
        }
        Ok(())
    }

    /// Canonical pretty-printed JSON: cells sorted by id, entries by (i, j),
    /// all numbers exact strings. Serializing a parsed document is
    /// idempotent byte for byte.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("field serialization");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let field: OperatorField = serde_json::from_str(text)?;
        let mut seen = BTreeSet::new();
        for cell in &field.cells {
            if !seen.insert(&cell.id) {
                return Err(Error::DuplicateCellId {
                    id: cell.id.clone(),
                });
            }
        }
        Ok(field)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryBound {
    pub row: usize,
    pub col: usize,
    /// |difference|^2, exact.
    #[serde(with = "rational_serde")]
    pub difference_modulus_squared: Rational,
    /// Certified rational upper bound on |difference|.
    #[serde(with = "rational_serde")]
    pub upper: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellBound {
    pub cell_id: String,
    pub block_size: usize,
    /// Sum of the per-entry upper bounds within this cell.
    #[serde(with = "rational_serde")]
    pub total: Rational,
    pub entries: Vec<EntryBound>,
}

/// A certified upper bound on the operator norm of F - G for fields with
/// identical skeletons: within a cell the entry bounds add up, and the cells
/// are direct summands, so the field-level bound is the max over cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupNormBound {
    #[serde(with = "rational_serde")]
    pub bound: Rational,
    pub per_cell: Vec<CellBound>,
}

pub fn entry_supnorm_bound(f: &OperatorField, g: &OperatorField) -> Result<SupNormBound> {
    f.same_skeleton(g)?;
    let mut per_cell = Vec::new();
    let mut bound = Rational::zero();
    let mut ids: Vec<&String> = f.cells.iter().map(|c| &c.id).collect();
    ids.sort();
    for id in ids {
        let a = f.cell(id).expect("skeleton checked");
        let b = g.cell(id).expect("skeleton checked");
        let mut positions: BTreeSet<(usize, usize)> = a.upper_entries.keys().copied().collect();
        positions.extend(b.upper_entries.keys().copied());
        let mut entries = Vec::new();
        let mut total = Rational::zero();
        let zero = GaussianRational::zero();
        for (i, j) in positions {
            let va = a.upper_entries.get(&(i, j)).unwrap_or(&zero);
            let vb = b.upper_entries.get(&(i, j)).unwrap_or(&zero);
            let diff = va - vb;
            if diff.is_zero() {
                continue;
            }
            let sq = diff.modulus_squared();
            let upper = sqrt_upper_bound(&sq);
            total += &upper;
            entries.push(EntryBound {
                row: i,
                col: j,
                difference_modulus_squared: sq,
                upper,
            });
        }
        if total > bound {
            bound = total.clone();
        }
        per_cell.push(CellBound {
            cell_id: id.clone(),
            block_size: a.block_size,
            total,
            entries,
        });
    }
    Ok(SupNormBound { bound, per_cell })
}

/// Serde adapter for the entries map: keys are `"i,j"`, iteration order is
/// numeric (i, j), duplicates are rejected.
mod entries_serde {
    use super::*;

    pub fn serialize<S: Serializer>(
        entries: &BTreeMap<(usize, usize), GaussianRational>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(entries.len()))?;
        for (&(i, j), value) in entries {
            map.serialize_entry(&format!("{i},{j}"), value)?;
        }
        map.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<(usize, usize), GaussianRational>, D::Error> {
        let raw = BTreeMap::<String, GaussianRational>::deserialize(d)?;
        let mut out = BTreeMap::new();
        for (key, value) in raw {
            let parsed = key.split_once(',').and_then(|(i, j)| {
                Some((i.trim().parse::<usize>().ok()?, j.trim().parse::<usize>().ok()?))
            });
            let Some(pos) = parsed else {
                return Err(D::Error::custom(format!(
                    "invalid entry key '{key}', expected \"i,j\""
                )));
            };
            if out.insert(pos, value).is_some() {
                return Err(D::Error::custom(format!("duplicate entry key '{key}'")));
            }
        }
        Ok(out)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} cells; block sizes", self.cell_count)?;
        for report in &self.per_block_size {
            write!(
                f,
                " {}{}",
                report.block_size,
                if report.multiplicity_simple {
                    " (simple multiplicity)"
                } else {
                    ""
                }
            )?;
        }
        Ok(())
    }
}

impl fmt::Display for MultiplicityProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (idx, e) in self.entries.iter().enumerate() {
            if idx > 0 {
                writeln!(f)?;
            }
            write!(
                f,
                "n={} at {}: multiplicity {}, weight {}",
                e.block_size,
                e.spectral_value,
                e.multiplicity,
                format_rational(&e.total_weight)
            )?;
        }
        Ok(())
    }
}

/// Helpers for building cells in code; file input goes through
/// [`OperatorField::from_json`].
pub fn atomic_cell(
    id: &str,
    value: GaussianRational,
    weight: Rational,
    count: u64,
    block_size: usize,
    entries: &[((usize, usize), GaussianRational)],
) -> SpectralCell {
    SpectralCell {
        id: id.to_string(),
        spectral_value: value,
        weight,
        mass: MassType::Atomic { count },
        block_size,
        upper_entries: entries.iter().cloned().collect(),
    }
}

pub fn continuous_cell(
    id: &str,
    value: GaussianRational,
    weight: Rational,
    block_size: usize,
    entries: &[((usize, usize), GaussianRational)],
) -> SpectralCell {
    SpectralCell {
        id: id.to_string(),
        spectral_value: value,
        weight,
        mass: MassType::Continuous,
        block_size,
        upper_entries: entries.iter().cloned().collect(),
    }
}

/// A cell already in canonical form: unit superdiagonal, nothing else.
pub fn canonical_cell(
    id: &str,
    value: GaussianRational,
    weight: Rational,
    count: u64,
    block_size: usize,
) -> SpectralCell {
    let entries: Vec<((usize, usize), GaussianRational)> = (1..block_size)
        .map(|i| ((i, i + 1), GaussianRational::one()))
        .collect();
    atomic_cell(id, value, weight, count, block_size, &entries)
}
