//! Deterministic generators for the test suites: a tiny xorshift generator
//! and builders for random scalars, matrices, fields and commutant
//! elements. Seeded explicitly everywhere, so every suite is reproducible.
//!
//! Not part of the supported API.

use crate::commutant::{CommutantBasis, JordanSumModel};
use crate::field::{MassType, OperatorField, SpectralCell};
use crate::matrix::ExactMatrix;
use crate::scalar::{ratio, GaussianRational, Rational};

pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        // xorshift64*
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545F4914F6CDD1D)
    }

    /// Uniform in 0..n.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        self.next_u64() % n
    }

    pub fn chance(&mut self, num: u64, den: u64) -> bool {
        self.below(den) < num
    }

    /// Signed numerator in [-max..max], denominator in [1..=max_den].
    pub fn rational(&mut self, max_abs: u64, max_den: u64) -> Rational {
        let num = self.below(2 * max_abs + 1) as i64 - max_abs as i64;
        let den = self.below(max_den) as i64 + 1;
        ratio(num, den)
    }

    pub fn positive_rational(&mut self, max_num: u64, max_den: u64) -> Rational {
        ratio(self.below(max_num) as i64 + 1, self.below(max_den) as i64 + 1)
    }

    /// Small Gaussian rational; roughly half are real.
    pub fn gaussian(&mut self, max_abs: u64, max_den: u64) -> GaussianRational {
        let re = self.rational(max_abs, max_den);
        let im = if self.chance(1, 2) {
            Rational::from_integer(0.into())
        } else {
            self.rational(max_abs, max_den)
        };
        GaussianRational::new(re, im)
    }

    pub fn gaussian_nonzero(&mut self, max_abs: u64, max_den: u64) -> GaussianRational {
        loop {
            let z = self.gaussian(max_abs, max_den);
            if !z.is_zero() {
                return z;
            }
        }
    }

    pub fn matrix(&mut self, rows: usize, cols: usize, max_abs: u64) -> ExactMatrix {
        ExactMatrix::from_fn(rows, cols, |_, _| self.gaussian(max_abs, 3))
    }

    /// Upper triangular with the given constant diagonal, or a random
    /// diagonal when none is supplied. Strict-upper entries are sparse.
    pub fn upper_triangular(
        &mut self,
        n: usize,
        diagonal: Option<&GaussianRational>,
    ) -> ExactMatrix {
        let diag: Vec<GaussianRational> = match diagonal {
            Some(d) => vec![d.clone(); n],
            None => (0..n).map(|_| self.gaussian(3, 2)).collect(),
        };
        let mut m = ExactMatrix::zeros(n, n);
        for (i, d) in diag.into_iter().enumerate() {
            m.set(i, i, d);
        }
        for i in 0..n {
            for j in i + 1..n {
                if self.chance(3, 5) {
                    m.set(i, j, self.gaussian(3, 2));
                }
            }
        }
        m
    }

    /// A field with 1..=max_cells cells of block size 1..=max_n, atomic
    /// counts 1..=3, sparse entries with occasional zero superdiagonals.
    pub fn field(&mut self, name: &str, max_cells: usize, max_n: usize) -> OperatorField {
        let cells = self.below(max_cells as u64) as usize + 1;
        let mut out = Vec::with_capacity(cells);
        for c in 0..cells {
            let n = self.below(max_n as u64) as usize + 1;
            let mut entries = Vec::new();
            for i in 1..n {
                // Superdiagonals: most set, some zero, some tiny.
                if self.chance(7, 10) {
                    let value = if self.chance(1, 5) {
                        GaussianRational::from_rational(self.rational(1, 40))
                    } else {
                        self.gaussian(2, 3)
                    };
                    if !value.is_zero() {
                        entries.push(((i, i + 1), value));
                    }
                }
                for j in i + 2..=n {
                    if self.chance(1, 4) {
                        entries.push(((i, j), self.gaussian(2, 3)));
                    }
                }
            }
            out.push(SpectralCell {
                id: format!("c{c}"),
                spectral_value: self.gaussian(2, 2),
                weight: self.positive_rational(4, 3),
                mass: MassType::Atomic {
                    count: self.below(3) + 1,
                },
                block_size: n,
                upper_entries: entries.into_iter().collect(),
            });
        }
        OperatorField::new(name, out)
    }

    /// As [`TestRng::field`], with every superdiagonal entry nonzero.
    pub fn invertible_field(&mut self, name: &str, max_cells: usize, max_n: usize) -> OperatorField {
        let mut field = self.field(name, max_cells, max_n);
        for cell in &mut field.cells {
            for i in 1..cell.block_size {
                let key = (i, i + 1);
                let zero = cell
                    .upper_entries
                    .get(&key)
                    .map(GaussianRational::is_zero)
                    .unwrap_or(true);
                if zero {
                    cell.upper_entries
                        .insert(key, self.gaussian_nonzero(2, 3));
                }
            }
        }
        field
    }

    /// A random element of the commutant spanned by the basis.
    pub fn commutant_element(&mut self, basis: &CommutantBasis) -> ExactMatrix {
        let dim = basis.model.total_dimension();
        let mut out = ExactMatrix::zeros(dim, dim);
        for e in &basis.elements {
            if self.chance(2, 3) {
                let coeff = self.gaussian(2, 2);
                if !coeff.is_zero() {
                    out = out.add(&e.scale(&coeff));
                }
            }
        }
        out
    }

    /// An invertible commutant element with its inverse, by rejection.
    pub fn invertible_commutant_element(
        &mut self,
        basis: &CommutantBasis,
    ) -> (ExactMatrix, ExactMatrix) {
        loop {
            let candidate = self.commutant_element(basis);
            if let Ok(inverse) = candidate.inverse() {
                return (candidate, inverse);
            }
        }
    }

    /// A random idempotent of the commutant: a sum of copy projections
    /// conjugated by a random invertible commutant element.
    pub fn commutant_idempotent(
        &mut self,
        model: &JordanSumModel,
        basis: &CommutantBasis,
    ) -> ExactMatrix {
        let dim = model.total_dimension();
        let mut seed = ExactMatrix::zeros(dim, dim);
        for u in 0..model.total_copies() {
            if self.chance(1, 2) {
                seed = seed.add(&model.copy_projection(u));
            }
        }
        let (y, y_inv) = self.invertible_commutant_element(basis);
        y.mul(&seed).mul(&y_inv)
    }
}
