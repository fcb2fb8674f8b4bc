//! Dense matrices over the Gaussian rationals: exact arithmetic, rank,
//! kernel, inverse, and the power-rank sequences that read off Jordan
//! structure from triangular data.
//!
//! Elimination uses exact field operations with a deterministic pivot rule
//! (first nonzero entry of the remaining block in row-major order), so every
//! derived object -- kernel bases, inverses, rank profiles -- is reproducible
//! bit for bit. Inner loops skip zero entries, which keeps the large sparse
//! systems produced by the commutant oracle cheap.

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::GaussianRational;

#[derive(Clone, PartialEq, Eq)]
pub struct ExactMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<GaussianRational>,
}

impl ExactMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![GaussianRational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, GaussianRational::one());
        }
        m
    }

    /// alpha * I.
    pub fn scalar(n: usize, alpha: &GaussianRational) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, alpha.clone());
        }
        m
    }

    /// The n x n upper bidiagonal block with constant diagonal `alpha` and
    /// unit superdiagonal.
    pub fn jordan_block(n: usize, alpha: &GaussianRational) -> Self {
        let mut m = Self::scalar(n, alpha);
        for i in 0..n.saturating_sub(1) {
            m.set(i, i + 1, GaussianRational::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<GaussianRational>>) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::RaggedRows {
                    row: i,
                    expected: width,
                    found: row.len(),
                });
            }
        }
        Ok(Self {
            rows: height,
            cols: width,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> GaussianRational) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self { rows, cols, entries }
    }

    /// Convenience constructor from integer data, mostly for tests.
    pub fn from_i64(rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| GaussianRational::from_integer(x)).collect())
                .collect(),
        )
        .expect("literal rows have equal length")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &GaussianRational {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: GaussianRational) {
        self.entries[i * self.cols + j] = value;
    }

    /// Copy `block` into `self` with its top-left corner at (r0, c0).
    pub fn embed(&mut self, r0: usize, c0: usize, block: &ExactMatrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            for j in 0..block.cols {
                self.set(r0 + i, c0 + j, block.get(i, j).clone());
            }
        }
    }

    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> ExactMatrix {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols);
        Self::from_fn(rows, cols, |i, j| self.get(r0 + i, c0 + j).clone())
    }

    pub fn block_diag(blocks: &[&ExactMatrix]) -> ExactMatrix {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut m = Self::zeros(rows, cols);
        let (mut r, mut c) = (0, 0);
        for b in blocks {
            m.embed(r, c, b);
            r += b.rows;
            c += b.cols;
        }
        m
    }

    pub fn transpose(&self) -> ExactMatrix {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn add(&self, rhs: &ExactMatrix) -> ExactMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j) + rhs.get(i, j))
    }

    pub fn sub(&self, rhs: &ExactMatrix) -> ExactMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j) - rhs.get(i, j))
    }

    pub fn neg(&self) -> ExactMatrix {
        Self::from_fn(self.rows, self.cols, |i, j| -self.get(i, j))
    }

    pub fn scale(&self, factor: &GaussianRational) -> ExactMatrix {
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j) * factor)
    }

    pub fn mul(&self, rhs: &ExactMatrix) -> ExactMatrix {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in multiplication");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let cur = out.get(i, j) + &(a * b);
                    out.set(i, j, cur);
                }
            }
        }
        out
    }

    pub fn pow(&self, mut exp: usize) -> ExactMatrix {
        assert_eq!(self.rows, self.cols, "power of a non-square matrix");
        let mut base = self.clone();
        let mut acc = Self::identity(self.rows);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul(&base);
            }
            exp >>= 1;
            if exp > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn trace(&self) -> GaussianRational {
        assert_eq!(self.rows, self.cols, "trace of a non-square matrix");
        let mut t = GaussianRational::zero();
        for i in 0..self.rows {
            t = &t + self.get(i, i);
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(GaussianRational::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols && *self == Self::identity(self.rows)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_upper_triangular(&self) -> bool {
        self.first_lower_nonzero().is_none()
    }

    /// First nonzero strictly-lower position in row-major order, if any.
    pub fn first_lower_nonzero(&self) -> Option<(usize, usize)> {
        for i in 0..self.rows {
            for j in 0..i.min(self.cols) {
                if !self.get(i, j).is_zero() {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// True when the matrix is diagonal with every diagonal entry 0 or 1.
    pub fn is_zero_one_diagonal(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in 0..self.cols {
                let e = self.get(i, j);
                if i == j {
                    if !e.is_zero() && !e.is_one() {
                        return false;
                    }
                } else if !e.is_zero() {
                    return false;
                }
            }
        }
        true
    }

    pub fn commutes_with(&self, other: &ExactMatrix) -> bool {
        self.mul(other) == other.mul(self)
    }

    /// First nonzero entry of `self*self - self`, if any.
    pub fn idempotency_defect(&self) -> Option<(usize, usize, ExactMatrix)> {
        let residual = self.mul(self).sub(self);
        residual
            .first_nonzero()
            .map(|(i, j)| (i, j, residual.clone()))
    }

    pub fn first_nonzero(&self) -> Option<(usize, usize)> {
        for i in 0..self.rows {
            for j in 0..self.cols {
                if !self.get(i, j).is_zero() {
                    return Some((i, j));
                }
            }
        }
        None
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Forward elimination over the first `limit` columns. Pivots are chosen
    /// as the first nonzero entry of the remaining block scanned row by row,
    /// which fixes the output uniquely.
    fn echelon(&self, limit: usize) -> Echelon {
        let mut w = self.clone();
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        let mut next_row = 0;
        while next_row < w.rows {
            // Row-major scan of the remaining block for the next pivot.
            let mut found = None;
            'scan: for i in next_row..w.rows {
                for j in 0..limit {
                    if !w.get(i, j).is_zero() {
                        found = Some((i, j));
                        break 'scan;
                    }
                }
            }
            let Some((prow, pcol)) = found else { break };
            w.swap_rows(next_row, prow);
            let pivot = w.get(next_row, pcol).clone();
            let support: Vec<usize> = (0..w.cols)
                .filter(|&j| !w.get(next_row, j).is_zero())
                .collect();
            for i in next_row + 1..w.rows {
                if w.get(i, pcol).is_zero() {
                    continue;
                }
                let factor = w.get(i, pcol) / &pivot;
                for &j in &support {
                    let updated = w.get(i, j) - &(&factor * w.get(next_row, j));
                    w.set(i, j, updated);
                }
                w.set(i, pcol, GaussianRational::zero());
            }
            pivots.push((next_row, pcol));
            next_row += 1;
        }
        Echelon { mat: w, pivots }
    }

    pub fn rank(&self) -> usize {
        self.echelon(self.cols).pivots.len()
    }

    /// Indices of a deterministic maximal independent set of columns: the
    /// pivot columns of the elimination, in elimination order.
    pub fn pivot_columns(&self) -> Vec<usize> {
        self.echelon(self.cols)
            .pivots
            .into_iter()
            .map(|(_, c)| c)
            .collect()
    }

    /// Column `j` as an n x 1 matrix.
    pub fn column(&self, j: usize) -> ExactMatrix {
        Self::from_fn(self.rows, 1, |i, _| self.get(i, j).clone())
    }

    /// Basis of the right kernel as column vectors, one per free column in
    /// ascending column order. Each vector satisfies `self * v = 0` exactly.
    pub fn kernel(&self) -> Vec<ExactMatrix> {
        let ech = self.echelon(self.cols);
        let pivot_cols: Vec<usize> = ech.pivots.iter().map(|&(_, c)| c).collect();
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if pivot_cols.contains(&free) {
                continue;
            }
            let mut x = vec![GaussianRational::zero(); self.cols];
            x[free] = GaussianRational::one();
            for &(r, c) in ech.pivots.iter().rev() {
                let mut s = GaussianRational::zero();
                for (j, xj) in x.iter().enumerate() {
                    if j == c {
                        continue;
                    }
                    let m = ech.mat.get(r, j);
                    if !m.is_zero() && !xj.is_zero() {
                        s = &s + &(m * xj);
                    }
                }
                x[c] = &(-&s) / ech.mat.get(r, c);
            }
            basis.push(ExactMatrix {
                rows: self.cols,
                cols: 1,
                entries: x,
            });
        }
        basis
    }

    /// Solve `self * X = rhs` for square `self`. `None` when singular.
    pub fn solve(&self, rhs: &ExactMatrix) -> Option<ExactMatrix> {
        assert_eq!(self.rows, self.cols, "solve requires a square matrix");
        assert_eq!(self.rows, rhs.rows, "shape mismatch in solve");
        let n = self.cols;
        let mut aug = ExactMatrix::zeros(n, n + rhs.cols);
        aug.embed(0, 0, self);
        aug.embed(0, n, rhs);
        let ech = aug.echelon(n);
        if ech.pivots.len() < n {
            return None;
        }
        let mut x = ExactMatrix::zeros(n, rhs.cols);
        for col in 0..rhs.cols {
            // Pivot (r, c) solves for x[c]; later pivots are already known.
            for &(r, c) in ech.pivots.iter().rev() {
                let mut s = ech.mat.get(r, n + col).clone();
                for j in 0..n {
                    if j == c {
                        continue;
                    }
                    let m = ech.mat.get(r, j);
                    let xv = x.get(j, col);
                    if !m.is_zero() && !xv.is_zero() {
                        s = &s - &(m * xv);
                    }
                }
                x.set(c, col, &s / ech.mat.get(r, c));
            }
        }
        Some(x)
    }

    /// Exact inverse; singular input reports a kernel witness.
    pub fn inverse(&self) -> Result<ExactMatrix> {
        if self.rows != self.cols {
            return Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        match self.solve(&ExactMatrix::identity(self.rows)) {
            Some(inv) => Ok(inv),
            None => {
                let witness = self
                    .kernel()
                    .into_iter()
                    .next()
                    .expect("singular matrix has a nonzero kernel");
                Err(Error::Singular {
                    witness: Box::new(witness),
                })
            }
        }
    }

    /// Ranks of the powers of `self - alpha*I`:
    /// `[rank((M-aI)^0), rank((M-aI)^1), ..., rank((M-aI)^n)]`.
    ///
    /// The sequence determines the sizes of the Jordan blocks of `self` at
    /// `alpha`; see [`ExactMatrix::jordan_block_sizes`].
    pub fn weyr_sequence(&self, alpha: &GaussianRational) -> Vec<usize> {
        assert_eq!(self.rows, self.cols, "weyr sequence of a non-square matrix");
        let n = self.rows;
        let shifted = self.sub(&ExactMatrix::scalar(n, alpha));
        let mut out = Vec::with_capacity(n + 1);
        out.push(n);
        let mut power = ExactMatrix::identity(n);
        for _ in 1..=n {
            if *out.last().unwrap() == 0 {
                out.push(0);
                continue;
            }
            power = power.mul(&shifted);
            out.push(power.rank());
        }
        out
    }

    /// Multiset of Jordan block sizes of `self` at `alpha`, in decreasing
    /// order, read off the rank drops of the Weyr sequence.
    pub fn jordan_block_sizes(&self, alpha: &GaussianRational) -> Vec<usize> {
        let ranks = self.weyr_sequence(alpha);
        let n = self.rows;
        // d[j] = number of blocks of size >= j.
        let drops: Vec<usize> = (1..=n).map(|j| ranks[j - 1] - ranks[j]).collect();
        let mut sizes = Vec::new();
        for j in (1..=n).rev() {
            let at_least_next = if j == n { 0 } else { drops[j] };
            for _ in 0..drops[j - 1] - at_least_next {
                sizes.push(j);
            }
        }
        sizes
    }
}

struct Echelon {
    mat: ExactMatrix,
    pivots: Vec<(usize, usize)>,
}

impl fmt::Debug for ExactMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}x{}]", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Serialize for ExactMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<&GaussianRational>> = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j)).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExactMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<GaussianRational>>::deserialize(d)?;
        ExactMatrix::from_rows(rows).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    fn gr(n: i64) -> GaussianRational {
        GaussianRational::from_integer(n)
    }

    #[test]
    fn identity_kernel_is_trivial() {
        assert!(ExactMatrix::identity(3).kernel().is_empty());
        assert_eq!(ExactMatrix::identity(3).rank(), 3);
    }

    #[test]
    fn forced_kernel_vector() {
        let m = ExactMatrix::from_i64(&[&[1, 1], &[1, 1]]);
        let basis = m.kernel();
        assert_eq!(basis.len(), 1);
        let v = &basis[0];
        assert!(m.mul(v).is_zero());
        // Spanned by (1, -1): the two coordinates are opposite and nonzero.
        assert_eq!(*v.get(0, 0), -v.get(1, 0));
        assert!(!v.get(0, 0).is_zero());
    }

    #[test]
    fn rank_plus_nullity() {
        // 3x4 of rank 2, built as a product to pin the rank.
        let a = ExactMatrix::from_i64(&[&[1, 0], &[2, 1], &[0, 3]]);
        let b = ExactMatrix::from_i64(&[&[1, 2, 0, 1], &[0, 1, 1, 4]]);
        let m = a.mul(&b);
        assert_eq!(m.rank(), 2);
        let basis = m.kernel();
        assert_eq!(basis.len(), 2);
        for v in &basis {
            assert!(m.mul(v).is_zero());
        }
    }

    #[test]
    fn inverse_round_trip() {
        let m = ExactMatrix::from_i64(&[&[2, 1, 0], &[0, 1, 5], &[1, 0, 3]]);
        let inv = m.inverse().unwrap();
        assert!(m.mul(&inv).is_identity());
        assert!(inv.mul(&m).is_identity());
    }

    #[test]
    fn printed_block_idempotent_conjugator_inverts_by_sign_flip() {
        // 4x4 with coupling blocks 5 and 3; the inverse flips their signs.
        let x = ExactMatrix::from_i64(&[
            &[1, 0, 0, 5],
            &[0, 1, -3, 0],
            &[0, 0, 1, 0],
            &[0, 0, 0, 1],
        ]);
        let expected = ExactMatrix::from_i64(&[
            &[1, 0, 0, -5],
            &[0, 1, 3, 0],
            &[0, 0, 1, 0],
            &[0, 0, 0, 1],
        ]);
        assert_eq!(x.inverse().unwrap(), expected);
    }

    #[test]
    fn singular_triangular_matrix_reports_witness() {
        let m = ExactMatrix::from_i64(&[&[1, 4], &[0, 0]]);
        match m.inverse() {
            Err(Error::Singular { witness }) => {
                assert!(m.mul(&witness).is_zero());
                assert!(!witness.is_zero());
            }
            other => panic!("expected a singular error, got {other:?}"),
        }
    }

    #[test]
    fn weyr_sequence_of_a_single_block() {
        let alpha = GaussianRational::from_ratio(2, 3);
        let j = ExactMatrix::jordan_block(4, &alpha);
        assert_eq!(j.weyr_sequence(&alpha), vec![4, 3, 2, 1, 0]);
    }

    #[test]
    fn weyr_sequence_of_a_scalar_matrix() {
        let alpha = gr(5);
        let m = ExactMatrix::scalar(2, &alpha);
        assert_eq!(m.weyr_sequence(&alpha), vec![2, 0, 0]);
    }

    #[test]
    fn weyr_sequence_of_mixed_blocks() {
        let alpha = gr(1);
        let j2 = ExactMatrix::jordan_block(2, &alpha);
        let j1 = ExactMatrix::jordan_block(1, &alpha);
        let m = ExactMatrix::block_diag(&[&j2, &j1]);
        assert_eq!(m.weyr_sequence(&alpha), vec![3, 1, 0, 0]);
        assert_eq!(m.jordan_block_sizes(&alpha), vec![2, 1]);
    }

    #[test]
    fn block_sizes_recover_every_partition_of_small_n() {
        let alpha = GaussianRational::new(ratio(1, 2), ratio(-1, 3));
        for n in 1..=7 {
            for partition in partitions(n) {
                let blocks: Vec<ExactMatrix> = partition
                    .iter()
                    .map(|&m| ExactMatrix::jordan_block(m, &alpha))
                    .collect();
                let refs: Vec<&ExactMatrix> = blocks.iter().collect();
                let m = ExactMatrix::block_diag(&refs);
                assert_eq!(m.jordan_block_sizes(&alpha), partition);
            }
        }
    }

    /// All partitions of n in decreasing order.
    fn partitions(n: usize) -> Vec<Vec<usize>> {
        fn go(n: usize, max: usize) -> Vec<Vec<usize>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for first in (1..=n.min(max)).rev() {
                for rest in go(n - first, first) {
                    let mut p = vec![first];
                    p.extend(rest);
                    out.push(p);
                }
            }
            out
        }
        go(n, n)
    }

    #[test]
    fn solve_matches_inverse() {
        let m = ExactMatrix::from_i64(&[&[1, 2], &[3, 5]]);
        let rhs = ExactMatrix::from_i64(&[&[1, 0, 2], &[0, 1, 7]]);
        let x = m.solve(&rhs).unwrap();
        assert_eq!(m.mul(&x), rhs);
    }
}
