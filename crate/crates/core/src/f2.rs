//! Dense matrices over GF(2) with bit-packed rows.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

/// A dense `rows x cols` matrix over GF(2).
///
/// Rows are stored contiguously as packed `u64` words; bit `c % 64` of word
/// `c / 64` of a row holds column `c`. Column vectors are `n x 1` matrices.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct F2Matrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl F2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(WORD_BITS);
        Self {
            rows,
            cols,
            words_per_row,
            bits: vec![0; rows * words_per_row],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from rows of 0/1 entries. All rows must have equal length.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            for (j, &b) in row.iter().enumerate() {
                match b {
                    0 => {}
                    1 => m.set(i, j, true),
                    other => {
                        return Err(Error::InvalidArgument(format!(
                            "entry ({i},{j}) is {other}, expected 0 or 1"
                        )))
                    }
                }
            }
        }
        Ok(m)
    }

    /// A column vector with the given 0/1 entries.
    pub fn column(entries: &[u8]) -> Result<Self> {
        let rows: Vec<[u8; 1]> = entries.iter().map(|&b| [b]).collect();
        if entries.is_empty() {
            return Ok(Self::zeros(0, 1));
        }
        Self::from_rows(&rows)
    }

    /// Uniformly random matrix.
    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if rng.random::<bool>() {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    /// Uniformly random invertible `n x n` matrix (rejection sampling).
    pub fn random_full_rank<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        loop {
            let m = Self::random(n, n, rng);
            if m.rank() == n {
                return m;
            }
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(
            r < self.rows && c < self.cols,
            "index ({r},{c}) out of bounds"
        );
        let w = self.bits[r * self.words_per_row + c / WORD_BITS];
        (w >> (c % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(
            r < self.rows && c < self.cols,
            "index ({r},{c}) out of bounds"
        );
        let w = &mut self.bits[r * self.words_per_row + c / WORD_BITS];
        let mask = 1u64 << (c % WORD_BITS);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    fn row_words(&self, r: usize) -> &[u64] {
        &self.bits[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// Indices of rows holding at least one nonzero entry.
    pub fn row_support(&self) -> Vec<usize> {
        (0..self.rows)
            .filter(|&r| self.row_words(r).iter().any(|&w| w != 0))
            .collect()
    }

    /// Rank over GF(2) by Gaussian elimination.
    ///
    /// Works column by column on a scratch copy: each column picks the first
    /// remaining row with a one as pivot and clears that column from every
    /// other remaining row with word-wide XORs.
    pub fn rank(&self) -> usize {
        let wpr = self.words_per_row;
        let mut work = self.bits.clone();
        let mut rank = 0;
        for c in 0..self.cols {
            if rank == self.rows {
                break;
            }
            let word = c / WORD_BITS;
            let mask = 1u64 << (c % WORD_BITS);
            let Some(pivot) = (rank..self.rows).find(|&r| work[r * wpr + word] & mask != 0) else {
                continue;
            };
            if pivot != rank {
                for w in 0..wpr {
                    work.swap(pivot * wpr + w, rank * wpr + w);
                }
            }
            for r in rank + 1..self.rows {
                if work[r * wpr + word] & mask != 0 {
                    // Words below `word` are already zero in the pivot row.
                    for w in word..wpr {
                        let p = work[rank * wpr + w];
                        work[r * wpr + w] ^= p;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    /// Matrix product over GF(2).
    pub fn mul(&self, rhs: &F2Matrix) -> Result<F2Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::InvalidArgument(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = F2Matrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                if self.get(r, k) {
                    let src = rhs.row_words(k).to_vec();
                    let dst = &mut out.bits[r * out.words_per_row..(r + 1) * out.words_per_row];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d ^= s;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Horizontal concatenation `[a, b, ...]`. All blocks need the same row count.
    pub fn hconcat(blocks: &[&F2Matrix]) -> Result<F2Matrix> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        if let Some(bad) = blocks.iter().find(|b| b.rows != rows) {
            return Err(Error::InvalidArgument(format!(
                "hconcat row mismatch: {} vs {rows}",
                bad.rows
            )));
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = F2Matrix::zeros(rows, cols);
        let mut offset = 0;
        for b in blocks {
            for r in 0..b.rows {
                for c in 0..b.cols {
                    if b.get(r, c) {
                        out.set(r, offset + c, true);
                    }
                }
            }
            offset += b.cols;
        }
        Ok(out)
    }

    /// Copies `block` into `self` with its top-left corner at `(row, col)`.
    pub fn place(&mut self, row: usize, col: usize, block: &F2Matrix) -> Result<()> {
        if row + block.rows > self.rows || col + block.cols > self.cols {
            return Err(Error::InvalidArgument(format!(
                "{}x{} block at ({row},{col}) does not fit in {}x{}",
                block.rows, block.cols, self.rows, self.cols
            )));
        }
        for r in 0..block.rows {
            for c in 0..block.cols {
                self.set(row + r, col + c, block.get(r, c));
            }
        }
        Ok(())
    }

    /// Rows `start..end` as a new matrix.
    pub fn row_slice(&self, start: usize, end: usize) -> F2Matrix {
        assert!(start <= end && end <= self.rows);
        F2Matrix {
            rows: end - start,
            cols: self.cols,
            words_per_row: self.words_per_row,
            bits: self.bits[start * self.words_per_row..end * self.words_per_row].to_vec(),
        }
    }
}

impl fmt::Debug for F2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "F2Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                write!(f, "{}", u8::from(self.get(r, c)))?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// The `q x q` down-shift matrix raised to the power `s`.
///
/// Left-multiplying a column vector moves every entry `s` positions down;
/// the lowest `s` entries fall off and zeros enter at the top.
pub fn shift_matrix(q: usize, s: usize) -> Result<F2Matrix> {
    if s > q {
        return Err(Error::InvalidArgument(format!(
            "shift {s} exceeds dimension {q}"
        )));
    }
    let mut m = F2Matrix::zeros(q, q);
    for r in s..q {
        m.set(r, r - s, true);
    }
    Ok(m)
}

/// Rank over GF(2); free-function form of [`F2Matrix::rank`].
pub fn rank_f2(m: &F2Matrix) -> usize {
    m.rank()
}
