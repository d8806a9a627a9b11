//! Dense packed linear algebra over GF(2).
//!
//! [`BitVec`] stores bits in `u64` words, bit `i` at word `i / 64`, position
//! `i % 64`. Bits past `len` are kept zero so that word-level equality,
//! hashing and popcounts need no masking.
//!
//! [`gf2_solve`] is a Gauss-Jordan eliminator with leftmost-column,
//! topmost-row pivoting. Elimination itself is deterministic; the only
//! randomness is the fill of free (non-pivot) variables, drawn in ascending
//! column order, one fair bit each.

use std::fmt;
use std::ops::{BitAnd, BitOr, BitXor, BitXorAssign};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

// ============================================================================
// BitVec
// ============================================================================

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self {
            len,
            words: vec![u64::MAX; words_for(len)],
        };
        v.clear_tail();
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Builds a vector from raw words; bits past `len` are discarded.
    pub fn from_words(len: usize, mut words: Vec<u64>) -> Self {
        words.resize(words_for(len), 0);
        let mut v = Self { len, words };
        v.clear_tail();
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Parity of `self AND other`, i.e. the GF(2) inner product.
    pub fn dot(&self, other: &BitVec) -> bool {
        debug_assert_eq!(self.len, other.len);
        let acc = self
            .words
            .iter()
            .zip(&other.words)
            .fold(0u64, |acc, (a, b)| acc ^ (a & b));
        acc.count_ones() & 1 == 1
    }

    /// `true` when every set bit of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BitVec) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    None
                } else {
                    let tz = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    Some(wi * WORD_BITS + tz)
                }
            })
        })
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD_BITS;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    fn zip_words(&self, other: &BitVec, f: impl Fn(u64, u64) -> u64) -> BitVec {
        assert_eq!(self.len, other.len, "bit vector length mismatch");
        BitVec {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

impl BitXor for &BitVec {
    type Output = BitVec;
    fn bitxor(self, rhs: &BitVec) -> BitVec {
        self.zip_words(rhs, |a, b| a ^ b)
    }
}

impl BitAnd for &BitVec {
    type Output = BitVec;
    fn bitand(self, rhs: &BitVec) -> BitVec {
        self.zip_words(rhs, |a, b| a & b)
    }
}

impl BitOr for &BitVec {
    type Output = BitVec;
    fn bitor(self, rhs: &BitVec) -> BitVec {
        self.zip_words(rhs, |a, b| a | b)
    }
}

impl BitXorAssign<&BitVec> for BitVec {
    fn bitxor_assign(&mut self, rhs: &BitVec) {
        assert_eq!(self.len, rhs.len, "bit vector length mismatch");
        for (a, b) in self.words.iter_mut().zip(&rhs.words) {
            *a ^= b;
        }
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec[{self}]")
    }
}

impl FromStr for BitVec {
    type Err = Error;

    /// Parses a string of `0`/`1` characters, index 0 first.
    fn from_str(s: &str) -> Result<Self> {
        let mut v = BitVec::zeros(s.len());
        for (i, c) in s.bytes().enumerate() {
            match c {
                b'0' => {}
                b'1' => v.set(i, true),
                other => {
                    return Err(Error::invalid(format!(
                        "invalid bit character {:?} at position {i}",
                        other as char
                    )))
                }
            }
        }
        Ok(v)
    }
}

impl Serialize for BitVec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitVec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

// ============================================================================
// BitMatrix
// ============================================================================

/// Row-major binary matrix. Every row has exactly `cols` bits.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<BitVec>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            cols,
            rows: vec![BitVec::zeros(cols); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(cols: usize, rows: Vec<BitVec>) -> Result<Self> {
        for row in &rows {
            Error::check_dim("matrix row length", cols, row.len())?;
        }
        Ok(Self { cols, rows })
    }

    /// Parses rows given as `0`/`1` strings. An empty list yields a 0×0 matrix.
    pub fn from_bitstrings<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        let parsed = rows
            .iter()
            .map(|s| s.as_ref().parse::<BitVec>())
            .collect::<Result<Vec<_>>>()?;
        let cols = parsed.first().map_or(0, BitVec::len);
        Self::from_rows(cols, parsed)
    }

    pub fn to_bitstrings(&self) -> Vec<String> {
        self.rows.iter().map(ToString::to_string).collect()
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &BitVec {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[BitVec] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].get(j)
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.rows[i].set(j, value);
    }

    pub fn flip(&mut self, i: usize, j: usize) {
        self.rows[i].flip(j);
    }

    pub fn set_row(&mut self, i: usize, row: BitVec) -> Result<()> {
        Error::check_dim("matrix row length", self.cols, row.len())?;
        self.rows[i] = row;
        Ok(())
    }

    pub fn row_weight(&self, i: usize) -> usize {
        self.rows[i].count_ones()
    }

    /// Number of rows each column feeds (column popcounts).
    pub fn column_weights(&self) -> Vec<usize> {
        let mut out = vec![0; self.cols];
        for row in &self.rows {
            for j in row.iter_ones() {
                out[j] += 1;
            }
        }
        out
    }

    /// Stable 64-bit digest of shape and contents.
    pub fn content_hash(&self) -> u64 {
        let mut h = crate::seed::derive(self.rows.len() as u64, self.cols as u64);
        for row in &self.rows {
            for &w in row.words() {
                h = crate::seed::derive(h, w);
            }
        }
        h
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows.len(), self.cols)?;
        for row in &self.rows {
            writeln!(f, "  {row}")?;
        }
        write!(f, "]")
    }
}

/// `result[i] = parity(row_i AND v)`.
pub fn matvec_gf2(m: &BitMatrix, v: &BitVec) -> Result<BitVec> {
    Error::check_dim("matvec vector length", m.n_cols(), v.len())?;
    let mut out = BitVec::zeros(m.n_rows());
    for (i, row) in m.rows().iter().enumerate() {
        if row.dot(v) {
            out.set(i, true);
        }
    }
    Ok(out)
}

// ============================================================================
// Solver
// ============================================================================

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Unique,
    Underdetermined,
    Inconsistent,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gf2Solution {
    pub status: SolveStatus,
    /// Present unless the system is inconsistent.
    pub assignment: Option<BitVec>,
    pub free_var_count: usize,
}

impl Gf2Solution {
    pub fn is_consistent(&self) -> bool {
        self.status != SolveStatus::Inconsistent
    }
}

/// Solves `constraints · x = rhs` over GF(2).
///
/// The inputs are not modified; elimination runs on a packed working copy.
/// Free variables are filled with independent fair bits from `rng`, in
/// ascending column order. An inconsistent system consumes no randomness.
pub fn gf2_solve<R: Rng + ?Sized>(
    constraints: &BitMatrix,
    rhs: &BitVec,
    rng: &mut R,
) -> Result<Gf2Solution> {
    Error::check_dim("solver rhs length", constraints.n_rows(), rhs.len())?;
    let cols = constraints.n_cols();
    if cols == 0 {
        return Err(Error::invalid("constraint system has no variables"));
    }
    let n_rows = constraints.n_rows();
    let wpr = words_for(cols);

    let mut work: Vec<u64> = Vec::with_capacity(n_rows * wpr);
    for row in constraints.rows() {
        work.extend_from_slice(row.words());
    }
    let mut b: Vec<bool> = rhs.iter().collect();

    let mut pivot_cols: Vec<usize> = Vec::with_capacity(cols.min(n_rows));
    let mut r = 0;
    for c in 0..cols {
        if r == n_rows {
            break;
        }
        let w = c / WORD_BITS;
        let mask = 1u64 << (c % WORD_BITS);
        let Some(p) = (r..n_rows).find(|&p| work[p * wpr + w] & mask != 0) else {
            continue;
        };
        if p != r {
            for k in 0..wpr {
                work.swap(p * wpr + k, r * wpr + k);
            }
            b.swap(p, r);
        }
        // Rows at or below r are zero left of column c, so only words from
        // `w` on can change.
        for i in 0..n_rows {
            if i != r && work[i * wpr + w] & mask != 0 {
                for k in w..wpr {
                    let src = work[r * wpr + k];
                    work[i * wpr + k] ^= src;
                }
                b[i] ^= b[r];
            }
        }
        pivot_cols.push(c);
        r += 1;
    }
    let rank = r;

    if b[rank..].iter().any(|&bit| bit) {
        return Ok(Gf2Solution {
            status: SolveStatus::Inconsistent,
            assignment: None,
            free_var_count: cols - rank,
        });
    }

    let mut x = BitVec::zeros(cols);
    let mut next_pivot = pivot_cols.iter().peekable();
    for c in 0..cols {
        if next_pivot.peek() == Some(&&c) {
            next_pivot.next();
        } else if rng.random::<bool>() {
            x.set(c, true);
        }
    }
    // Pivot rows are zero in every other pivot column, and pivot bits of x
    // are still zero here.
    for (k, &c) in pivot_cols.iter().enumerate() {
        let row = &work[k * wpr..(k + 1) * wpr];
        let acc = row
            .iter()
            .zip(x.words())
            .fold(0u64, |acc, (a, bx)| acc ^ (a & bx));
        let value = b[k] ^ (acc.count_ones() & 1 == 1);
        x.set(c, value);
    }

    let free = cols - rank;
    Ok(Gf2Solution {
        status: if free == 0 {
            SolveStatus::Unique
        } else {
            SolveStatus::Underdetermined
        },
        assignment: Some(x),
        free_var_count: free,
    })
}
