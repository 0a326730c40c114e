//! Bit-packed GF(2) vectors and matrices.
//!
//! Storage is 64-bit words, row-major. Padding bits past the logical length
//! are kept at zero so word-level popcounts and comparisons are exact.
//! Matrices can carry a sparse adjacency index (row -> columns, column ->
//! rows) built once; message-passing loops iterate the index, elimination
//! works on the dense words.

use std::fmt;

use crate::error::{Error, Result};

const WORD: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

#[inline]
fn tail_mask(len: usize) -> u64 {
    match len % WORD {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

/// Packed binary vector.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    words: Vec<u64>,
    len: usize,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; words_for(len)],
            len,
        }
    }

    pub fn from_indices(len: usize, ones: &[usize]) -> Self {
        let mut v = Self::zeros(len);
        for &i in ones {
            v.flip(i);
        }
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

    /// Parses a string of `0`/`1` characters, index 0 first.
    pub fn parse(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("not a bit: {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bools(&bits))
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
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "xor of vectors with different lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitVec) -> BitVec {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// Parity of the bitwise AND, i.e. the GF(2) inner product.
    pub fn dot(&self, other: &BitVec) -> bool {
        assert_eq!(self.len, other.len);
        dot_words(&self.words, &other.words)
    }

    /// Indices of set bits in ascending order.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut word = w;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let tz = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(wi * WORD + tz)
            })
        })
    }

    pub fn ones(&self) -> Vec<usize> {
        self.iter_ones().collect()
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    /// True when no bit at or beyond `len` is set.
    pub fn padding_is_clean(&self) -> bool {
        match self.words.last() {
            None => true,
            Some(&last) => last & !tail_mask(self.len) == 0,
        }
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// One line of `0`/`1` per row.
impl fmt::Display for Gf2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            writeln!(f, "{}", self.row_vec(r))?;
        }
        Ok(())
    }
}

#[inline]
fn dot_words(a: &[u64], b: &[u64]) -> bool {
    a.iter()
        .zip(b)
        .fold(0u32, |acc, (x, y)| acc ^ (x & y).count_ones())
        & 1
        == 1
}

#[inline]
fn xor_words(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

/// Row and column adjacency lists of a matrix's nonzeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseIndex {
    pub row_cols: Vec<Vec<usize>>,
    pub col_rows: Vec<Vec<usize>>,
}

/// Dense GF(2) matrix, row-major, with an optional sparse index.
#[derive(Clone)]
pub struct Gf2Matrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
    sparse: Option<SparseIndex>,
}

impl PartialEq for Gf2Matrix {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.data == other.data
    }
}

impl Eq for Gf2Matrix {}

impl fmt::Debug for Gf2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Gf2Matrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {}", self.row_vec(r))?;
        }
        Ok(())
    }
}

impl Gf2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
            sparse: None,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from the column support of each row.
    pub fn from_row_supports(rows: usize, cols: usize, supports: &[Vec<usize>]) -> Self {
        assert_eq!(supports.len(), rows);
        let mut m = Self::zeros(rows, cols);
        for (r, cs) in supports.iter().enumerate() {
            for &c in cs {
                m.set(r, c, true);
            }
        }
        m
    }

    /// Builds a matrix from rows given as `0`/`1` strings.
    pub fn parse_rows(rows: &[&str]) -> Result<Self> {
        let vecs = rows
            .iter()
            .map(|r| BitVec::parse(r))
            .collect::<Result<Vec<_>>>()?;
        let cols = vecs.first().map_or(0, BitVec::len);
        let mut m = Self::zeros(vecs.len(), cols);
        for (r, v) in vecs.iter().enumerate() {
            if v.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: v.len(),
                });
            }
            m.row_words_mut(r).copy_from_slice(v.words());
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols);
        (self.data[r * self.stride + c / WORD] >> (c % WORD)) & 1 == 1
    }

    /// Sets one entry. Drops any sparse index, which would go stale.
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols);
        self.sparse = None;
        let w = &mut self.data[r * self.stride + c / WORD];
        let mask = 1u64 << (c % WORD);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    #[inline]
    fn row_words_mut(&mut self, r: usize) -> &mut [u64] {
        self.sparse = None;
        &mut self.data[r * self.stride..(r + 1) * self.stride]
    }

    pub fn row_vec(&self, r: usize) -> BitVec {
        BitVec {
            words: self.row_words(r).to_vec(),
            len: self.cols,
        }
    }

    pub fn col_vec(&self, c: usize) -> BitVec {
        let mut v = BitVec::zeros(self.rows);
        for r in 0..self.rows {
            if self.get(r, c) {
                v.set(r, true);
            }
        }
        v
    }

    pub fn row_weight(&self, r: usize) -> usize {
        self.row_words(r).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn col_weight(&self, c: usize) -> usize {
        (0..self.rows).filter(|&r| self.get(r, c)).count()
    }

    pub fn col_weights(&self) -> Vec<usize> {
        (0..self.cols).map(|c| self.col_weight(c)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Builds (or rebuilds) the sparse adjacency index from dense storage.
    pub fn build_sparse_index(&mut self) {
        let mut row_cols = vec![Vec::new(); self.rows];
        let mut col_rows = vec![Vec::new(); self.cols];
        for (r, rc) in row_cols.iter_mut().enumerate() {
            let row = BitVec {
                words: self.row_words(r).to_vec(),
                len: self.cols,
            };
            for c in row.iter_ones() {
                rc.push(c);
                col_rows[c].push(r);
            }
        }
        self.sparse = Some(SparseIndex { row_cols, col_rows });
    }

    pub fn with_sparse_index(mut self) -> Self {
        self.build_sparse_index();
        self
    }

    pub fn sparse_index(&self) -> Option<&SparseIndex> {
        self.sparse.as_ref()
    }

    /// Rows touching column `c`, from the index when present.
    pub fn col_support(&self, c: usize) -> Vec<usize> {
        match &self.sparse {
            Some(idx) => idx.col_rows[c].clone(),
            None => (0..self.rows).filter(|&r| self.get(r, c)).collect(),
        }
    }

    /// Columns touched by row `r`, from the index when present.
    pub fn row_support(&self, r: usize) -> Vec<usize> {
        match &self.sparse {
            Some(idx) => idx.row_cols[r].clone(),
            None => self.row_vec(r).ones(),
        }
    }

    pub fn transpose(&self) -> Gf2Matrix {
        let mut t = Gf2Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in self.row_vec(r).iter_ones() {
                t.set(c, r, true);
            }
        }
        t
    }

    /// Matrix product over GF(2).
    pub fn mul(&self, other: &Gf2Matrix) -> Result<Gf2Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Gf2Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let row = self.row_vec(r);
            for k in row.iter_ones() {
                let src = other.row_words(k).to_vec();
                xor_words(out.row_words_mut(r), &src);
            }
        }
        Ok(out)
    }

    /// Horizontal block concatenation `[self | other]`.
    pub fn hstack(&self, other: &Gf2Matrix) -> Result<Gf2Matrix> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: other.rows,
            });
        }
        let mut out = Gf2Matrix::zeros(self.rows, self.cols + other.cols);
        for r in 0..self.rows {
            for c in self.row_vec(r).iter_ones() {
                out.set(r, c, true);
            }
            for c in other.row_vec(r).iter_ones() {
                out.set(r, self.cols + c, true);
            }
        }
        Ok(out)
    }

    /// `M · v` over GF(2).
    pub fn matvec(&self, v: &BitVec) -> Result<BitVec> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        let mut out = BitVec::zeros(self.rows);
        for r in 0..self.rows {
            if dot_words(self.row_words(r), v.words()) {
                out.set(r, true);
            }
        }
        Ok(out)
    }

    pub fn rank(&self) -> usize {
        row_reduce(self, &(0..self.cols).collect::<Vec<_>>())
            .expect("natural order is a permutation")
            .rank
    }
}

/// Result of Gauss-Jordan elimination under a column order.
#[derive(Clone, Debug)]
pub struct RowEchelon {
    /// Reduced row-echelon form with respect to the given column order.
    pub reduced: Gf2Matrix,
    /// Pivot column of each of the first `rank` rows.
    pub pivots: Vec<usize>,
    pub rank: usize,
    /// Accumulated row operations: `transform · M == reduced`.
    pub transform: Gf2Matrix,
}

impl RowEchelon {
    /// Applies the accumulated row operations to a right-hand side.
    pub fn transform_rhs(&self, s: &BitVec) -> Result<BitVec> {
        self.transform.matvec(s)
    }
}

fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: order.len(),
        });
    }
    let mut seen = vec![false; n];
    for &c in order {
        if c >= n || std::mem::replace(&mut seen[c], true) {
            return Err(Error::Parse(format!(
                "column order is not a permutation of 0..{n}"
            )));
        }
    }
    Ok(())
}

/// Gauss-Jordan elimination visiting columns in `column_order`.
///
/// Pivots are taken greedily: the first column in the order that is
/// independent of the previous pivots becomes the next pivot.
pub fn row_reduce(m: &Gf2Matrix, column_order: &[usize]) -> Result<RowEchelon> {
    check_permutation(column_order, m.cols)?;
    let mut a = m.clone();
    a.sparse = None;
    let mut t = Gf2Matrix::identity(m.rows);
    let mut pivots = Vec::new();
    let mut rank = 0;

    for &c in column_order {
        if rank == a.rows {
            break;
        }
        let wi = c / WORD;
        let mask = 1u64 << (c % WORD);
        let Some(p) = (rank..a.rows).find(|&r| a.data[r * a.stride + wi] & mask != 0) else {
            continue;
        };
        if p != rank {
            swap_rows(&mut a, p, rank);
            swap_rows(&mut t, p, rank);
        }
        let pivot_row = a.row_words(rank).to_vec();
        let pivot_t = t.row_words(rank).to_vec();
        for r in 0..a.rows {
            if r != rank && a.data[r * a.stride + wi] & mask != 0 {
                xor_words(&mut a.data[r * a.stride..(r + 1) * a.stride], &pivot_row);
                xor_words(&mut t.data[r * t.stride..(r + 1) * t.stride], &pivot_t);
            }
        }
        pivots.push(c);
        rank += 1;
    }

    Ok(RowEchelon {
        reduced: a,
        pivots,
        rank,
        transform: t,
    })
}

fn swap_rows(m: &mut Gf2Matrix, a: usize, b: usize) {
    if a == b {
        return;
    }
    let s = m.stride;
    let (lo, hi) = (a.min(b), a.max(b));
    let (head, tail) = m.data.split_at_mut(hi * s);
    head[lo * s..(lo + 1) * s].swap_with_slice(&mut tail[..s]);
}

/// Finds some `x` with `M · x = s`, or `None` when `s` is outside the
/// column span of `M`.
pub fn solve_in_image(m: &Gf2Matrix, s: &BitVec) -> Result<Option<BitVec>> {
    if s.len() != m.rows {
        return Err(Error::DimensionMismatch {
            expected: m.rows,
            found: s.len(),
        });
    }
    let ech = row_reduce(m, &(0..m.cols).collect::<Vec<_>>())?;
    let rhs = ech.transform_rhs(s)?;
    if (ech.rank..m.rows).any(|r| rhs.get(r)) {
        return Ok(None);
    }
    let mut x = BitVec::zeros(m.cols);
    for (r, &c) in ech.pivots.iter().enumerate() {
        if rhs.get(r) {
            x.set(c, true);
        }
    }
    Ok(Some(x))
}
