//! Binary linear algebra over GF(2) and polarisation kernels.
//!
//! Matrices are stored row-major with each row packed into `u64` words. A
//! [`Kernel`] is a square matrix whose row `i` multiplies input `u_i`, so one
//! kernel application maps `u` to `x = u·G`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest kernel size accepted by [`Kernel`]; row masks are kept in `u64`.
pub const MAX_KERNEL_SIZE: usize = 32;

/// Largest dimension produced by [`kronecker_generator`].
pub const MAX_KRONECKER_DIM: usize = 4096;

/// A fixed-length vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    /// Unit vector with a single one at `index`.
    pub fn unit(len: usize, index: usize) -> Self {
        let mut v = BitVec::zeros(len);
        v.set(index, true);
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn to_bits(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(k, w)| k * 64 + w.trailing_zeros() as usize)
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

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

impl FromStr for BitVec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::KernelParse {
                    input: s.to_string(),
                    reason: format!("non-binary character {other:?}"),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BitVec::from_bits(&bits))
    }
}

/// A dense binary matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<BitVec>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        BitMatrix {
            cols,
            rows: vec![BitVec::zeros(cols); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = BitMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(rows: Vec<BitVec>) -> Result<Self> {
        let cols = match rows.first() {
            Some(r) => r.len(),
            None => return Err(Error::Empty("matrix has no rows")),
        };
        if cols == 0 {
            return Err(Error::Empty("matrix has no columns"));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::Dimension(format!(
                "row of length {} in a matrix with {cols} columns",
                bad.len()
            )));
        }
        Ok(BitMatrix { cols, rows })
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.rows[r].set(c, value)
    }

    pub fn row(&self, r: usize) -> &BitVec {
        &self.rows[r]
    }

    pub fn rows(&self) -> &[BitVec] {
        &self.rows
    }

    /// Row vector times matrix: `u·M`.
    pub fn left_mul(&self, u: &[bool]) -> Result<Vec<bool>> {
        if u.len() != self.num_rows() {
            return Err(Error::Dimension(format!(
                "vector of length {} times {}x{} matrix",
                u.len(),
                self.num_rows(),
                self.cols
            )));
        }
        let mut acc = BitVec::zeros(self.cols);
        for (row, _) in self.rows.iter().zip(u).filter(|(_, &b)| b) {
            acc.xor_assign(row);
        }
        Ok(acc.to_bits())
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &BitMatrix) -> BitMatrix {
        let (r2, c2) = (other.num_rows(), other.num_cols());
        let mut out = BitMatrix::zeros(self.num_rows() * r2, self.cols * c2);
        for i in 0..self.num_rows() {
            for j in (0..self.cols).filter(|&j| self.get(i, j)) {
                for p in 0..r2 {
                    for q in (0..c2).filter(|&q| other.get(p, q)) {
                        out.set(i * r2 + p, j * c2 + q, true);
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.rows.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitMatrix[{self}]")
    }
}

/// GF(2) row rank by Gaussian elimination.
pub fn rank(m: &BitMatrix) -> usize {
    rank_of(m.rows().to_vec())
}

fn rank_of(mut rows: Vec<BitVec>) -> usize {
    let mut rank = 0;
    while let Some(pos) = rows.iter().position(|r| !r.is_zero()) {
        let pivot = rows.swap_remove(pos);
        let col = pivot.first_one().expect("nonzero row");
        for r in rows.iter_mut().filter(|r| r.get(col)) {
            r.xor_assign(&pivot);
        }
        rank += 1;
    }
    rank
}

/// Whether `v` is a GF(2) combination of `basis`. The empty combination is
/// allowed, so the zero vector is always in the span.
pub fn in_span(v: &BitVec, basis: &[BitVec]) -> Result<bool> {
    if let Some(b) = basis.iter().find(|b| b.len() != v.len()) {
        return Err(Error::Dimension(format!(
            "vector of length {} against basis vector of length {}",
            v.len(),
            b.len()
        )));
    }
    // reduced echelon basis with distinct pivots
    let mut echelon: Vec<(usize, BitVec)> = Vec::new();
    for b in basis {
        let mut r = b.clone();
        reduce(&mut r, &echelon);
        if let Some(p) = r.first_one() {
            echelon.push((p, r));
        }
    }
    let mut target = v.clone();
    reduce(&mut target, &echelon);
    Ok(target.is_zero())
}

fn reduce(v: &mut BitVec, echelon: &[(usize, BitVec)]) {
    for (p, row) in echelon {
        if v.get(*p) {
            v.xor_assign(row);
        }
    }
}

/// Finds a subset of `vectors` (returned as a bit mask over their indices)
/// whose sum is `target`, or `None` when `target` is outside their span.
/// Vectors are bit masks of at most 64 coordinates; at most 64 vectors.
pub(crate) fn span_combination(target: u64, vectors: impl IntoIterator<Item = (usize, u64)>) -> Option<u64> {
    // (pivot bit, reduced vector, combination mask)
    let mut echelon: Vec<(u64, u64, u64)> = Vec::new();
    for (idx, v) in vectors {
        let (mut r, mut combo) = (v, 1u64 << idx);
        for &(p, row, c) in &echelon {
            if r & p != 0 {
                r ^= row;
                combo ^= c;
            }
        }
        if r != 0 {
            echelon.push((r & r.wrapping_neg(), r, combo));
        }
    }
    let (mut t, mut combo) = (target, 0u64);
    for &(p, row, c) in &echelon {
        if t & p != 0 {
            t ^= row;
            combo ^= c;
        }
    }
    (t == 0).then_some(combo)
}

/// An `l×l` polarisation kernel. The invertibility flag is always computed
/// from the matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Kernel {
    matrix: BitMatrix,
    rank: usize,
    // row i as a column bit mask
    row_masks: Vec<u64>,
}

impl Kernel {
    pub fn new(matrix: BitMatrix) -> Result<Self> {
        let l = matrix.num_rows();
        if matrix.num_cols() != l {
            return Err(Error::Dimension(format!(
                "kernel must be square, got {}x{}",
                l,
                matrix.num_cols()
            )));
        }
        if !(2..=MAX_KERNEL_SIZE).contains(&l) {
            return Err(Error::out_of_range("kernel size", l));
        }
        let row_masks = matrix
            .rows()
            .iter()
            .map(|r| (0..l).filter(|&j| r.get(j)).fold(0u64, |m, j| m | 1 << j))
            .collect();
        Ok(Kernel {
            rank: rank(&matrix),
            matrix,
            row_masks,
        })
    }

    /// Parses `"1000,1001,0101,1111"` style descriptors.
    pub fn parse(text: &str) -> Result<Self> {
        let err = |reason: String| Error::KernelParse {
            input: text.to_string(),
            reason,
        };
        let rows: Vec<&str> = text.trim().split(',').map(str::trim).collect();
        if rows.iter().any(|r| r.is_empty()) {
            return Err(err("empty row".into()));
        }
        let width = rows[0].len();
        if let Some(r) = rows.iter().find(|r| r.len() != width) {
            return Err(err(format!("ragged rows ({} vs {width} entries)", r.len())));
        }
        if rows.len() != width {
            return Err(err(format!("not square ({} rows of {width})", rows.len())));
        }
        let rows = rows
            .iter()
            .map(|r| r.parse::<BitVec>().map_err(|_| err(format!("non-binary row {r:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Kernel::new(BitMatrix::from_rows(rows)?).map_err(|e| err(e.to_string()))
    }

    pub fn identity(l: usize) -> Result<Self> {
        Kernel::new(BitMatrix::identity(l))
    }

    /// Arikan's `[1 0; 1 1]`.
    pub fn arikan() -> Self {
        Kernel::parse("10,11").expect("valid kernel")
    }

    pub fn size(&self) -> usize {
        self.matrix.num_rows()
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_invertible(&self) -> bool {
        self.rank == self.size()
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        (self.row_masks[row] >> col) & 1 == 1
    }

    pub(crate) fn row_mask(&self, row: usize) -> u64 {
        self.row_masks[row]
    }

    /// Column `col` restricted to rows `from..l`, as a mask with bit 0 at
    /// row `from`.
    pub(crate) fn column_tail(&self, col: usize, from: usize) -> u64 {
        (from..self.size())
            .filter(|&i| self.get(i, col))
            .fold(0u64, |m, i| m | 1 << (i - from))
    }

    /// Row strings, e.g. `["10", "11"]`.
    pub fn row_strings(&self) -> Vec<String> {
        self.matrix.rows().iter().map(|r| r.to_string()).collect()
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.matrix.fmt(f)
    }
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Kernel[{}]", self.matrix)
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kernel::parse(s)
    }
}

#[derive(Serialize, Deserialize)]
struct KernelJson {
    l: usize,
    rows: Vec<String>,
}

impl Serialize for Kernel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        KernelJson {
            l: self.size(),
            rows: self.row_strings(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Kernel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let json = KernelJson::deserialize(d)?;
        let k = Kernel::parse(&json.rows.join(",")).map_err(serde::de::Error::custom)?;
        if k.size() != json.l {
            return Err(serde::de::Error::custom(format!(
                "declared l = {} but rows describe a {}x{} kernel",
                json.l,
                k.size(),
                k.size()
            )));
        }
        Ok(k)
    }
}

/// Partial distances and the resulting rate exponent of a kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialDistances {
    pub distances: Vec<usize>,
    pub exponent: f64,
}

/// `d_i` is the Hamming distance from row `i` to the span of rows
/// `i+1..l` (the last row's distance is its weight); the exponent is
/// `(1/l)·Σ log_l d_i`.
pub fn partial_distances(k: &Kernel) -> Result<PartialDistances> {
    if !k.is_invertible() {
        return Err(Error::SingularKernel {
            rank: k.rank(),
            size: k.size(),
        });
    }
    let l = k.size();
    if l > 24 {
        return Err(Error::TooLarge {
            what: "kernel for partial distances",
            size: l as u128,
            limit: 24,
        });
    }
    let distances: Vec<usize> = (0..l)
        .map(|i| {
            let later = &k.row_masks[i + 1..];
            (0u64..1 << later.len())
                .map(|sel| {
                    let w = later
                        .iter()
                        .enumerate()
                        .filter(|(b, _)| (sel >> b) & 1 == 1)
                        .fold(0u64, |acc, (_, r)| acc ^ r);
                    (k.row_masks[i] ^ w).count_ones() as usize
                })
                .min()
                .expect("at least the empty combination")
        })
        .collect();
    let ln_l = (l as f64).ln();
    let exponent = distances.iter().map(|&d| (d as f64).ln()).sum::<f64>() / (l as f64 * ln_l);
    Ok(PartialDistances { distances, exponent })
}

/// Rate exponent for each kernel, in input order.
pub fn rate_exponent_table(family: &[Kernel]) -> Result<Vec<(Kernel, f64)>> {
    family
        .iter()
        .map(|k| partial_distances(k).map(|pd| (k.clone(), pd.exponent)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    All,
    LowerTriangularUnitDiagonal,
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(KernelFamily::All),
            "lower-triangular" | "lower-triangular-unit-diagonal" | "lt" => {
                Ok(KernelFamily::LowerTriangularUnitDiagonal)
            }
            other => Err(Error::out_of_range("kernel family", other)),
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelFamily::All => "all",
            KernelFamily::LowerTriangularUnitDiagonal => "lower-triangular",
        })
    }
}

/// Deterministic enumeration of a kernel family: binary counting over the
/// free entries taken in row-major order, first free entry most significant.
pub fn enumerate_kernels(l: usize, family: KernelFamily) -> Result<KernelIter> {
    if !(2..=MAX_KERNEL_SIZE).contains(&l) {
        return Err(Error::out_of_range("kernel size", l));
    }
    let free: Vec<(usize, usize)> = (0..l)
        .flat_map(|r| (0..l).map(move |c| (r, c)))
        .filter(|&(r, c)| match family {
            KernelFamily::All => true,
            KernelFamily::LowerTriangularUnitDiagonal => c < r,
        })
        .collect();
    if free.len() > 40 {
        return Err(Error::TooLarge {
            what: "kernel family (free entries)",
            size: free.len() as u128,
            limit: 40,
        });
    }
    Ok(KernelIter {
        l,
        family,
        total: 1u64 << free.len(),
        next: 0,
        free,
    })
}

pub struct KernelIter {
    l: usize,
    family: KernelFamily,
    free: Vec<(usize, usize)>,
    next: u64,
    total: u64,
}

impl KernelIter {
    pub fn total(&self) -> u64 {
        self.total
    }
}

impl Iterator for KernelIter {
    type Item = Kernel;

    fn next(&mut self) -> Option<Kernel> {
        if self.next >= self.total {
            return None;
        }
        let counter = self.next;
        self.next += 1;
        let mut m = match self.family {
            KernelFamily::All => BitMatrix::zeros(self.l, self.l),
            KernelFamily::LowerTriangularUnitDiagonal => BitMatrix::identity(self.l),
        };
        let f = self.free.len();
        for (pos, &(r, c)) in self.free.iter().enumerate() {
            if (counter >> (f - 1 - pos)) & 1 == 1 {
                m.set(r, c, true);
            }
        }
        Some(Kernel::new(m).expect("enumerated kernels are square and in range"))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rem = (self.total - self.next) as usize;
        (rem, Some(rem))
    }
}

impl ExactSizeIterator for KernelIter {}

/// `G^{⊗n}` over GF(2); `n = 0` gives the `1×1` identity.
pub fn kronecker_generator(k: &Kernel, n: u32) -> Result<BitMatrix> {
    let dim = (k.size() as u128).checked_pow(n).unwrap_or(u128::MAX);
    if dim > MAX_KRONECKER_DIM as u128 {
        return Err(Error::TooLarge {
            what: "Kronecker generator dimension",
            size: dim,
            limit: MAX_KRONECKER_DIM as u128,
        });
    }
    let mut g = BitMatrix::identity(1);
    for _ in 0..n {
        g = g.kron(k.matrix());
    }
    Ok(g)
}
