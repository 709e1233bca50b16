//! Windowed exact vectors and matrices.
//!
//! Indices are absolute: a [`WindowVector`] lives on `[lo, hi)` and an
//! [`RMatrix`] maps its column window into its row window. Empty windows are
//! legal and behave as zero objects.

use serde::{Deserialize, Serialize};

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is singular")]
    Singular,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("bad block layout: {0}")]
    Layout(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowVector {
    pub lo: usize,
    pub coords: Vec<Rational>,
}

impl WindowVector {
    pub fn new(lo: usize, coords: Vec<Rational>) -> Self {
        WindowVector { lo, coords }
    }

    pub fn zeros(lo: usize, len: usize) -> Self {
        WindowVector { lo, coords: vec![Rational::zero(); len] }
    }

    pub fn from_ints(lo: usize, v: &[i64]) -> Self {
        WindowVector { lo, coords: v.iter().map(|&x| Rational::from_int(x)).collect() }
    }

    pub fn hi(&self) -> usize {
        self.lo + self.coords.len()
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Coordinate at absolute index `i`; zero outside the window.
    pub fn get(&self, i: usize) -> Rational {
        if i >= self.lo && i < self.hi() {
            self.coords[i - self.lo].clone()
        } else {
            Rational::zero()
        }
    }

    pub fn sup_norm(&self) -> Rational {
        self.coords.iter().map(|c| c.abs()).fold(Rational::zero(), Rational::max)
    }

    pub fn l1_norm(&self) -> Rational {
        self.coords.iter().map(|c| c.abs()).sum()
    }

    pub fn dot(&self, other: &WindowVector) -> Rational {
        let lo = self.lo.max(other.lo);
        let hi = self.hi().min(other.hi());
        (lo..hi)
            .map(|i| &self.coords[i - self.lo] * &other.coords[i - other.lo])
            .sum()
    }

    /// Restriction to `[lo, hi)`, zero-filled where the window does not reach.
    pub fn restrict(&self, lo: usize, hi: usize) -> WindowVector {
        WindowVector { lo, coords: (lo..hi).map(|i| self.get(i)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    pub fn scale(&self, s: &Rational) -> WindowVector {
        WindowVector { lo: self.lo, coords: self.coords.iter().map(|c| c * s).collect() }
    }
}

/// Dense row-major matrix from `ℓ∞[col_lo, col_lo+cols)` to `ℓ∞[row_lo, row_lo+rows)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RMatrix {
    pub row_lo: usize,
    pub col_lo: usize,
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RMatrix { row_lo: 0, col_lo: 0, rows, cols, data: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Rational::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinalgError::Dimension("ragged rows".into()));
        }
        Ok(RMatrix { row_lo: 0, col_lo: 0, rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_int_rows(rows: &[&[i64]]) -> Self {
        RMatrix::from_rows(
            rows.iter().map(|r| r.iter().map(|&x| Rational::from_int(x)).collect()).collect(),
        )
        .expect("rectangular literal")
    }

    /// Columns given as vectors of equal length.
    pub fn from_cols(cols: &[Vec<Rational>], rows: usize) -> Self {
        let mut m = RMatrix::zeros(rows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), rows, "column length");
            for (i, v) in col.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    pub fn diag(d: &[Rational]) -> Self {
        let mut m = RMatrix::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m.set(i, i, v.clone());
        }
        m
    }

    pub fn with_windows(mut self, row_lo: usize, col_lo: usize) -> Self {
        self.row_lo = row_lo;
        self.col_lo = col_lo;
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Entry by local (0-based) position.
    pub fn at(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vec(&self, i: usize) -> Vec<Rational> {
        self.row(i).to_vec()
    }

    pub fn col_vec(&self, j: usize) -> Vec<Rational> {
        (0..self.rows).map(|i| self.at(i, j).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        (0..self.rows).map(|i| self.row_vec(i)).collect()
    }

    pub fn transpose(&self) -> RMatrix {
        let mut t = RMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.at(i, j).clone());
            }
        }
        t.with_windows(self.col_lo, self.row_lo)
    }

    pub fn scale(&self, s: &Rational) -> RMatrix {
        RMatrix { data: self.data.iter().map(|x| x * s).collect(), ..self.clone() }
    }

    pub fn add(&self, other: &RMatrix) -> Result<RMatrix, LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::Dimension(format!(
                "{}x{} + {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(RMatrix {
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
            ..self.clone()
        })
    }

    pub fn sub(&self, other: &RMatrix) -> Result<RMatrix, LinalgError> {
        self.add(&other.scale(&-Rational::one()))
    }

    /// Product `self · other`; windows are taken from the outer factors.
    pub fn mul(&self, other: &RMatrix) -> Result<RMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::Dimension(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = RMatrix::zeros(self.rows, other.cols).with_windows(self.row_lo, other.col_lo);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.at(k, j);
                    if !b.is_zero() {
                        let cur = &out.data[i * other.cols + j] + &(a * b);
                        out.data[i * other.cols + j] = cur;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Apply to a plain coefficient vector.
    pub fn mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(v.len(), self.cols, "vector length");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, _)| !a.is_zero())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Apply to a windowed vector; coordinates outside the column window are ignored.
    pub fn apply(&self, v: &WindowVector) -> WindowVector {
        let x: Vec<Rational> = (self.col_lo..self.col_lo + self.cols).map(|i| v.get(i)).collect();
        WindowVector::new(self.row_lo, self.mul_vec(&x))
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let v = self.at(i, j);
                    if i == j {
                        v.is_one()
                    } else {
                        v.is_zero()
                    }
                })
            })
    }

    pub fn row_l1(&self, i: usize) -> Rational {
        self.row(i).iter().map(|x| x.abs()).sum()
    }

    /// Local submatrix `[r0, r1) × [c0, c1)`.
    pub fn submatrix(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> RMatrix {
        let mut m = RMatrix::zeros(r1 - r0, c1 - c0).with_windows(self.row_lo + r0, self.col_lo + c0);
        for i in r0..r1 {
            for j in c0..c1 {
                m.set(i - r0, j - c0, self.at(i, j).clone());
            }
        }
        m
    }

    pub fn select_rows(&self, idx: &[usize]) -> RMatrix {
        RMatrix::from_rows(idx.iter().map(|&i| self.row_vec(i)).collect())
            .unwrap_or_else(|_| RMatrix::zeros(0, self.cols))
            .with_cols(self.cols)
    }

    fn with_cols(mut self, cols: usize) -> RMatrix {
        if self.rows == 0 {
            self.cols = cols;
        }
        self
    }

    pub fn stack(&self, other: &RMatrix) -> Result<RMatrix, LinalgError> {
        if self.cols != other.cols {
            return Err(LinalgError::Dimension("stack column count".into()));
        }
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        Ok(RMatrix { row_lo: self.row_lo, col_lo: self.col_lo, rows: self.rows + other.rows, cols: self.cols, data })
    }

    pub fn nonzero_count(&self) -> usize {
        self.data.iter().filter(|x| !x.is_zero()).count()
    }

    /// Nonzero entries as absolute `(row, col, value)` triplets in row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, Rational)> {
        let mut out = Vec::new();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let v = self.at(i, j);
                if !v.is_zero() {
                    out.push((self.row_lo + i, self.col_lo + j, v.clone()));
                }
            }
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct RMatrixRepr {
    row_lo: usize,
    col_lo: usize,
    cols: usize,
    rows: Vec<Vec<Rational>>,
}

impl Serialize for RMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RMatrixRepr { row_lo: self.row_lo, col_lo: self.col_lo, cols: self.cols, rows: self.to_rows() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = RMatrixRepr::deserialize(d)?;
        if r.rows.iter().any(|row| row.len() != r.cols) {
            return Err(serde::de::Error::custom("row length differs from cols"));
        }
        let rows = r.rows.len();
        Ok(RMatrix { row_lo: r.row_lo, col_lo: r.col_lo, rows, cols: r.cols, data: r.rows.into_iter().flatten().collect() })
    }
}

/// Maximum row ℓ₁-norm, i.e. the ℓ∞ → ℓ∞ operator norm. Empty matrices give 0.
pub fn op_norm_inf(m: &RMatrix) -> Rational {
    (0..m.rows()).map(|i| m.row_l1(i)).fold(Rational::zero(), Rational::max)
}

/// A sign vector attaining `op_norm_inf`: `‖M s‖∞ = op_norm_inf(M)`.
pub fn op_norm_witness(m: &RMatrix) -> Vec<Rational> {
    let best = (0..m.rows()).max_by(|&a, &b| m.row_l1(a).cmp(&m.row_l1(b)).then(b.cmp(&a)));
    match best {
        None => vec![Rational::one(); m.cols()],
        Some(i) => m
            .row(i)
            .iter()
            .map(|x| if x.is_negative() { -Rational::one() } else { Rational::one() })
            .collect(),
    }
}

/// Cut points `0 = k_0 < k_1 < ... < k_B = n` of the finest contiguous block
/// decomposition of a square matrix.
pub fn detect_blocks(m: &RMatrix) -> Vec<usize> {
    let n = m.rows();
    let mut reach: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in 0..n {
            if !m.at(i, j).is_zero() {
                let hi = i.max(j);
                let lo = i.min(j);
                if reach[lo] < hi {
                    reach[lo] = hi;
                }
            }
        }
    }
    let mut cuts = vec![0];
    let mut cur = 0;
    for (i, &r) in reach.iter().enumerate() {
        cur = cur.max(r);
        if cur == i {
            cuts.push(i + 1);
        }
    }
    cuts
}

fn gauss_jordan_inverse(m: &RMatrix) -> Result<RMatrix, LinalgError> {
    let n = m.rows();
    let mut a = m.clone();
    let mut inv = RMatrix::identity(n);
    for col in 0..n {
        let piv = (col..n).find(|&r| !a.at(r, col).is_zero()).ok_or(LinalgError::Singular)?;
        if piv != col {
            for j in 0..n {
                a.data.swap(piv * n + j, col * n + j);
                inv.data.swap(piv * n + j, col * n + j);
            }
        }
        let p = a.at(col, col).recip();
        for j in 0..n {
            let v = a.at(col, j) * &p;
            a.set(col, j, v);
            let w = inv.at(col, j) * &p;
            inv.set(col, j, w);
        }
        for r in 0..n {
            if r == col || a.at(r, col).is_zero() {
                continue;
            }
            let f = a.at(r, col).clone();
            for j in 0..n {
                if !a.at(col, j).is_zero() {
                    let v = a.at(r, j) - &(&f * a.at(col, j));
                    a.set(r, j, v);
                }
                if !inv.at(col, j).is_zero() {
                    let w = inv.at(r, j) - &(&f * inv.at(col, j));
                    inv.set(r, j, w);
                }
            }
        }
    }
    Ok(inv)
}

/// Exact inverse. Contiguous diagonal blocks are inverted independently.
pub fn invert(m: &RMatrix) -> Result<RMatrix, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::Dimension(format!("invert {}x{}", m.rows(), m.cols())));
    }
    let n = m.rows();
    let cuts = detect_blocks(m);
    let mut out = RMatrix::zeros(n, n).with_windows(m.col_lo, m.row_lo);
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let inv = gauss_jordan_inverse(&m.submatrix(a, b, a, b))?;
        for i in 0..b - a {
            for j in 0..b - a {
                out.set(a + i, a + j, inv.at(i, j).clone());
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    pub cuts: Vec<usize>,
}

impl BlockLayout {
    pub fn new(cuts: Vec<usize>) -> Result<Self, LinalgError> {
        if cuts.is_empty() {
            return Err(LinalgError::Layout("no cut points".into()));
        }
        if cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LinalgError::Layout(format!("cuts not strictly increasing: {cuts:?}")));
        }
        Ok(BlockLayout { cuts })
    }

    pub fn start(&self) -> usize {
        self.cuts[0]
    }

    pub fn end(&self) -> usize {
        *self.cuts.last().unwrap()
    }

    pub fn num_blocks(&self) -> usize {
        self.cuts.len() - 1
    }

    pub fn block(&self, k: usize) -> (usize, usize) {
        (self.cuts[k], self.cuts[k + 1])
    }

    /// Index of the block containing `i`.
    pub fn block_of(&self, i: usize) -> Option<usize> {
        if i < self.start() || i >= self.end() {
            return None;
        }
        Some(self.cuts.partition_point(|&c| c <= i) - 1)
    }

    pub fn push(&mut self, next: usize) -> Result<(), LinalgError> {
        if next <= self.end() {
            return Err(LinalgError::Layout(format!("cut {next} not past {}", self.end())));
        }
        self.cuts.push(next);
        Ok(())
    }
}

/// Block-diagonal assembly on the layout's window; entries outside blocks are 0.
pub fn block_compose(blocks: &[RMatrix], layout: &BlockLayout) -> Result<RMatrix, LinalgError> {
    if blocks.len() != layout.num_blocks() {
        return Err(LinalgError::Layout(format!(
            "{} blocks for {} intervals",
            blocks.len(),
            layout.num_blocks()
        )));
    }
    let lo = layout.start();
    let n = layout.end() - lo;
    let mut out = RMatrix::zeros(n, n).with_windows(lo, lo);
    for (k, b) in blocks.iter().enumerate() {
        let (a, e) = layout.block(k);
        if b.rows() != e - a || b.cols() != e - a {
            return Err(LinalgError::Layout(format!(
                "block {k} is {}x{}, interval has length {}",
                b.rows(),
                b.cols(),
                e - a
            )));
        }
        for i in 0..b.rows() {
            for j in 0..b.cols() {
                out.set(a - lo + i, a - lo + j, b.at(i, j).clone());
            }
        }
    }
    Ok(out)
}

/// Reduced row echelon form and pivot columns.
pub fn rref(m: &RMatrix) -> (RMatrix, Vec<usize>) {
    let mut a = m.clone();
    let (rows, cols) = (a.rows(), a.cols());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a.at(i, c).is_zero()) else {
            continue;
        };
        if p != r {
            for j in 0..cols {
                a.data.swap(p * cols + j, r * cols + j);
            }
        }
        let inv = a.at(r, c).recip();
        for j in c..cols {
            let v = a.at(r, j) * &inv;
            a.set(r, j, v);
        }
        for i in 0..rows {
            if i == r || a.at(i, c).is_zero() {
                continue;
            }
            let f = a.at(i, c).clone();
            for j in c..cols {
                if !a.at(r, j).is_zero() {
                    let v = a.at(i, j) - &(&f * a.at(r, j));
                    a.set(i, j, v);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

pub fn rank(m: &RMatrix) -> usize {
    rref(m).1.len()
}

/// Basis of `{x : M x = 0}`; each basis vector has a 1 at its free column and
/// 0 at the other free columns.
pub fn nullspace(m: &RMatrix) -> Vec<Vec<Rational>> {
    let (r, pivots) = rref(m);
    let cols = m.cols();
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![Rational::zero(); cols];
            x[f] = Rational::one();
            for (row, &p) in pivots.iter().enumerate() {
                x[p] = -r.at(row, f);
            }
            x
        })
        .collect()
}

/// Free columns of `M` (complement of the rref pivots).
pub fn free_columns(m: &RMatrix) -> Vec<usize> {
    let (_, pivots) = rref(m);
    (0..m.cols()).filter(|c| !pivots.contains(c)).collect()
}

/// Some solution of `M x = b` (free variables 0), or `None` if inconsistent.
pub fn solve(m: &RMatrix, b: &[Rational]) -> Option<Vec<Rational>> {
    assert_eq!(b.len(), m.rows(), "rhs length");
    let cols = m.cols();
    let aug = RMatrix::from_rows(
        (0..m.rows())
            .map(|i| {
                let mut row = m.row_vec(i);
                row.push(b[i].clone());
                row
            })
            .collect(),
    )
    .ok()?
    .with_cols(cols + 1);
    let (r, pivots) = rref(&aug);
    if pivots.last() == Some(&cols) {
        return None;
    }
    let mut x = vec![Rational::zero(); cols];
    for (row, &p) in pivots.iter().enumerate() {
        x[p] = r.at(row, cols).clone();
    }
    Some(x)
}
