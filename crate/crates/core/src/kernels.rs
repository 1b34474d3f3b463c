//! Dense complex matrices, Givens rotations and small closed-form solvers.
//!
//! Matrices are stored column-major. All routines work in complex
//! arithmetic, also for real data.

use std::fmt;
use std::ops::{Index, IndexMut, Range};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pencil::ProjectivePoint;

pub type C64 = Complex64;

pub const EPS: f64 = f64::EPSILON;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Dense column-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    /// Builds a matrix from row-major nested data.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Self::from_fn(m, n, |i, j| rows[i][j]))
    }

    /// Builds a matrix from real row-major data.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.len());
        Self::from_fn(m, n, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn from_column_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn diagonal(d: &[C64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
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

    /// Column-major entries.
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> &[C64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [C64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn set_column(&mut self, j: usize, v: &[C64]) {
        self.column_mut(j).copy_from_slice(v);
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn submatrix(&self, rows: Range<usize>, cols: Range<usize>) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows.start + i, cols.start + j)])
    }

    pub fn scale(&self, s: C64) -> Self {
        ComplexMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * s).collect() }
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: C64, other: &Self, beta: C64) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&x, &y)| alpha * x + beta * y).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(ONE, other, -ONE)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(ONE, other, ONE)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            for k in 0..self.cols {
                let b = other[(k, j)];
                if b == ZERO {
                    continue;
                }
                let col = self.column(k);
                let dst = &mut out.data[j * self.rows..(j + 1) * self.rows];
                for (d, &a) in dst.iter_mut().zip(col) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, x.len());
        let mut y = vec![ZERO; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj == ZERO {
                continue;
            }
            for (yi, &a) in y.iter_mut().zip(self.column(j)) {
                *yi += a * xj;
            }
        }
        y
    }

    pub fn frobenius_norm(&self) -> f64 {
        vec_norm(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    /// Largest |m_ij| over the strictly lower part below the given subdiagonal
    /// offset (0 = below the diagonal, 1 = below the first subdiagonal).
    pub fn max_below(&self, offset: usize) -> f64 {
        let mut m = 0.0f64;
        for j in 0..self.cols {
            for i in (j + offset + 1)..self.rows {
                m = m.max(self[(i, j)].norm());
            }
        }
        m
    }

    /// Copies `self` with its columns restricted to `0..cols` and rows to `0..rows`.
    pub fn truncated(&self, rows: usize, cols: usize) -> Self {
        self.submatrix(0..rows, 0..cols)
    }

    /// Returns an enlarged copy, padding with zeros.
    pub fn padded(&self, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| if i < self.rows && j < self.cols { self[(i, j)] } else { ZERO })
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, " ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, " {:>10.3e}{:+.3e}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

pub fn vec_norm(v: &[C64]) -> f64 {
    // Scaled accumulation avoids overflow for large entries.
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.re.abs()).max(x.im.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let s: f64 = v.iter().map(|x| (x / scale).norm_sqr()).sum();
    scale * s.sqrt()
}

/// `x^H y`.
pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Plane rotation `G = [[c, s], [-conj(s), conj(c)]]` acting on an index pair.
///
/// Produced by [`make_givens`]: `G * [a; b] = [r; 0]` with `r >= 0` real.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GivensRotation {
    pub c: C64,
    pub s: C64,
}

impl GivensRotation {
    pub const IDENTITY: GivensRotation = GivensRotation { c: ONE, s: ZERO };

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    /// The conjugate transpose, again in the same parametrization.
    pub fn adjoint(&self) -> Self {
        GivensRotation { c: self.c.conj(), s: -self.s }
    }

    /// `G * [x; y]`.
    #[inline]
    pub fn apply(&self, x: C64, y: C64) -> (C64, C64) {
        (self.c * x + self.s * y, -self.s.conj() * x + self.c.conj() * y)
    }

    /// `[x, y] * G^H`.
    #[inline]
    pub fn apply_row(&self, x: C64, y: C64) -> (C64, C64) {
        (self.c.conj() * x + self.s.conj() * y, -self.s * x + self.c * y)
    }

    /// Rotation with `[x, y] * G^H = [r, 0]`.
    pub fn right_zeroing_second(x: C64, y: C64) -> Result<Self> {
        make_givens(x.conj(), y.conj())
    }

    /// Rotation with `[x, y] * G^H = [0, r]`.
    pub fn right_zeroing_first(x: C64, y: C64) -> Result<Self> {
        let g = make_givens(y.conj(), x.conj())?;
        Ok(GivensRotation { c: g.c.conj(), s: -g.s.conj() })
    }

    /// The 2x2 matrix `G`.
    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => self.c,
            (0, 1) => self.s,
            (1, 0) => -self.s.conj(),
            _ => self.c.conj(),
        })
    }
}

/// Rotation mapping `(a, b)` to `(r, 0)` with `r = sqrt(|a|^2 + |b|^2)`.
///
/// When `b == 0` and `a` is already real nonnegative the identity is returned.
pub fn make_givens(a: C64, b: C64) -> Result<GivensRotation> {
    if b == ZERO && a.im == 0.0 && a.re > 0.0 {
        return Ok(GivensRotation::IDENTITY);
    }
    let r = a.norm().hypot(b.norm());
    if r == 0.0 {
        return Err(Error::InvalidInput("cannot build a rotation from (0, 0)".into()));
    }
    if !r.is_finite() {
        return Err(Error::InvalidInput("non-finite rotation input".into()));
    }
    Ok(GivensRotation { c: a.conj() / r, s: b.conj() / r })
}

fn check_pair(index: usize, dim: usize) -> Result<()> {
    if index + 1 >= dim {
        return Err(Error::IndexOutOfRange { index: index + 1, dim });
    }
    Ok(())
}

/// Rows `i, i+1` of `m` replaced by `G * rows`.
pub fn apply_left(rot: &GivensRotation, m: &mut ComplexMatrix, i: usize) -> Result<()> {
    check_pair(i, m.rows)?;
    let cols = m.cols;
    rotate_rows(rot, m, i, 0..cols);
    Ok(())
}

/// Columns `j, j+1` of `m` replaced by `cols * G^H`.
pub fn apply_right(rot: &GivensRotation, m: &mut ComplexMatrix, j: usize) -> Result<()> {
    check_pair(j, m.cols)?;
    let rows = m.rows;
    rotate_cols(rot, m, j, 0..rows);
    Ok(())
}

#[inline]
pub(crate) fn rotate_rows(rot: &GivensRotation, m: &mut ComplexMatrix, i: usize, cols: Range<usize>) {
    if rot.is_identity() {
        return;
    }
    let r = m.rows;
    for j in cols {
        let base = j * r + i;
        let (x, y) = rot.apply(m.data[base], m.data[base + 1]);
        m.data[base] = x;
        m.data[base + 1] = y;
    }
}

#[inline]
pub(crate) fn rotate_cols(rot: &GivensRotation, m: &mut ComplexMatrix, j: usize, rows: Range<usize>) {
    if rot.is_identity() {
        return;
    }
    let r = m.rows;
    let cc = rot.c.conj();
    let sc = rot.s.conj();
    let (left, right) = m.data.split_at_mut((j + 1) * r);
    let a = &mut left[j * r..];
    let b = &mut right[..r];
    for i in rows {
        let x = a[i];
        let y = b[i];
        a[i] = cc * x + sc * y;
        b[i] = -rot.s * x + rot.c * y;
    }
}

/// Result of [`qr_triangularize`].
#[derive(Clone, Debug)]
pub struct QrFactors {
    pub q: ComplexMatrix,
    pub r: ComplexMatrix,
    /// Diagonal positions with `|r_ii| <= eps * ||B||_F`.
    pub negligible_diagonal: Vec<usize>,
}

/// Givens QR factorization `B = Q R`; entries below the diagonal of `R` are exact zeros.
///
/// Rotations are skipped for entries that are already zero, so a triangular input
/// yields `Q = I`.
pub fn qr_triangularize(b: &ComplexMatrix) -> Result<QrFactors> {
    if !b.is_square() {
        return Err(Error::DimensionMismatch("qr_triangularize needs a square matrix".into()));
    }
    let n = b.rows;
    let mut r = b.clone();
    let mut q = ComplexMatrix::identity(n);
    for j in 0..n {
        for i in (j + 1..n).rev() {
            let y = r[(i, j)];
            if y == ZERO {
                continue;
            }
            let g = make_givens(r[(i - 1, j)], y)?;
            rotate_rows(&g, &mut r, i - 1, j..n);
            r[(i, j)] = ZERO;
            rotate_cols(&g, &mut q, i - 1, 0..n);
        }
    }
    let tol = EPS * b.frobenius_norm();
    let negligible_diagonal = (0..n).filter(|&i| r[(i, i)].norm() <= tol).collect();
    Ok(QrFactors { q, r, negligible_diagonal })
}

/// Both roots of `det(beta*A2 - alpha*B2) = 0` for 2x2 blocks.
///
/// The characteristic form is handled homogeneously, so infinite roots come out
/// as `(alpha, 0)` without inverting `B2`. The first root is `(q, c2)`, the second
/// `(c0, q)` in the notation of the stable quadratic formula.
pub fn eig_2x2_pencil(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<[ProjectivePoint; 2]> {
    if (a.rows, a.cols, b.rows, b.cols) != (2, 2, 2, 2) {
        return Err(Error::DimensionMismatch("eig_2x2_pencil needs 2x2 blocks".into()));
    }
    let sa = a.max_abs();
    let sb = b.max_abs();
    if sa == 0.0 && sb == 0.0 {
        return Err(Error::SingularPencil("zero 2x2 pencil".into()));
    }
    let sa = if sa == 0.0 { 1.0 } else { sa };
    let sb = if sb == 0.0 { 1.0 } else { sb };
    let (a11, a12, a21, a22) = (a[(0, 0)] / sa, a[(0, 1)] / sa, a[(1, 0)] / sa, a[(1, 1)] / sa);
    let (b11, b12, b21, b22) = (b[(0, 0)] / sb, b[(0, 1)] / sb, b[(1, 0)] / sb, b[(1, 1)] / sb);
    // det(beta*A - alpha*B) = c0*beta^2 + c1*alpha*beta + c2*alpha^2
    let c0 = a11 * a22 - a12 * a21;
    let c1 = -(a11 * b22 + a22 * b11 - a12 * b21 - a21 * b12);
    let c2 = b11 * b22 - b12 * b21;
    let tol = 32.0 * EPS;
    if c0.norm() <= tol && c1.norm() <= tol && c2.norm() <= tol {
        return Err(Error::SingularPencil("characteristic form of the 2x2 block vanishes".into()));
    }
    let mut d = (c1 * c1 - 4.0 * c0 * c2).sqrt();
    if (c1.conj() * d).re < 0.0 {
        d = -d;
    }
    let q = -(c1 + d) * 0.5;
    let (r1, r2) = if q == ZERO {
        // c1 = 0 and c0*c2 = 0: a double root at 0 or at infinity.
        if c2 == ZERO {
            ((ONE, ZERO), (ONE, ZERO))
        } else {
            ((ZERO, ONE), (ZERO, ONE))
        }
    } else {
        ((q, c2), (c0, q))
    };
    let unscale = |(al, be): (C64, C64)| ProjectivePoint::new(al * sa, be * sb);
    Ok([unscale(r1)?, unscale(r2)?])
}

/// Smallest singular value of a 2x2 matrix by the closed-form formulas
/// `s_max^2 + s_min^2 = ||M||_F^2` and `s_max * s_min = |det M|`.
pub fn smallest_singular_value_2x2(m: &ComplexMatrix) -> f64 {
    assert_eq!((m.rows, m.cols), (2, 2));
    sigma_min_2x2(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

pub(crate) fn sigma_min_2x2(m11: C64, m12: C64, m21: C64, m22: C64) -> f64 {
    let s = m11.norm().max(m12.norm()).max(m21.norm()).max(m22.norm());
    if s == 0.0 {
        return 0.0;
    }
    let (a, b, c, d) = (m11 / s, m12 / s, m21 / s, m22 / s);
    let f2 = a.norm_sqr() + b.norm_sqr() + c.norm_sqr() + d.norm_sqr();
    let det = (a * d - b * c).norm();
    let disc = ((f2 - 2.0 * det) * (f2 + 2.0 * det)).max(0.0);
    let smax = ((f2 + disc.sqrt()) * 0.5).sqrt();
    s * det / smax
}
