//! Points of the extended complex plane, Hessenberg pairs and the
//! predicates that decide properness and deflation.
//!
//! Pole positions are 0-based: position `p` is read off the subdiagonal
//! entries `(p + 1, p)` of both matrices.

use std::fmt;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::kernels::{
    rotate_cols, rotate_rows, sigma_min_2x2, ComplexMatrix, GivensRotation, C64, EPS, ONE, ZERO,
};

/// A point `alpha / beta` of the extended complex plane, normalized to unit length.
///
/// The phase is fixed so that `beta` is real nonnegative, or `alpha = 1` when
/// `beta = 0`; infinity is therefore exactly `(1, 0)`.
#[derive(Clone, Copy, PartialEq)]
pub struct ProjectivePoint {
    alpha: C64,
    beta: C64,
}

impl ProjectivePoint {
    pub const INFINITY: ProjectivePoint = ProjectivePoint { alpha: ONE, beta: ZERO };
    pub const ZERO: ProjectivePoint = ProjectivePoint { alpha: ZERO, beta: ONE };

    pub fn new(alpha: C64, beta: C64) -> Result<Self> {
        if !(alpha.re.is_finite() && alpha.im.is_finite() && beta.re.is_finite() && beta.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite projective coordinates".into()));
        }
        let s = alpha.norm().max(beta.norm());
        if s == 0.0 {
            return Err(Error::InvalidInput("(0, 0) is not a point of the extended plane".into()));
        }
        let (a, b) = (alpha / s, beta / s);
        let r = a.norm().hypot(b.norm());
        let (a, b) = (a / r, b / r);
        if b == ZERO {
            return Ok(Self::INFINITY);
        }
        let phase = b.conj() / b.norm();
        Ok(ProjectivePoint { alpha: a * phase, beta: C64::new(b.norm(), 0.0) })
    }

    pub fn finite(z: C64) -> Self {
        Self::new(z, ONE).expect("finite point")
    }

    pub fn real(x: f64) -> Self {
        Self::finite(C64::new(x, 0.0))
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    pub fn beta(&self) -> C64 {
        self.beta
    }

    pub fn is_infinite(&self) -> bool {
        self.beta == ZERO
    }

    /// `alpha / beta`, or `None` at infinity.
    pub fn to_complex(&self) -> Option<C64> {
        if self.is_infinite() {
            None
        } else {
            Some(self.alpha / self.beta)
        }
    }

    /// `alpha / beta` with infinity mapped to a complex infinity.
    pub fn value(&self) -> C64 {
        self.to_complex().unwrap_or(C64::new(f64::INFINITY, 0.0))
    }

    /// `|alpha_p beta_q - alpha_q beta_p|`, a metric on the extended plane with values in `[0, 1]`.
    pub fn chordal_distance(&self, other: &ProjectivePoint) -> f64 {
        chordal_distance(self, other)
    }

    /// A deterministic nearby point: moves by `delta * scale` in direction `e^{i pi/4}`
    /// (in the reciprocal chart for points outside the unit disk).
    pub fn perturbed(&self, delta: f64, scale: f64) -> Self {
        let dir = C64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        let scale = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };
        if self.beta.norm() >= self.alpha.norm() {
            Self::finite(self.alpha / self.beta + dir * delta * scale)
        } else {
            let mu = self.beta / self.alpha + dir * delta / scale;
            Self::new(ONE, mu).expect("nonzero alpha")
        }
    }
}

impl fmt::Debug for ProjectivePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_complex() {
            None => write!(f, "inf"),
            Some(z) => write!(f, "{}{:+}i", z.re, z.im),
        }
    }
}

impl fmt::Display for ProjectivePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

pub fn chordal_distance(p: &ProjectivePoint, q: &ProjectivePoint) -> f64 {
    (p.alpha * q.beta - q.alpha * p.beta).norm().min(1.0)
}

/// Accumulated unitary factors with `A_current = Q^H A_0 Z`.
#[derive(Clone, Debug)]
pub struct EquivalenceAccumulator {
    pub q: ComplexMatrix,
    pub z: ComplexMatrix,
}

impl EquivalenceAccumulator {
    pub fn identity(rows: usize, cols: usize) -> Self {
        EquivalenceAccumulator { q: ComplexMatrix::identity(rows), z: ComplexMatrix::identity(cols) }
    }
}

/// Rotation and swap counts gathered while transforming a pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TransformCounters {
    pub row_rotations: usize,
    pub col_rotations: usize,
    pub swaps: usize,
    /// Swaps of poles closer than `1e-8` in chordal distance.
    pub near_equal_swaps: usize,
    /// Swaps whose fill-in before stamping exceeded the stability threshold.
    pub unstable_swaps: usize,
}

impl TransformCounters {
    pub fn rotations(&self) -> usize {
        self.row_rotations + self.col_rotations
    }
}

/// Two upper Hessenberg matrices of equal shape, `n x n` or `(n+1) x n`.
#[derive(Clone, Debug)]
pub struct HessenbergPair {
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
    pub acc: Option<EquivalenceAccumulator>,
    pub counters: TransformCounters,
}

impl HessenbergPair {
    /// Wraps `(A, B)` after checking shapes and the Hessenberg zero pattern.
    pub fn new(a: ComplexMatrix, b: ComplexMatrix) -> Result<Self> {
        let pair = Self::new_unchecked(a, b)?;
        if pair.a.max_below(1) != 0.0 || pair.b.max_below(1) != 0.0 {
            return Err(Error::InvalidInput("matrices are not upper Hessenberg".into()));
        }
        Ok(pair)
    }

    /// Wraps `(A, B)` checking only the shapes; used for pencils mid-reduction.
    pub fn new_unchecked(a: ComplexMatrix, b: ComplexMatrix) -> Result<Self> {
        if (a.rows(), a.cols()) != (b.rows(), b.cols()) {
            return Err(Error::DimensionMismatch("A and B differ in shape".into()));
        }
        let (r, c) = (a.rows(), a.cols());
        if !(r == c || r == c + 1) || c == 0 {
            return Err(Error::DimensionMismatch(format!("unsupported pair shape {r}x{c}")));
        }
        Ok(HessenbergPair { a, b, acc: None, counters: TransformCounters::default() })
    }

    pub fn with_accumulator(mut self) -> Self {
        self.acc = Some(EquivalenceAccumulator::identity(self.rows(), self.cols()));
        self
    }

    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    pub fn cols(&self) -> usize {
        self.a.cols()
    }

    /// Number of pole positions, `rows - 1`.
    pub fn num_poles(&self) -> usize {
        self.rows() - 1
    }

    pub fn pole(&self, p: usize) -> Result<ProjectivePoint> {
        if p >= self.num_poles() {
            return Err(Error::IndexOutOfRange { index: p, dim: self.num_poles() });
        }
        let (x, y) = (self.a[(p + 1, p)], self.b[(p + 1, p)]);
        if x == ZERO && y == ZERO {
            return Err(Error::ImproperPair { index: p });
        }
        ProjectivePoint::new(x, y)
    }

    /// Applies `G` to rows `i, i+1` of both matrices over `cols`, recording `Q <- Q G^H`.
    pub fn rotate_rows(&mut self, g: &GivensRotation, i: usize, cols: Range<usize>) {
        if g.is_identity() {
            return;
        }
        rotate_rows(g, &mut self.a, i, cols.clone());
        rotate_rows(g, &mut self.b, i, cols);
        if let Some(acc) = self.acc.as_mut() {
            let n = acc.q.rows();
            rotate_cols(g, &mut acc.q, i, 0..n);
        }
        self.counters.row_rotations += 1;
    }

    /// Applies `G^H` from the right to columns `j, j+1` over `rows`, recording `Z <- Z G^H`.
    pub fn rotate_cols(&mut self, g: &GivensRotation, j: usize, rows: Range<usize>) {
        if g.is_identity() {
            return;
        }
        rotate_cols(g, &mut self.a, j, rows.clone());
        rotate_cols(g, &mut self.b, j, rows);
        if let Some(acc) = self.acc.as_mut() {
            let n = acc.z.rows();
            rotate_cols(g, &mut acc.z, j, 0..n);
        }
        self.counters.col_rotations += 1;
    }

    /// `max(||Q^H A0 Z - A||, ||Q^H B0 Z - B||)` in the Frobenius norm, each relative to the input.
    pub fn equivalence_residual(&self, a0: &ComplexMatrix, b0: &ComplexMatrix) -> Option<(f64, f64)> {
        let acc = self.acc.as_ref()?;
        let qh = acc.q.adjoint();
        let ra = qh.matmul(a0).matmul(&acc.z).sub(&self.a).frobenius_norm() / a0.frobenius_norm().max(f64::MIN_POSITIVE);
        let rb = qh.matmul(b0).matmul(&acc.z).sub(&self.b).frobenius_norm() / b0.frobenius_norm().max(f64::MIN_POSITIVE);
        Some((ra, rb))
    }
}

/// `poles_of`: all subdiagonal ratios as projective points.
pub fn poles_of(pair: &HessenbergPair) -> Result<Vec<ProjectivePoint>> {
    (0..pair.num_poles()).map(|p| pair.pole(p)).collect()
}

/// Outcome of [`is_proper`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Properness {
    Proper,
    /// Both subdiagonal entries at this position are negligible.
    VanishingSubdiagonal { position: usize },
    /// The leading two entries of the first columns are dependent.
    DependentFirstColumns,
    /// The trailing two entries of the last rows are dependent.
    DependentLastRows,
}

impl Properness {
    pub fn is_proper(&self) -> bool {
        matches!(self, Properness::Proper)
    }
}

fn neighbour_scale(m: &ComplexMatrix, p: usize) -> f64 {
    let mut s = m[(p, p)].norm();
    if p + 1 < m.cols() {
        s += m[(p + 1, p + 1)].norm();
    }
    s
}

/// Relative smallness of `m[(p+1, p)]` against its diagonal neighbours.
fn subdiag_small(m: &ComplexMatrix, p: usize, c: f64) -> bool {
    let x = m[(p + 1, p)].norm();
    if x == 0.0 {
        return true;
    }
    let mut s = neighbour_scale(m, p);
    if s == 0.0 {
        s = m.frobenius_norm();
    }
    x <= c * EPS * s
}

/// Whether both subdiagonal entries at position `p` meet the interior deflation criterion.
pub fn interior_negligible(pair: &HessenbergPair, p: usize, c: f64) -> bool {
    subdiag_small(&pair.a, p, c) && subdiag_small(&pair.b, p, c)
}

/// Properness check. Condition I uses the interior criterion with `c = 1`;
/// condition II compares the smallest singular value of the leading (trailing)
/// 2x2 block against `tol` times its Frobenius norm.
pub fn is_proper(pair: &HessenbergPair, tol: f64) -> Properness {
    let np = pair.num_poles();
    for p in 0..np {
        if interior_negligible(pair, p, 1.0) {
            return Properness::VanishingSubdiagonal { position: p };
        }
    }
    let (a, b) = (&pair.a, &pair.b);
    let first = [a[(0, 0)], b[(0, 0)], a[(1, 0)], b[(1, 0)]];
    if rank_one(first, tol) {
        return Properness::DependentFirstColumns;
    }
    if pair.rows() == pair.cols() {
        let n = pair.cols();
        let last = [a[(n - 1, n - 2)], a[(n - 1, n - 1)], b[(n - 1, n - 2)], b[(n - 1, n - 1)]];
        if rank_one(last, tol) {
            return Properness::DependentLastRows;
        }
    }
    Properness::Proper
}

fn rank_one(m: [C64; 4], tol: f64) -> bool {
    let f = m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    sigma_min_2x2(m[0], m[1], m[2], m[3]) <= tol * f
}

/// First 0-based interior position `p` in `1..=n-3` where both subdiagonal entries
/// are negligible; those entries are stamped to zero.
pub fn interior_deflation_index(pair: &mut HessenbergPair, c: f64) -> Option<usize> {
    let hi = pair.rows() - 1;
    interior_deflation_in(pair, 0, hi, c)
}

/// Windowed variant of [`interior_deflation_index`] on rows/columns `lo..=hi`.
pub fn interior_deflation_in(pair: &mut HessenbergPair, lo: usize, hi: usize, c: f64) -> Option<usize> {
    if hi < lo + 3 {
        return None;
    }
    for p in lo + 1..=hi - 2 {
        if interior_negligible(pair, p, c) {
            pair.a[(p + 1, p)] = ZERO;
            pair.b[(p + 1, p)] = ZERO;
            return Some(p);
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum End {
    Top,
    Bottom,
}

/// Rank-one test at one end of the pair; on success the subdiagonal pair there is
/// annihilated by one rotation and the decoupled eigenvalue returned.
pub fn exterior_deflation(pair: &mut HessenbergPair, end: End) -> Option<ProjectivePoint> {
    let hi = pair.cols() - 1;
    exterior_deflation_in(pair, 0, hi, end, 1.0, 1.0)
}

/// Windowed rank-one test on the square window `lo..=hi`. The A and B rows of the
/// tested block are scaled by `wa` and `wb` before the test.
pub fn exterior_deflation_in(
    pair: &mut HessenbergPair,
    lo: usize,
    hi: usize,
    end: End,
    wa: f64,
    wb: f64,
) -> Option<ProjectivePoint> {
    if hi <= lo {
        return None;
    }
    let rows_end = pair.rows();
    let cols_end = pair.cols();
    match end {
        End::Bottom => {
            let (x_a, y_a) = (pair.a[(hi, hi - 1)], pair.a[(hi, hi)]);
            let (x_b, y_b) = (pair.b[(hi, hi - 1)], pair.b[(hi, hi)]);
            if !rank_one([x_a * wa, y_a * wa, x_b * wb, y_b * wb], EPS) {
                return None;
            }
            let na = x_a.norm().hypot(y_a.norm()) * wa;
            let nb = x_b.norm().hypot(y_b.norm()) * wb;
            let (x, y) = if na >= nb { (x_a, y_a) } else { (x_b, y_b) };
            if x != ZERO {
                let g = GivensRotation::right_zeroing_first(x, y).ok()?;
                pair.rotate_cols(&g, hi - 1, 0..(hi + 1).min(rows_end));
            }
            pair.a[(hi, hi - 1)] = ZERO;
            pair.b[(hi, hi - 1)] = ZERO;
            ProjectivePoint::new(pair.a[(hi, hi)], pair.b[(hi, hi)]).ok()
        }
        End::Top => {
            let (x_a, y_a) = (pair.a[(lo, lo)], pair.a[(lo + 1, lo)]);
            let (x_b, y_b) = (pair.b[(lo, lo)], pair.b[(lo + 1, lo)]);
            if !rank_one([x_a * wa, x_b * wb, y_a * wa, y_b * wb], EPS) {
                return None;
            }
            let na = x_a.norm().hypot(y_a.norm()) * wa;
            let nb = x_b.norm().hypot(y_b.norm()) * wb;
            let (x, y) = if na >= nb { (x_a, y_a) } else { (x_b, y_b) };
            if y != ZERO {
                let g = crate::kernels::make_givens(x, y).ok()?;
                pair.rotate_rows(&g, lo, lo..cols_end);
            }
            pair.a[(lo + 1, lo)] = ZERO;
            pair.b[(lo + 1, lo)] = ZERO;
            ProjectivePoint::new(pair.a[(lo, lo)], pair.b[(lo, lo)]).ok()
        }
    }
}
