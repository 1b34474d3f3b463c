//! Brute-force reference computations for verification.
//!
//! Everything here is deliberately independent of the solver: dense
//! factorizations come from `nalgebra`, characteristic polynomials are
//! expanded by permutations. Sizes are capped to keep the references
//! trustworthy.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernels::{ComplexMatrix, C64, ONE};
use crate::pencil::ProjectivePoint;

pub const MAX_CHARPOLY_N: usize = 5;
pub const MAX_KRYLOV_N: usize = 12;

pub fn to_dmatrix(m: &ComplexMatrix) -> DMatrix<C64> {
    DMatrix::from_column_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn from_dmatrix(m: &DMatrix<C64>) -> ComplexMatrix {
    ComplexMatrix::from_column_major(m.nrows(), m.ncols(), m.as_slice().to_vec()).expect("shape")
}

pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return Vec::new();
    }
    to_dmatrix(m).singular_values().iter().copied().collect()
}

pub fn spectral_norm(m: &ComplexMatrix) -> f64 {
    singular_values(m).into_iter().fold(0.0, f64::max)
}

/// `||S - Q^H A Z||_2 / ||A||_2`.
pub fn backward_error(s: &ComplexMatrix, q: &ComplexMatrix, a: &ComplexMatrix, z: &ComplexMatrix) -> f64 {
    let r = q.adjoint().matmul(a).matmul(z).sub(s);
    let na = spectral_norm(a);
    if na == 0.0 {
        return spectral_norm(&r);
    }
    spectral_norm(&r) / na
}

/// `sigma_min(beta*A - alpha*B) / (|beta| ||A||_2 + |alpha| ||B||_2)`.
pub fn sigma_min_residual(a: &ComplexMatrix, b: &ComplexMatrix, lambda: &ProjectivePoint) -> f64 {
    let m = a.combine(lambda.beta(), b, -lambda.alpha());
    let smin = singular_values(&m).into_iter().fold(f64::INFINITY, f64::min);
    let scale = lambda.beta().norm() * spectral_norm(a) + lambda.alpha().norm() * spectral_norm(b);
    if scale == 0.0 {
        return smin;
    }
    smin / scale
}

type Poly = Vec<C64>;

fn poly_mul(p: &Poly, q: &Poly) -> Poly {
    let mut out = vec![C64::new(0.0, 0.0); p.len() + q.len() - 1];
    for (i, &x) in p.iter().enumerate() {
        for (j, &y) in q.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<(Vec<usize>, f64)>) {
        let n = used.len();
        if prefix.len() == n {
            let mut inv = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if prefix[i] > prefix[j] {
                        inv += 1;
                    }
                }
            }
            out.push((prefix.clone(), if inv % 2 == 0 { 1.0 } else { -1.0 }));
            return;
        }
        for k in 0..n {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Coefficients `c_k` of `det(A - lambda*B) = sum c_k lambda^k` by the Leibniz formula.
pub fn char_poly(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Vec<C64>> {
    let n = a.rows();
    if !a.is_square() || (b.rows(), b.cols()) != (n, n) {
        return Err(Error::DimensionMismatch("char_poly needs square pencils of one size".into()));
    }
    if n > MAX_CHARPOLY_N {
        return Err(Error::InvalidInput(format!("char_poly is capped at n = {MAX_CHARPOLY_N}")));
    }
    let mut total = vec![C64::new(0.0, 0.0); n + 1];
    for (perm, sign) in permutations(n) {
        let mut p: Poly = vec![C64::new(sign, 0.0)];
        for (i, &j) in perm.iter().enumerate() {
            p = poly_mul(&p, &vec![a[(i, j)], -b[(i, j)]]);
        }
        for (k, c) in p.into_iter().enumerate() {
            total[k] += c;
        }
    }
    Ok(total)
}

fn eval(p: &[C64], z: C64) -> (C64, C64) {
    let mut v = C64::new(0.0, 0.0);
    let mut d = C64::new(0.0, 0.0);
    for &c in p.iter().rev() {
        d = d * z + v;
        v = v * z + c;
    }
    (v, d)
}

/// Roots of a polynomial (coefficients low to high, nonzero leading one) by the
/// Aberth iteration followed by Newton polishing.
fn poly_roots(p: &[C64]) -> Vec<C64> {
    let deg = p.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let lead = p[deg];
    let monic: Vec<C64> = p.iter().map(|&c| c / lead).collect();
    // Cauchy bound for the initial circle
    let bound = 1.0 + monic[..deg].iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let mut z: Vec<C64> =
        (0..deg).map(|k| C64::from_polar(bound * 0.5, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / deg as f64)).collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..deg {
            let (v, d) = eval(&monic, z[i]);
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            let ratio = v / d;
            let s: C64 = (0..deg).filter(|&j| j != i).map(|j| C64::new(1.0, 0.0) / (z[i] - z[j])).sum();
            let w = ratio / (C64::new(1.0, 0.0) - ratio * s);
            if w.re.is_finite() && w.im.is_finite() {
                z[i] -= w;
                moved = moved.max(w.norm() / z[i].norm().max(1.0));
            }
        }
        if moved < 1e-16 {
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let (v, d) = eval(&monic, *zi);
            if d.norm() == 0.0 {
                break;
            }
            let step = v / d;
            if step.re.is_finite() && step.im.is_finite() {
                *zi -= step;
            }
        }
    }
    z
}

/// Projective roots of `det(beta*A - alpha*B)` for `n <= 5`.
pub fn char_poly_roots(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Vec<ProjectivePoint>> {
    let n = a.rows();
    let c = char_poly(a, b)?;
    let na = a.frobenius_norm();
    let nb = b.frobenius_norm();
    // c_k has the natural scale ||A||^(n-k) ||B||^k
    let scaled: Vec<f64> = c
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let s = na.powi((n - k) as i32) * nb.powi(k as i32);
            if s == 0.0 {
                x.norm()
            } else {
                x.norm() / s
            }
        })
        .collect();
    let tol = 1e-13;
    if scaled.iter().all(|&x| x <= tol) {
        return Err(Error::SingularPencil("characteristic polynomial vanishes identically".into()));
    }
    let mut deg = n;
    while scaled[deg] <= tol {
        deg -= 1;
    }
    let mut out: Vec<ProjectivePoint> = poly_roots(&c[..=deg]).into_iter().map(ProjectivePoint::finite).collect();
    out.extend(std::iter::repeat_n(ProjectivePoint::INFINITY, n - deg));
    Ok(out)
}

fn dense_solve(m: &DMatrix<C64>, rhs: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let lu = m.clone().lu();
    let x = lu.solve(rhs).ok_or(Error::PoleHitsEigenvalue)?;
    // nalgebra reports singularity only for exact zero pivots
    let r = m * &x - rhs;
    if !x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) || r.norm() > 1e-6 * rhs.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::PoleHitsEigenvalue);
    }
    Ok(x)
}

/// `M(rho, xi) = (nu A - mu B)(beta A - alpha B)^{-1}` with `rho = mu/nu`, `xi = alpha/beta`.
pub fn m_function(a: &ComplexMatrix, b: &ComplexMatrix, rho: &ProjectivePoint, xi: &ProjectivePoint) -> Result<ComplexMatrix> {
    let num = to_dmatrix(&combination(a, b, rho));
    let den = to_dmatrix(&combination(a, b, xi));
    // X = num * den^{-1}  <=>  den^T X^T = num^T
    let xt = dense_solve(&den.transpose(), &num.transpose())?;
    Ok(from_dmatrix(&xt.transpose()))
}

/// `A - z B` for finite `z`, `B` for infinity; keeps finite arguments unscaled.
fn combination(a: &ComplexMatrix, b: &ComplexMatrix, z: &ProjectivePoint) -> ComplexMatrix {
    match z.to_complex() {
        Some(z) => a.combine(ONE, b, -z),
        None => b.scale(-ONE),
    }
}

/// `N(rho, xi) = (beta A - alpha B)^{-1}(nu A - mu B)`.
pub fn n_function(a: &ComplexMatrix, b: &ComplexMatrix, rho: &ProjectivePoint, xi: &ProjectivePoint) -> Result<ComplexMatrix> {
    let num = to_dmatrix(&combination(a, b, rho));
    let den = to_dmatrix(&combination(a, b, xi));
    Ok(from_dmatrix(&dense_solve(&den, &num)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KrylovVariant {
    /// Columns built with `M(rho, xi)`.
    K,
    /// Columns built with `N(rho, xi)`.
    L,
}

/// Rational Krylov matrix `[v, F1 v, F2 F1 v, ...]` with `F_i = M(rho_i, xi_i)`
/// or `N(rho_i, xi_i)`; `poles` and `shifts` have length `k - 1`.
pub fn rational_krylov_matrix(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    v: &[C64],
    poles: &[ProjectivePoint],
    shifts: &[ProjectivePoint],
    variant: KrylovVariant,
) -> Result<ComplexMatrix> {
    let n = a.rows();
    if n > MAX_KRYLOV_N {
        return Err(Error::InvalidInput(format!("rational Krylov oracle is capped at n = {MAX_KRYLOV_N}")));
    }
    if poles.len() != shifts.len() {
        return Err(Error::DimensionMismatch("one shift per pole".into()));
    }
    let k = poles.len() + 1;
    let mut out = ComplexMatrix::zeros(n, k);
    out.set_column(0, v);
    let mut w = v.to_vec();
    for (i, (xi, rho)) in poles.iter().zip(shifts).enumerate() {
        let f = match variant {
            KrylovVariant::K => m_function(a, b, rho, xi)?,
            KrylovVariant::L => n_function(a, b, rho, xi)?,
        };
        w = f.matvec(&w);
        out.set_column(i + 1, &w);
    }
    Ok(out)
}

/// Orthonormal basis of the column space; errors on numerical rank deficiency.
pub fn orthonormal_basis(u: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = to_dmatrix(u);
    let qr = d.clone().qr();
    let r = qr.r();
    let k = u.cols();
    let scale = u.frobenius_norm();
    for i in 0..k.min(u.rows()) {
        if r[(i, i)].norm() <= 1e-13 * scale {
            return Err(Error::RankDeficient(format!("column {i} depends on the previous ones")));
        }
    }
    if k > u.rows() {
        return Err(Error::RankDeficient("more columns than rows".into()));
    }
    Ok(from_dmatrix(&qr.q()))
}

/// Largest principal angle between the column spaces of `U` and `W` (radians).
///
/// Computed as `asin ||(I - P_U) W_o||_2`, accurate for small angles.
pub fn subspace_angle(u: &ComplexMatrix, w: &ComplexMatrix) -> Result<f64> {
    if u.rows() != w.rows() {
        return Err(Error::DimensionMismatch("subspaces live in different spaces".into()));
    }
    let uo = orthonormal_basis(u)?;
    let wo = orthonormal_basis(w)?;
    let (a, b) = if uo.cols() >= wo.cols() { (&uo, &wo) } else { (&wo, &uo) };
    let proj = a.matmul(&a.adjoint().matmul(b));
    let s = spectral_norm(&b.sub(&proj)).min(1.0);
    Ok(s.asin())
}

/// Range of a matrix's first `k` columns as a new matrix.
pub fn leading_columns(m: &ComplexMatrix, k: usize) -> ComplexMatrix {
    m.submatrix(0..m.rows(), 0..k)
}

/// `e_1, ..., e_k` in `C^n`.
pub fn canonical_basis(n: usize, k: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, k, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}
