//! Rational Krylov decompositions `A V G = B V H` of a large pencil, their
//! implicit filtering with the pole-swapping machinery, and a restarted
//! eigensolver built on top.

use std::cell::RefCell;

use nalgebra::{DVector, Dyn, LU};

use crate::error::{Error, Result};
use crate::kernels::{dot, vec_norm, ComplexMatrix, C64, ZERO};
use crate::oracles::to_dmatrix;
use crate::pencil::{chordal_distance, HessenbergPair, ProjectivePoint};
use crate::pole_ops::{change_first_pole, swap_poles};
use crate::rqz::{rqz_solve, SolveOptions};

/// Breakdown threshold for the orthogonalized expansion vector.
pub const BREAKDOWN_TOL: f64 = 1e-12;
/// Filter shifts closer than this to a pole are rejected.
pub const SHIFT_POLE_GUARD: f64 = 1e-8;

/// Access to a pencil through products and shifted solves only.
pub trait PencilOperator {
    fn dim(&self) -> usize;
    fn apply_a(&self, x: &[C64]) -> Vec<C64>;
    fn apply_b(&self, x: &[C64]) -> Vec<C64>;
    /// `(beta A - alpha B)^{-1} rhs` for `pole = (alpha, beta)`.
    fn solve_shifted(&self, pole: &ProjectivePoint, rhs: &[C64]) -> Result<Vec<C64>>;
}

type FactorCache = RefCell<Vec<(ProjectivePoint, LU<C64, Dyn, Dyn>)>>;

/// Dense operator with LU factors cached per pole.
pub struct DenseOperator {
    a: ComplexMatrix,
    b: ComplexMatrix,
    cache: FactorCache,
}

impl DenseOperator {
    pub fn new(a: ComplexMatrix, b: ComplexMatrix) -> Result<Self> {
        if !a.is_square() || (b.rows(), b.cols()) != (a.rows(), a.cols()) {
            return Err(Error::DimensionMismatch("operator needs square A and B of equal size".into()));
        }
        Ok(DenseOperator { a, b, cache: RefCell::new(Vec::new()) })
    }

    pub fn a(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn b(&self) -> &ComplexMatrix {
        &self.b
    }
}

impl PencilOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.a.rows()
    }

    fn apply_a(&self, x: &[C64]) -> Vec<C64> {
        self.a.matvec(x)
    }

    fn apply_b(&self, x: &[C64]) -> Vec<C64> {
        self.b.matvec(x)
    }

    fn solve_shifted(&self, pole: &ProjectivePoint, rhs: &[C64]) -> Result<Vec<C64>> {
        let mut cache = self.cache.borrow_mut();
        let idx = match cache.iter().position(|(p, _)| p == pole) {
            Some(i) => i,
            None => {
                let m = to_dmatrix(&self.a.combine(pole.beta(), &self.b, -pole.alpha()));
                let lu = m.lu();
                if !lu.is_invertible() {
                    return Err(Error::PoleHitsEigenvalue);
                }
                cache.push((*pole, lu));
                cache.len() - 1
            }
        };
        let x = cache[idx].1.solve(&DVector::from_column_slice(rhs)).ok_or(Error::PoleHitsEigenvalue)?;
        if !x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::PoleHitsEigenvalue);
        }
        Ok(x.as_slice().to_vec())
    }
}

/// `A V G = B V H` with orthonormal `V` (N x (k+1)) and `(k+1) x k` Hessenberg `H`, `G`.
#[derive(Clone, Debug)]
pub struct RkDecomposition {
    pub v: ComplexMatrix,
    pub h: ComplexMatrix,
    pub g: ComplexMatrix,
    /// `poles[i] = (h_{i+1,i}, g_{i+1,i})`.
    pub poles: Vec<ProjectivePoint>,
}

impl RkDecomposition {
    /// The trivial decomposition spanned by `v0`.
    pub fn new(v0: &[C64]) -> Result<Self> {
        let nrm = vec_norm(v0);
        if nrm == 0.0 || !nrm.is_finite() {
            return Err(Error::InvalidInput("start vector must be nonzero and finite".into()));
        }
        let v = ComplexMatrix::from_column_major(v0.len(), 1, v0.iter().map(|x| x / nrm).collect())?;
        Ok(RkDecomposition { v, h: ComplexMatrix::zeros(1, 0), g: ComplexMatrix::zeros(1, 0), poles: Vec::new() })
    }

    /// Order `k` of the recurrence; the basis has `k + 1` columns.
    pub fn order(&self) -> usize {
        self.h.cols()
    }

    /// `||A V G - B V H||_F / (||A V G||_F + ||B V H||_F)`.
    pub fn recurrence_residual(&self, op: &dyn PencilOperator) -> f64 {
        let vg = self.v.matmul(&self.g);
        let vh = self.v.matmul(&self.h);
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for j in 0..self.order() {
            let x = op.apply_a(vg.column(j));
            let y = op.apply_b(vh.column(j));
            num = num.hypot(vec_norm(&x.iter().zip(&y).map(|(p, q)| p - q).collect::<Vec<_>>()));
            den = den.hypot(vec_norm(&x)).hypot(vec_norm(&y));
        }
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }

    /// `||V^H V - I||_F`.
    pub fn orthogonality_error(&self) -> f64 {
        let k = self.v.cols();
        self.v.adjoint().matmul(&self.v).sub(&ComplexMatrix::identity(k)).frobenius_norm()
    }
}

/// One rational Krylov step with pole `xi`: extends the decomposition from order `k` to `k + 1`.
pub fn rk_expand(op: &dyn PencilOperator, dec: &mut RkDecomposition, xi: &ProjectivePoint) -> Result<()> {
    let n = op.dim();
    let k = dec.order();
    if dec.v.rows() != n {
        return Err(Error::DimensionMismatch(format!("basis has {} rows, operator {n}", dec.v.rows())));
    }
    if k + 2 > n {
        return Err(Error::InvalidInput(format!("cannot expand beyond dimension {n}")));
    }
    let last = dec.v.column(k).to_vec();
    // continuation with B inside the unit disk, A outside: (nu, mu) = (0, -1) or (1, 0)
    let use_b = xi.alpha().norm() <= xi.beta().norm();
    let rhs = if use_b { op.apply_b(&last) } else { op.apply_a(&last) };
    let (nu, mu) = if use_b { (ZERO, C64::new(-1.0, 0.0)) } else { (C64::new(1.0, 0.0), ZERO) };
    let mut w = op.solve_shifted(xi, &rhs)?;
    let wnorm = vec_norm(&w);
    if wnorm == 0.0 || !wnorm.is_finite() {
        return Err(Error::Breakdown { dim: k + 1 });
    }
    let mut coeff = vec![ZERO; k + 2];
    for _ in 0..2 {
        for j in 0..=k {
            let vj = dec.v.column(j);
            let d = dot(vj, &w);
            for (wi, vi) in w.iter_mut().zip(vj) {
                *wi -= d * vi;
            }
            coeff[j] += d;
        }
    }
    let gamma = vec_norm(&w);
    if gamma <= BREAKDOWN_TOL * wnorm {
        return Err(Error::Breakdown { dim: k + 1 });
    }
    coeff[k + 1] = C64::new(gamma, 0.0);
    for wi in w.iter_mut() {
        *wi /= gamma;
    }

    let (al, be) = (xi.alpha(), xi.beta());
    let mut v = dec.v.padded(n, k + 2);
    v.set_column(k + 1, &w);
    let mut h = dec.h.padded(k + 2, k + 1);
    let mut g = dec.g.padded(k + 2, k + 1);
    for i in 0..k + 2 {
        h[(i, k)] = al * coeff[i];
        g[(i, k)] = be * coeff[i];
    }
    h[(k, k)] -= mu;
    g[(k, k)] -= nu;
    dec.v = v;
    dec.h = h;
    dec.g = g;
    dec.poles.push(*xi);
    Ok(())
}

/// Implicit filter with shift `rho`: the shift is introduced as first pole,
/// swapped to the last position and truncated away, reducing the order by one.
pub fn rk_filter_step(dec: &mut RkDecomposition, rho: &ProjectivePoint) -> Result<()> {
    let k = dec.order();
    if k == 0 {
        return Err(Error::InvalidInput("filtering needs a decomposition of order at least 1".into()));
    }
    if let Some(p) = dec.poles.iter().find(|p| chordal_distance(p, rho) <= SHIFT_POLE_GUARD) {
        return Err(Error::InvalidInput(format!("filter shift {rho} coincides with pole {p}")));
    }
    let mut pair = HessenbergPair::new_unchecked(dec.h.clone(), dec.g.clone())?.with_accumulator();
    change_first_pole(&mut pair, rho)?;
    for p in 0..k - 1 {
        swap_poles(&mut pair, p)?;
    }
    let acc = pair.acc.take().expect("accumulator");
    let v = dec.v.matmul(&acc.q);
    dec.v = v.truncated(v.rows(), k);
    dec.h = pair.a.truncated(k, k - 1);
    dec.g = pair.b.truncated(k, k - 1);
    dec.poles = (0..k - 1)
        .map(|p| ProjectivePoint::new(dec.h[(p + 1, p)], dec.g[(p + 1, p)]))
        .collect::<Result<_>>()?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct RitzPair {
    pub value: ProjectivePoint,
    /// Unit eigenvector of the square `k x k` blocks.
    pub y: Vec<C64>,
    /// `||(H - theta G) y||` over the full `(k+1) x k` pair.
    pub residual: f64,
}

impl RitzPair {
    /// The approximate eigenvector `V G y` of the large pencil, normalized.
    pub fn vector(&self, dec: &RkDecomposition) -> Vec<C64> {
        let x = dec.v.matvec(&dec.g.matvec(&self.y));
        let nrm = vec_norm(&x);
        if nrm == 0.0 {
            x
        } else {
            x.iter().map(|v| v / nrm).collect()
        }
    }
}

/// Ritz pairs from the square leading blocks `(H_k, G_k)`.
pub fn ritz_pairs(dec: &RkDecomposition) -> Result<Vec<RitzPair>> {
    let k = dec.order();
    if k == 0 {
        return Err(Error::InvalidInput("Ritz pairs need order at least 1".into()));
    }
    let hk = dec.h.truncated(k, k);
    let gk = dec.g.truncated(k, k);
    let schur = rqz_solve(&hk, &gk, &SolveOptions::default())?;
    let (s, t, z) = (&schur.s, &schur.t, &schur.z);
    let scale = s.frobenius_norm().max(t.frobenius_norm()).max(f64::MIN_POSITIVE);
    let mut pairs = Vec::with_capacity(k);
    for (i, lam) in schur.eigenvalues.iter().enumerate() {
        let (al, be) = (lam.alpha(), lam.beta());
        let m = |r: usize, c: usize| be * s[(r, c)] - al * t[(r, c)];
        let mut x = vec![ZERO; k];
        x[i] = C64::new(1.0, 0.0);
        for j in (0..i).rev() {
            let acc: C64 = (j + 1..=i).map(|l| m(j, l) * x[l]).sum();
            let mut d = m(j, j);
            if d.norm() <= f64::EPSILON * scale {
                d = C64::new(f64::EPSILON * scale, 0.0);
            }
            x[j] = -acc / d;
        }
        let y = z.matvec(&x);
        let nrm = vec_norm(&y);
        let y: Vec<C64> = y.iter().map(|v| v / nrm).collect();
        let r = dec.h.matvec(&y).iter().zip(dec.g.matvec(&y)).map(|(p, q)| be * p - al * q).collect::<Vec<_>>();
        let residual = if be.norm() > 0.0 { vec_norm(&r) / be.norm() } else { vec_norm(&dec.g.matvec(&y)) };
        pairs.push(RitzPair { value: *lam, y, residual });
    }
    Ok(pairs)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Selection {
    Rightmost,
    Leftmost,
    /// Closest to the given target.
    Nearest(C64),
}

#[derive(Clone, Debug)]
pub struct RestartOptions {
    /// Maximal order of the decomposition.
    pub m: usize,
    /// Filter steps per restart.
    pub p: usize,
    /// Number of wanted Ritz values.
    pub l: usize,
    pub tol: f64,
    pub select: Selection,
    pub max_restarts: usize,
}

impl Default for RestartOptions {
    fn default() -> Self {
        RestartOptions { m: 20, p: 10, l: 1, tol: 1e-7, select: Selection::Rightmost, max_restarts: 50 }
    }
}

#[derive(Clone, Debug)]
pub struct RestartResult {
    /// The `l` selected Ritz pairs, best first.
    pub pairs: Vec<RitzPair>,
    pub restarts: usize,
    pub converged: bool,
    pub decomposition: RkDecomposition,
}

/// Orders finite Ritz values by the selection criterion; ties keep index order.
fn ordered(pairs: &[RitzPair], select: Selection) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pairs.len()).filter(|&i| !pairs[i].value.is_infinite()).collect();
    let key = |i: usize| {
        let z = pairs[i].value.value();
        match select {
            Selection::Rightmost => -z.re,
            Selection::Leftmost => z.re,
            Selection::Nearest(t) => (z - t).norm(),
        }
    };
    idx.sort_by(|&i, &j| key(i).total_cmp(&key(j)));
    idx
}

/// Restarted rational Krylov eigensolver: expand to order `m` with poles taken
/// cyclically from `poles`, stop when the `l` selected Ritz values have
/// residual at most `tol`, otherwise filter with the `p` least wanted Ritz values.
pub fn restarted_rk_solve(
    op: &dyn PencilOperator,
    v0: &[C64],
    poles: &[ProjectivePoint],
    opts: &RestartOptions,
) -> Result<RestartResult> {
    if poles.is_empty() {
        return Err(Error::InvalidInput("at least one pole is needed".into()));
    }
    if opts.l == 0 || opts.l + opts.p > opts.m || opts.m + 1 > op.dim() {
        return Err(Error::InvalidInput(format!(
            "need 1 <= l <= m - p and m < N, got m = {}, p = {}, l = {}, N = {}",
            opts.m,
            opts.p,
            opts.l,
            op.dim()
        )));
    }
    let mut dec = RkDecomposition::new(v0)?;
    let mut next_pole = 0;
    let mut restarts = 0;
    loop {
        while dec.order() < opts.m {
            rk_expand(op, &mut dec, &poles[next_pole % poles.len()])?;
            next_pole += 1;
        }
        let pairs = ritz_pairs(&dec)?;
        let wanted = ordered(&pairs, opts.select);
        let chosen: Vec<RitzPair> = wanted.iter().take(opts.l).map(|&i| pairs[i].clone()).collect();
        let converged = chosen.len() == opts.l && chosen.iter().all(|p| p.residual <= opts.tol);
        log::debug!(
            "restart {restarts}: best residual {:e}",
            chosen.iter().map(|p| p.residual).fold(0.0, f64::max)
        );
        if converged || opts.p == 0 {
            return Ok(RestartResult { pairs: chosen, restarts, converged, decomposition: dec });
        }
        if restarts >= opts.max_restarts {
            return Err(Error::MaxRestarts(restarts));
        }
        // the p least wanted Ritz values, never one of the l kept ones
        let shifts: Vec<ProjectivePoint> =
            wanted.iter().skip(opts.l).rev().take(opts.p).map(|&i| pairs[i].value).collect();
        for rho in &shifts {
            let rho = guard(rho, &dec.poles);
            rk_filter_step(&mut dec, &rho)?;
        }
        restarts += 1;
    }
}

fn guard(rho: &ProjectivePoint, poles: &[ProjectivePoint]) -> ProjectivePoint {
    let mut r = *rho;
    let mut k = 1;
    while k <= 8 && poles.iter().any(|p| chordal_distance(p, &r) <= SHIFT_POLE_GUARD) {
        r = rho.perturbed(1e-6 * k as f64, 1.0);
        k += 1;
    }
    r
}

/// Dense copy of an operator, for tests and reference computations.
pub fn dense_matrices(op: &dyn PencilOperator) -> (ComplexMatrix, ComplexMatrix) {
    let n = op.dim();
    let mut a = ComplexMatrix::zeros(n, n);
    let mut b = ComplexMatrix::zeros(n, n);
    let mut e = vec![ZERO; n];
    for j in 0..n {
        e[j] = C64::new(1.0, 0.0);
        a.set_column(j, &op.apply_a(&e));
        b.set_column(j, &op.apply_b(&e));
        e[j] = ZERO;
    }
    (a, b)
}
