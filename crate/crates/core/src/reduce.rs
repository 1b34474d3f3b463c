//! Unitary reduction of a dense pencil to Hessenberg form with prescribed poles.
//!
//! The reduction triangularizes `B`, then reduces `A` column by column. After
//! each column the fresh infinite pole at the bottom of the reduced part is
//! swapped to the top and replaced by the next prescribed pole, starting with
//! the last one, so earlier poles drift down to their final positions.

use crate::error::{Error, Result};
use crate::kernels::{make_givens, ComplexMatrix, GivensRotation, C64, EPS, ZERO};
use crate::pencil::{exterior_deflation_in, interior_negligible, End, HessenbergPair, ProjectivePoint};
use crate::pole_ops::{change_first_pole_in, change_last_pole_in, swap_poles};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeflationKind {
    /// An infinite eigenvalue removed before pole introduction.
    Infinite,
    /// Both subdiagonal entries at a position became negligible.
    Interior,
    /// Rank-one test at the top of a window.
    ExteriorTop,
    /// Rank-one test at the bottom of a window.
    ExteriorBottom,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeflationEvent {
    pub kind: DeflationKind,
    /// Pole position whose subdiagonal entries were zeroed.
    pub position: usize,
    /// The prescribed pole for that position, which can no longer be placed.
    pub consumed_pole: Option<ProjectivePoint>,
    /// The decoupled eigenvalue for exterior and infinite deflations.
    pub eigenvalue: Option<ProjectivePoint>,
}

#[derive(Clone, Debug, Default)]
pub struct ReductionReport {
    pub deflations: Vec<DeflationEvent>,
    pub infinite_eigenvalues: usize,
    /// Rotations spent on triangularizing B and reducing A.
    pub plain_rotations: usize,
    /// Rotations spent on pole changes and swaps.
    pub pole_rotations: usize,
    /// `|a_{p+1,p}| + |b_{p+1,p}|` for every position of the final pair.
    pub subdiagonal_profile: Vec<f64>,
    /// Positions whose final pole differs from the prescribed one.
    pub mismatched_positions: Vec<usize>,
}

/// Hooks into the reduction for inspection and monitoring.
pub trait ReductionObserver {
    /// Called once column `j` is reduced and its pole introduced.
    fn after_column(&mut self, _j: usize, _pair: &HessenbergPair) {}
    fn on_deflation(&mut self, _event: &DeflationEvent) {}
}

impl ReductionObserver for () {}

struct Callback<F: FnMut(&DeflationEvent)>(F);

impl<F: FnMut(&DeflationEvent)> ReductionObserver for Callback<F> {
    fn on_deflation(&mut self, event: &DeflationEvent) {
        (self.0)(event)
    }
}

fn check_pencil(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<usize> {
    let n = a.rows();
    if !a.is_square() || (b.rows(), b.cols()) != (n, n) {
        return Err(Error::DimensionMismatch("A and B must be square of the same size".into()));
    }
    if n == 0 {
        return Err(Error::InvalidInput("empty pencil".into()));
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInput("pencil contains non-finite entries".into()));
    }
    Ok(n)
}

fn triangularize_b(pair: &mut HessenbergPair) -> Result<()> {
    let n = pair.cols();
    for j in 0..n {
        for i in (j + 1..n).rev() {
            let y = pair.b[(i, j)];
            if y == ZERO {
                continue;
            }
            let g = make_givens(pair.b[(i - 1, j)], y)?;
            pair.rotate_rows(&g, i - 1, 0..n);
            pair.b[(i, j)] = ZERO;
        }
    }
    Ok(())
}

/// Zeroes `A(j+2..=hi, j)` with row rotations, restoring triangular `B` with column rotations.
fn annihilate_column(pair: &mut HessenbergPair, j: usize, hi: usize) -> Result<()> {
    let n = pair.cols();
    for i in (j + 2..=hi).rev() {
        let y = pair.a[(i, j)];
        if y == ZERO {
            continue;
        }
        let g = make_givens(pair.a[(i - 1, j)], y)?;
        pair.rotate_rows(&g, i - 1, j..n);
        pair.a[(i, j)] = ZERO;
        let fill = pair.b[(i, i - 1)];
        if fill != ZERO {
            let z = GivensRotation::right_zeroing_first(fill, pair.b[(i, i)])?;
            pair.rotate_cols(&z, i - 1, 0..n);
            pair.b[(i, i - 1)] = ZERO;
        }
    }
    Ok(())
}

/// Standard Hessenberg-triangular reduction; every pole ends up at infinity.
pub fn reduce_to_hessenberg_triangular(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<HessenbergPair> {
    let n = check_pencil(a, b)?;
    let mut pair = HessenbergPair::new_unchecked(a.clone(), b.clone())?.with_accumulator();
    triangularize_b(&mut pair)?;
    for j in 0..n.saturating_sub(2) {
        annihilate_column(&mut pair, j, n - 1)?;
    }
    Ok(pair)
}

/// Chases every negligible diagonal entry of the triangular `B` to the top of the
/// window `lo..=hi` and deflates it. Returns the new window start.
pub fn deflate_infinite_in(
    pair: &mut HessenbergPair,
    mut lo: usize,
    hi: usize,
    events: &mut Vec<DeflationEvent>,
) -> Result<usize> {
    let n = pair.cols();
    let tol = EPS * pair.b.frobenius_norm();
    while lo <= hi {
        let Some(k) = (lo..=hi).find(|&k| pair.b[(k, k)].norm() <= tol) else { break };
        pair.b[(k, k)] = ZERO;
        for j in (lo + 1..=k).rev() {
            let (x, y) = (pair.b[(j - 1, j - 1)], pair.b[(j - 1, j)]);
            if x != ZERO {
                let z = GivensRotation::right_zeroing_first(x, y)?;
                pair.rotate_cols(&z, j - 1, 0..(j + 2).min(n));
            }
            pair.b[(j - 1, j - 1)] = ZERO;
            if j < hi {
                let y = pair.a[(j + 1, j - 1)];
                if y != ZERO {
                    let g = make_givens(pair.a[(j, j - 1)], y)?;
                    pair.rotate_rows(&g, j, j - 1..n);
                    pair.a[(j + 1, j - 1)] = ZERO;
                }
            }
        }
        if lo < hi {
            let y = pair.a[(lo + 1, lo)];
            if y != ZERO {
                let g = make_givens(pair.a[(lo, lo)], y)?;
                pair.rotate_rows(&g, lo, lo..n);
            }
            pair.a[(lo + 1, lo)] = ZERO;
            pair.b[(lo + 1, lo)] = ZERO;
        }
        events.push(DeflationEvent {
            kind: DeflationKind::Infinite,
            position: lo,
            consumed_pole: None,
            eigenvalue: Some(ProjectivePoint::INFINITY),
        });
        lo += 1;
    }
    Ok(lo)
}

/// Removes the infinite eigenvalues of a Hessenberg-triangular pair, returning their count.
/// They end up as the leading diagonal entries.
pub fn deflate_infinite_eigenvalues(pair: &mut HessenbergPair) -> Result<usize> {
    if pair.rows() != pair.cols() || pair.b.max_below(0) != 0.0 {
        return Err(Error::InvalidInput("infinite deflation needs a square pair with triangular B".into()));
    }
    let mut events = Vec::new();
    let hi = pair.cols() - 1;
    let lo = deflate_infinite_in(pair, 0, hi, &mut events)?;
    Ok(lo)
}

/// Reduces `(A, B)` to a Hessenberg pair with poles `poles` (length `n - 1`).
pub fn reduce_to_hessenberg_pair(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    poles: &[ProjectivePoint],
) -> Result<(HessenbergPair, ReductionReport)> {
    reduce_observed(a, b, poles, false, &mut ())
}

/// As [`reduce_to_hessenberg_pair`], additionally testing both ends of the final
/// window for rank-one deflations; every deflation is passed to `on_deflation`.
pub fn reduce_with_deflation_monitoring(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    poles: &[ProjectivePoint],
    on_deflation: impl FnMut(&DeflationEvent),
) -> Result<(HessenbergPair, ReductionReport)> {
    reduce_observed(a, b, poles, true, &mut Callback(on_deflation))
}

/// The reduction with an explicit observer. `exterior` enables the final
/// rank-one checks.
pub fn reduce_observed(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    poles: &[ProjectivePoint],
    exterior: bool,
    observer: &mut dyn ReductionObserver,
) -> Result<(HessenbergPair, ReductionReport)> {
    let n = check_pencil(a, b)?;
    if poles.len() + 1 != n {
        return Err(Error::DimensionMismatch(format!("{} poles for a pencil of size {n}", poles.len())));
    }
    let mut report = ReductionReport::default();
    let mut pair = HessenbergPair::new_unchecked(a.clone(), b.clone())?.with_accumulator();
    let hi = n - 1;
    let mut lo = 0;

    let plain_before = pair.counters.rotations();
    triangularize_b(&mut pair)?;
    let tol = EPS * b.frobenius_norm();
    let has_infinite = (0..n).any(|i| pair.b[(i, i)].norm() <= tol);
    if has_infinite && n > 1 {
        for j in 0..n.saturating_sub(2) {
            annihilate_column(&mut pair, j, hi)?;
        }
        let mut events = Vec::new();
        lo = deflate_infinite_in(&mut pair, 0, hi, &mut events)?;
        for mut ev in events {
            if ev.position < poles.len() {
                ev.consumed_pole = Some(poles[ev.position]);
            }
            observer.on_deflation(&ev);
            report.deflations.push(ev);
        }
        report.infinite_eigenvalues = lo;
    }
    report.plain_rotations = pair.counters.rotations() - plain_before;

    let mut j = lo;
    while j < hi {
        if lo >= hi {
            break;
        }
        let before = pair.counters.rotations();
        annihilate_column(&mut pair, j, hi)?;
        report.plain_rotations += pair.counters.rotations() - before;

        let before = pair.counters.rotations();
        if j >= lo {
            // move the fresh infinite pole at position j up to the window top
            let mut p = j;
            while p > lo {
                let q = p - 1;
                if interior_negligible(&pair, q, 1.0) {
                    split(&mut pair, q, poles, &mut report, observer);
                    lo = q + 1;
                    break;
                }
                swap_poles(&mut pair, q)?;
                p = q;
            }
            if lo <= j {
                let idx = lo + (hi - 1 - j);
                change_first_pole_in(&mut pair, lo, &poles[idx])?;
            }
        }
        // any position of the reduced part may have decoupled
        for q in (lo..=j).rev() {
            if interior_negligible(&pair, q, 1.0) {
                for r in lo..=q {
                    if interior_negligible(&pair, r, 1.0) {
                        split(&mut pair, r, poles, &mut report, observer);
                    }
                }
                lo = q + 1;
                break;
            }
        }
        report.pole_rotations += pair.counters.rotations() - before;
        observer.after_column(j, &pair);
        j += 1;
    }

    if exterior {
        let mut hi_w = hi;
        while hi_w > lo {
            let Some(ev) = exterior_deflation_in(&mut pair, lo, hi_w, End::Bottom, 1.0, 1.0) else { break };
            let event = DeflationEvent {
                kind: DeflationKind::ExteriorBottom,
                position: hi_w - 1,
                consumed_pole: Some(poles[hi_w - 1]),
                eigenvalue: Some(ev),
            };
            observer.on_deflation(&event);
            report.deflations.push(event);
            hi_w -= 1;
        }
        while hi_w > lo {
            let Some(ev) = exterior_deflation_in(&mut pair, lo, hi_w, End::Top, 1.0, 1.0) else { break };
            let event = DeflationEvent {
                kind: DeflationKind::ExteriorTop,
                position: lo,
                consumed_pole: Some(poles[lo]),
                eigenvalue: Some(ev),
            };
            observer.on_deflation(&event);
            report.deflations.push(event);
            lo += 1;
        }
    }

    report.subdiagonal_profile = subdiagonal_profile(&pair);
    report.mismatched_positions = (0..n - 1)
        .filter(|&p| match pair.pole(p) {
            Ok(x) => x.chordal_distance(&poles[p]) > 1e-8,
            Err(_) => true,
        })
        .collect();
    Ok((pair, report))
}

fn split(
    pair: &mut HessenbergPair,
    q: usize,
    poles: &[ProjectivePoint],
    report: &mut ReductionReport,
    observer: &mut dyn ReductionObserver,
) {
    pair.a[(q + 1, q)] = ZERO;
    pair.b[(q + 1, q)] = ZERO;
    let event =
        DeflationEvent { kind: DeflationKind::Interior, position: q, consumed_pole: Some(poles[q]), eigenvalue: None };
    observer.on_deflation(&event);
    report.deflations.push(event);
}

/// Gives a square Hessenberg pair the poles `poles` using only last-pole changes
/// and swaps, so the first column of `Q` is left untouched.
pub fn place_poles_from_bottom(pair: &mut HessenbergPair, poles: &[ProjectivePoint]) -> Result<()> {
    let n = pair.cols();
    if pair.rows() != n || poles.len() + 1 != n {
        return Err(Error::DimensionMismatch(format!("{} poles for a pair of size {n}", poles.len())));
    }
    for (i, xi) in poles.iter().enumerate() {
        change_last_pole_in(pair, n - 1, xi)?;
        for p in (i..n - 2).rev() {
            swap_poles(pair, p)?;
        }
    }
    Ok(())
}

/// `|a_{p+1,p}| + |b_{p+1,p}|` for every pole position.
pub fn subdiagonal_profile(pair: &HessenbergPair) -> Vec<f64> {
    (0..pair.num_poles()).map(|p| pair.a[(p + 1, p)].norm() + pair.b[(p + 1, p)].norm()).collect()
}

/// `m` nodes `c + e^{i theta} (rx cos(phi_k) + i ry sin(phi_k))`, `phi_k = 2 pi k / m`.
pub fn elliptic_contour_poles(c: C64, rx: f64, ry: f64, theta: f64, m: usize) -> Result<Vec<ProjectivePoint>> {
    if !(rx > 0.0 && ry > 0.0) || m == 0 {
        return Err(Error::InvalidInput("ellipse needs positive radii and at least one node".into()));
    }
    let rot = C64::from_polar(1.0, theta);
    Ok((0..m)
        .map(|k| {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
            ProjectivePoint::finite(c + rot * C64::new(rx * phi.cos(), ry * phi.sin()))
        })
        .collect())
}
