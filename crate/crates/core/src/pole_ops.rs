//! Changing the boundary poles of a Hessenberg pair and swapping adjacent poles.
//!
//! All routines work on global row/column indices so they can act on one
//! window of a partially deflated pair; entries outside the window are
//! updated as required for the equivalence to remain exact.

use crate::error::{Error, Result};
use crate::kernels::{make_givens, GivensRotation, EPS, ZERO};
use crate::pencil::{chordal_distance, HessenbergPair, ProjectivePoint};

/// Chordal distance under which two poles are considered equal by [`swap_poles`].
pub const EQUAL_POLES: f64 = 8.0 * EPS;

/// Chordal distance under which a swap is counted as a near-equal swap.
pub const NEAR_EQUAL_POLES: f64 = 1e-8;

/// Fill-in tolerance, relative to the block norm, of the stability check in a swap.
pub const SWAP_FILL_TOL: f64 = 64.0 * EPS;

fn stamp_exact(pair: &mut HessenbergPair, p: usize, pole: &ProjectivePoint) {
    if pole.is_infinite() {
        pair.b[(p + 1, p)] = ZERO;
    } else if pole.alpha() == ZERO {
        pair.a[(p + 1, p)] = ZERO;
    }
}

/// Replaces the first pole of the pair by `new_pole`.
pub fn change_first_pole(pair: &mut HessenbergPair, new_pole: &ProjectivePoint) -> Result<()> {
    change_first_pole_in(pair, 0, new_pole)
}

/// Replaces the pole at position `lo`, the first pole of a window starting at row `lo`.
pub fn change_first_pole_in(pair: &mut HessenbergPair, lo: usize, new_pole: &ProjectivePoint) -> Result<()> {
    if lo + 1 >= pair.rows() {
        return Err(Error::IndexOutOfRange { index: lo + 1, dim: pair.rows() });
    }
    let (al, be) = (new_pole.alpha(), new_pole.beta());
    let x0 = be * pair.a[(lo, lo)] - al * pair.b[(lo, lo)];
    let x1 = be * pair.a[(lo + 1, lo)] - al * pair.b[(lo + 1, lo)];
    if x1 == ZERO {
        if x0 == ZERO {
            log::warn!("first pole change at {lo}: combination vanishes, left unchanged");
        }
        return Ok(());
    }
    let g = make_givens(x0, x1)?;
    let cols = pair.cols();
    pair.rotate_rows(&g, lo, lo..cols);
    stamp_exact(pair, lo, new_pole);
    Ok(())
}

/// Replaces the last pole of the (square) pair by `new_pole`.
pub fn change_last_pole(pair: &mut HessenbergPair, new_pole: &ProjectivePoint) -> Result<()> {
    if pair.rows() != pair.cols() {
        return Err(Error::DimensionMismatch("last pole change needs a square pair".into()));
    }
    let hi = pair.cols() - 1;
    change_last_pole_in(pair, hi, new_pole)
}

/// Replaces the pole at position `hi - 1`, the last pole of a window ending at row `hi`.
pub fn change_last_pole_in(pair: &mut HessenbergPair, hi: usize, new_pole: &ProjectivePoint) -> Result<()> {
    if hi == 0 || hi >= pair.cols() {
        return Err(Error::IndexOutOfRange { index: hi, dim: pair.cols() });
    }
    if let Ok(current) = ProjectivePoint::new(pair.a[(hi, hi - 1)], pair.b[(hi, hi - 1)]) {
        if chordal_distance(&current, new_pole) <= EQUAL_POLES {
            return Ok(());
        }
    }
    let (al, be) = (new_pole.alpha(), new_pole.beta());
    let x0 = be * pair.a[(hi, hi - 1)] - al * pair.b[(hi, hi - 1)];
    let x1 = be * pair.a[(hi, hi)] - al * pair.b[(hi, hi)];
    if x0 == ZERO {
        if x1 == ZERO {
            log::warn!("last pole change at {hi}: combination vanishes, left unchanged");
        }
        return Ok(());
    }
    let g = GivensRotation::right_zeroing_first(x0, x1)?;
    pair.rotate_cols(&g, hi - 1, 0..hi + 1);
    stamp_exact(pair, hi - 1, new_pole);
    Ok(())
}

/// Exchanges the poles at positions `p` and `p + 1`.
///
/// Returns `false` when the poles already coincide and nothing was done.
pub fn swap_poles(pair: &mut HessenbergPair, p: usize) -> Result<bool> {
    if p + 2 >= pair.rows() {
        return Err(Error::IndexOutOfRange { index: p, dim: pair.num_poles() });
    }
    let (r0, r1) = (p + 1, p + 2);
    let (s11, s12, s22) = (pair.a[(r0, p)], pair.a[(r0, p + 1)], pair.a[(r1, p + 1)]);
    let (t11, t12, t22) = (pair.b[(r0, p)], pair.b[(r0, p + 1)], pair.b[(r1, p + 1)]);
    if (s11 == ZERO && t11 == ZERO) || (s22 == ZERO && t22 == ZERO) {
        return Err(Error::SingularBlock { position: p });
    }
    let first = ProjectivePoint::new(s11, t11)?;
    let second = ProjectivePoint::new(s22, t22)?;
    let gap = chordal_distance(&first, &second);
    if gap <= EQUAL_POLES {
        return Ok(false);
    }
    if gap < NEAR_EQUAL_POLES {
        pair.counters.near_equal_swaps += 1;
    }

    let ns = norm3(s11, s12, s22);
    let nt = norm3(t11, t12, t22);
    let ns = if ns == 0.0 { 1.0 } else { ns };
    let nt = if nt == 0.0 { 1.0 } else { nt };

    // First row of t22*S - s22*T; its null vector is the eigenvector for the
    // trailing pole, which the column rotation moves to the front.
    let (hs22, ht22) = (s22 / ns, t22 / nt);
    let m11 = ht22 * (s11 / ns) - hs22 * (t11 / nt);
    let m12 = ht22 * (s12 / ns) - hs22 * (t12 / nt);
    if m11 == ZERO && m12 == ZERO {
        return Err(Error::SingularBlock { position: p });
    }
    if m11 != ZERO {
        let z = GivensRotation::right_zeroing_first(m11, m12)?;
        pair.rotate_cols(&z, p, 0..r1 + 1);
    }

    let (u0, u1) = (pair.a[(r0, p)] / ns, pair.a[(r1, p)] / ns);
    let (v0, v1) = (pair.b[(r0, p)] / nt, pair.b[(r1, p)] / nt);
    let (x, y) = if u0.norm().hypot(u1.norm()) >= v0.norm().hypot(v1.norm()) { (u0, u1) } else { (v0, v1) };
    if y != ZERO {
        let q = make_givens(x, y)?;
        let cols = pair.cols();
        pair.rotate_rows(&q, r0, p..cols);
    }

    let fill = (pair.a[(r1, p)].norm() / ns).max(pair.b[(r1, p)].norm() / nt);
    if fill > SWAP_FILL_TOL {
        pair.counters.unstable_swaps += 1;
        log::debug!("swap at {p}: fill-in {fill:e} above tolerance");
    }
    pair.a[(r1, p)] = ZERO;
    pair.b[(r1, p)] = ZERO;
    stamp_exact(pair, p, &second);
    stamp_exact(pair, p + 1, &first);
    pair.counters.swaps += 1;
    Ok(true)
}

fn norm3(a: crate::kernels::C64, b: crate::kernels::C64, c: crate::kernels::C64) -> f64 {
    a.norm().hypot(b.norm()).hypot(c.norm())
}
