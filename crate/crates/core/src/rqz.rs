//! The implicit rational QZ iteration: single-shift steps, tightly packed
//! sweeps, shift and pole strategies, and the driver to generalized Schur form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernels::{eig_2x2_pencil, ComplexMatrix, C64, ZERO};
use crate::oracles::backward_error;
use crate::pencil::{chordal_distance, exterior_deflation_in, interior_negligible, End, HessenbergPair, ProjectivePoint};
use crate::pole_ops::{change_first_pole_in, change_last_pole_in, swap_poles};
use crate::reduce::{reduce_to_hessenberg_pair, DeflationKind};

/// Default per-eigenvalue iteration budget.
pub const DEFAULT_MAX_IT: usize = 30;
/// Shifts closer than this (chordally) to an active pole are perturbed.
pub const SHIFT_POLE_GUARD: f64 = 1e-8;
/// Relative size of the guard perturbation.
pub const SHIFT_PERTURBATION: f64 = 1e-6;
/// Iterations without deflation before an exceptional shift is used.
pub const EXCEPTIONAL_PERIOD: usize = 10;

fn block(pair: &HessenbergPair, r: usize) -> (ComplexMatrix, ComplexMatrix) {
    (pair.a.submatrix(r..r + 2, r..r + 2), pair.b.submatrix(r..r + 2, r..r + 2))
}

fn closest_root(a2: &ComplexMatrix, b2: &ComplexMatrix, target: (C64, C64)) -> ProjectivePoint {
    let fallback = ProjectivePoint::new(target.0, target.1);
    match (eig_2x2_pencil(a2, b2), fallback) {
        (Ok([r1, r2]), Ok(t)) => {
            if chordal_distance(&r2, &t) < chordal_distance(&r1, &t) {
                r2
            } else {
                r1
            }
        }
        (Ok([r1, _]), Err(_)) => r1,
        (Err(_), Ok(t)) => t,
        (Err(_), Err(_)) => ProjectivePoint::INFINITY,
    }
}

/// Eigenvalue of the trailing 2x2 block closest to `(a_nn, b_nn)`.
pub fn wilkinson_shift(pair: &HessenbergPair) -> Result<ProjectivePoint> {
    let n = pair.cols();
    if n < 2 || pair.rows() != n {
        return Err(Error::InvalidInput("Wilkinson shift needs a square pair of size at least 2".into()));
    }
    Ok(wilkinson_shift_in(pair, n - 1))
}

pub(crate) fn wilkinson_shift_in(pair: &HessenbergPair, hi: usize) -> ProjectivePoint {
    let (a2, b2) = block(pair, hi - 1);
    closest_root(&a2, &b2, (pair.a[(hi, hi)], pair.b[(hi, hi)]))
}

/// Eigenvalue of the leading 2x2 block closest to `(a_11, b_11)`.
pub fn wilkinson_pole(pair: &HessenbergPair) -> Result<ProjectivePoint> {
    if pair.cols() < 2 || pair.rows() != pair.cols() {
        return Err(Error::InvalidInput("Wilkinson pole needs a square pair of size at least 2".into()));
    }
    Ok(wilkinson_pole_in(pair, 0))
}

pub(crate) fn wilkinson_pole_in(pair: &HessenbergPair, lo: usize) -> ProjectivePoint {
    let (a2, b2) = block(pair, lo);
    closest_root(&a2, &b2, (pair.a[(lo, lo)], pair.b[(lo, lo)]))
}

fn check_window(pair: &HessenbergPair, lo: usize, hi: usize) -> Result<()> {
    if pair.rows() != pair.cols() {
        return Err(Error::DimensionMismatch("RQZ steps need a square pair".into()));
    }
    if hi >= pair.cols() || hi <= lo {
        return Err(Error::IndexOutOfRange { index: hi, dim: pair.cols() });
    }
    Ok(())
}

/// One implicit RQZ step on the whole pair: introduce `shift` as first pole,
/// chase it to the bottom and replace it by `new_pole`. Returns the number of swaps.
pub fn rqz_step(pair: &mut HessenbergPair, shift: &ProjectivePoint, new_pole: &ProjectivePoint) -> Result<usize> {
    let hi = pair.cols().saturating_sub(1);
    rqz_step_in(pair, 0, hi, shift, new_pole)
}

/// [`rqz_step`] restricted to the diagonal window `lo..=hi`.
pub fn rqz_step_in(
    pair: &mut HessenbergPair,
    lo: usize,
    hi: usize,
    shift: &ProjectivePoint,
    new_pole: &ProjectivePoint,
) -> Result<usize> {
    check_window(pair, lo, hi)?;
    change_first_pole_in(pair, lo, shift)?;
    for p in lo..hi - 1 {
        swap_poles(pair, p)?;
    }
    change_last_pole_in(pair, hi, new_pole)?;
    Ok(hi - 1 - lo)
}

/// Chases `shifts.len()` shifts as one block through the pair and finalizes with
/// `new_poles`. Returns the number of swaps.
pub fn tightly_packed_sweep(
    pair: &mut HessenbergPair,
    shifts: &[ProjectivePoint],
    new_poles: &[ProjectivePoint],
) -> Result<usize> {
    let hi = pair.cols().saturating_sub(1);
    tightly_packed_sweep_in(pair, 0, hi, shifts, new_poles)
}

/// [`tightly_packed_sweep`] restricted to the window `lo..=hi`.
pub fn tightly_packed_sweep_in(
    pair: &mut HessenbergPair,
    lo: usize,
    hi: usize,
    shifts: &[ProjectivePoint],
    new_poles: &[ProjectivePoint],
) -> Result<usize> {
    check_window(pair, lo, hi)?;
    let m = shifts.len();
    let npoles = hi - lo;
    if m == 0 || m != new_poles.len() || m > npoles {
        return Err(Error::InvalidInput(format!(
            "packed sweep needs 1 <= m <= {npoles} shifts and as many new poles, got {m} and {}",
            new_poles.len()
        )));
    }
    if m == 1 {
        return rqz_step_in(pair, lo, hi, &shifts[0], &new_poles[0]);
    }
    let mut swaps = 0;
    // introduction: shift j enters at the top and the j shifts before it move down one slot
    for (j, sigma) in shifts.iter().enumerate() {
        change_first_pole_in(pair, lo, sigma)?;
        if j + 1 < m {
            for p in (lo..=lo + j).rev() {
                swap_poles(pair, p)?;
                swaps += 1;
            }
        }
    }
    // chase rounds: the block at lo+s..lo+s+m-1 moves down by one position
    for s in 0..npoles - m {
        swaps += batched_round(pair, lo + s, m)?;
    }
    // finalization: the j-th new pole replaces the bottom shift and rises m-1-j slots
    for (j, xi) in new_poles.iter().enumerate() {
        change_last_pole_in(pair, hi, xi)?;
        let rise = m - 1 - j;
        for k in 0..rise {
            swap_poles(pair, hi - 2 - k)?;
            swaps += 1;
        }
    }
    Ok(swaps)
}

/// The swaps at positions `s+m-1, ..., s` applied to a local copy of the touched
/// block; the accumulated rotations then update the rest of A, B, Q and Z at once.
fn batched_round(pair: &mut HessenbergPair, s: usize, m: usize) -> Result<usize> {
    let n = pair.cols();
    let (r0, r1) = (s, s + m + 2);
    let (c0, c1) = (s, s + m + 1);
    let mut local = HessenbergPair::new_unchecked(pair.a.submatrix(r0..r1, c0..c1), pair.b.submatrix(r0..r1, c0..c1))?
        .with_accumulator();
    for q in (0..m).rev() {
        swap_poles(&mut local, q)?;
    }
    let acc = local.acc.take().expect("local accumulator");
    let qh = acc.q.adjoint();
    for (global, loc) in [(&mut pair.a, &local.a), (&mut pair.b, &local.b)] {
        write_block(global, r0, c0, loc);
        if c1 < n {
            let right = qh.matmul(&global.submatrix(r0..r1, c1..n));
            write_block(global, r0, c1, &right);
        }
        if r0 > 0 {
            let above = global.submatrix(0..r0, c0..c1).matmul(&acc.z);
            write_block(global, 0, c0, &above);
        }
    }
    if let Some(g) = pair.acc.as_mut() {
        let rows = g.q.rows();
        let qcols = g.q.submatrix(0..rows, r0..r1).matmul(&acc.q);
        write_block(&mut g.q, 0, r0, &qcols);
        let rows = g.z.rows();
        let zcols = g.z.submatrix(0..rows, c0..c1).matmul(&acc.z);
        write_block(&mut g.z, 0, c0, &zcols);
    }
    let lc = local.counters;
    pair.counters.row_rotations += lc.row_rotations;
    pair.counters.col_rotations += lc.col_rotations;
    pair.counters.swaps += lc.swaps;
    pair.counters.near_equal_swaps += lc.near_equal_swaps;
    pair.counters.unstable_swaps += lc.unstable_swaps;
    Ok(m)
}

fn write_block(m: &mut ComplexMatrix, r0: usize, c0: usize, blk: &ComplexMatrix) {
    for j in 0..blk.cols() {
        for i in 0..blk.rows() {
            m[(r0 + i, c0 + j)] = blk[(i, j)];
        }
    }
}

/// How new poles are chosen at the end of each RQZ step.
#[derive(Clone, Debug, PartialEq)]
pub enum PoleStrategy {
    Infinity,
    Zero,
    /// Uniform in the unit disk scaled by `||A||_F / ||B||_F`.
    Random { seed: u64 },
    /// The eigenvalue of the leading 2x2 block closest to its `(1,1)` entry.
    Wilkinson,
    /// Eigenvalues of the leading `m x m` block.
    Rayleigh(usize),
    /// Poles taken cyclically from the given list.
    UserList(Vec<ProjectivePoint>),
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub pole: PoleStrategy,
    /// Number of shifts per sweep; 1 means single-shift steps.
    pub packed: usize,
    /// Constant of the interior deflation criterion.
    pub c: f64,
    /// Iteration budget per eigenvalue.
    pub max_it: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { pole: PoleStrategy::Infinity, packed: 1, c: 1.0, max_it: DEFAULT_MAX_IT }
    }
}

impl SolveOptions {
    pub fn with_pole(pole: PoleStrategy) -> Self {
        SolveOptions { pole, ..Self::default() }
    }
}

#[derive(Clone, Debug, Default)]
pub struct IterationStats {
    /// Shifts applied; a packed sweep with m shifts counts m.
    pub iterations: usize,
    pub swaps: usize,
    pub deflations: Vec<(usize, DeflationKind)>,
    pub iterations_per_eigenvalue: f64,
    pub swaps_per_n2: f64,
    pub exceptional_shifts: usize,
    pub perturbed_shifts: usize,
    pub unstable_swaps: usize,
}

#[derive(Clone, Debug)]
pub struct SchurResult {
    pub s: ComplexMatrix,
    pub t: ComplexMatrix,
    pub q: ComplexMatrix,
    pub z: ComplexMatrix,
    pub eigenvalues: Vec<ProjectivePoint>,
    pub stats: IterationStats,
}

impl SchurResult {
    /// Relative 2-norm backward errors `||S - Q^H A0 Z|| / ||A0||` and likewise for T.
    pub fn backward_errors(&self, a0: &ComplexMatrix, b0: &ComplexMatrix) -> (f64, f64) {
        (backward_error(&self.s, &self.q, a0, &self.z), backward_error(&self.t, &self.q, b0, &self.z))
    }
}

/// Inspection hook called after every RQZ step or sweep.
pub trait SolveObserver {
    fn after_step(&mut self, _pair: &HessenbergPair, _lo: usize, _hi: usize) {}
}

impl SolveObserver for () {}

struct PoleSource {
    strategy: PoleStrategy,
    rng: ChaCha8Rng,
    cursor: usize,
    scale: f64,
}

impl PoleSource {
    fn new(strategy: &PoleStrategy, scale: f64) -> Self {
        let seed = match strategy {
            PoleStrategy::Random { seed } => *seed,
            _ => 0,
        };
        PoleSource { strategy: strategy.clone(), rng: ChaCha8Rng::seed_from_u64(seed), cursor: 0, scale }
    }

    fn random(&mut self) -> ProjectivePoint {
        let r = self.rng.random::<f64>().sqrt() * self.scale;
        let t = self.rng.random::<f64>() * std::f64::consts::TAU;
        ProjectivePoint::finite(C64::from_polar(r, t))
    }

    /// Poles used for the initial reduction.
    fn initial(&mut self, count: usize) -> Vec<ProjectivePoint> {
        match &self.strategy {
            PoleStrategy::Zero => vec![ProjectivePoint::ZERO; count],
            PoleStrategy::Random { .. } => (0..count).map(|_| self.random()).collect(),
            PoleStrategy::UserList(list) if !list.is_empty() => {
                let out = (0..count).map(|k| list[(self.cursor + k) % list.len()]).collect();
                self.cursor += count;
                out
            }
            _ => vec![ProjectivePoint::INFINITY; count],
        }
    }

    fn next(&mut self, pair: &HessenbergPair, lo: usize, hi: usize) -> Result<ProjectivePoint> {
        Ok(match &self.strategy {
            PoleStrategy::Infinity => ProjectivePoint::INFINITY,
            PoleStrategy::Zero => ProjectivePoint::ZERO,
            PoleStrategy::Random { .. } => self.random(),
            PoleStrategy::Wilkinson => wilkinson_pole_in(pair, lo),
            PoleStrategy::Rayleigh(m) => {
                let m = (*m).clamp(1, hi - lo + 1);
                let target = ProjectivePoint::new(pair.a[(lo, lo)], pair.b[(lo, lo)]).ok();
                let roots = block_eigenvalues(pair, lo, m)?;
                match target {
                    Some(t) => *roots
                        .iter()
                        .min_by(|x, y| chordal_distance(x, &t).total_cmp(&chordal_distance(y, &t)))
                        .expect("nonempty block"),
                    None => roots[0],
                }
            }
            PoleStrategy::UserList(list) => {
                if list.is_empty() {
                    ProjectivePoint::INFINITY
                } else {
                    self.cursor += 1;
                    list[(self.cursor - 1) % list.len()]
                }
            }
        })
    }

    fn next_block(&mut self, pair: &HessenbergPair, lo: usize, hi: usize, m: usize) -> Result<Vec<ProjectivePoint>> {
        match self.strategy {
            PoleStrategy::Wilkinson | PoleStrategy::Rayleigh(_) => block_eigenvalues(pair, lo, m),
            _ => (0..m).map(|_| self.next(pair, lo, hi)).collect(),
        }
    }
}

/// Eigenvalues of the diagonal `m x m` block starting at `r`.
fn block_eigenvalues(pair: &HessenbergPair, r: usize, m: usize) -> Result<Vec<ProjectivePoint>> {
    match m {
        1 => Ok(vec![ProjectivePoint::new(pair.a[(r, r)], pair.b[(r, r)])?]),
        2 => {
            let (a2, b2) = block(pair, r);
            Ok(eig_2x2_pencil(&a2, &b2)?.to_vec())
        }
        _ => {
            let a = pair.a.submatrix(r..r + m, r..r + m);
            let b = pair.b.submatrix(r..r + m, r..r + m);
            Ok(rqz_solve(&a, &b, &SolveOptions::default())?.eigenvalues)
        }
    }
}

fn guard_shift(pair: &HessenbergPair, lo: usize, hi: usize, shift: ProjectivePoint, scale: f64, stats: &mut IterationStats) -> ProjectivePoint {
    let clashes = |s: &ProjectivePoint| {
        (lo..hi).any(|p| pair.pole(p).map(|x| chordal_distance(&x, s) <= SHIFT_POLE_GUARD).unwrap_or(false))
    };
    if !clashes(&shift) {
        return shift;
    }
    stats.perturbed_shifts += 1;
    let mut s = shift;
    for k in 1..=8 {
        s = shift.perturbed(SHIFT_PERTURBATION * k as f64, scale);
        if !clashes(&s) {
            break;
        }
    }
    s
}

/// Computes the generalized Schur form of `(A, B)`.
pub fn rqz_solve(a: &ComplexMatrix, b: &ComplexMatrix, opts: &SolveOptions) -> Result<SchurResult> {
    rqz_solve_observed(a, b, opts, &mut ())
}

/// [`rqz_solve`] with an observer called after every step.
pub fn rqz_solve_observed(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    opts: &SolveOptions,
    observer: &mut dyn SolveObserver,
) -> Result<SchurResult> {
    let n = a.rows();
    let scale = pencil_scale(a, b);
    let mut source = PoleSource::new(&opts.pole, scale);
    let poles = source.initial(n.saturating_sub(1));
    let (pair, report) = if n == 0 {
        return Err(Error::InvalidInput("empty pencil".into()));
    } else {
        reduce_to_hessenberg_pair(a, b, &poles)?
    };
    let mut stats = IterationStats::default();
    stats.deflations.extend(report.deflations.iter().map(|d| (d.position, d.kind)));
    iterate(pair, opts, source, scale, stats, observer)
}

/// Runs the iteration on a Hessenberg pair that is already reduced.
pub fn rqz_solve_pair(pair: HessenbergPair, opts: &SolveOptions, observer: &mut dyn SolveObserver) -> Result<SchurResult> {
    if pair.rows() != pair.cols() {
        return Err(Error::DimensionMismatch("the Schur form needs a square pair".into()));
    }
    let scale = pencil_scale(&pair.a, &pair.b);
    let source = PoleSource::new(&opts.pole, scale);
    let pair = if pair.acc.is_some() { pair } else { pair.with_accumulator() };
    iterate(pair, opts, source, scale, IterationStats::default(), observer)
}

fn pencil_scale(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let (na, nb) = (a.frobenius_norm(), b.frobenius_norm());
    if na > 0.0 && nb > 0.0 {
        na / nb
    } else {
        1.0
    }
}

fn iterate(
    mut pair: HessenbergPair,
    opts: &SolveOptions,
    mut source: PoleSource,
    scale: f64,
    mut stats: IterationStats,
    observer: &mut dyn SolveObserver,
) -> Result<SchurResult> {
    let n = pair.cols();
    if !pair.a.is_finite() || !pair.b.is_finite() {
        return Err(Error::InvalidInput("pencil contains non-finite entries".into()));
    }
    let na = pair.a.frobenius_norm();
    let nb = pair.b.frobenius_norm();
    let wa = if na > 0.0 { 1.0 / na } else { 1.0 };
    let wb = if nb > 0.0 { 1.0 / nb } else { 1.0 };
    let budget = opts.max_it.max(1) * n;
    let unstable_before = pair.counters.unstable_swaps;
    let mut exceptional = ChaCha8Rng::seed_from_u64(0x5eed);

    // windows separated by exact zeros on both subdiagonals
    let mut windows = Vec::new();
    let mut start = 0;
    for p in 0..n.saturating_sub(1) {
        if pair.a[(p + 1, p)] == ZERO && pair.b[(p + 1, p)] == ZERO {
            windows.push((start, p));
            start = p + 1;
        }
    }
    windows.push((start, n - 1));

    let mut since_deflation = 0;
    let mut singular_retries = 0;
    while let Some((mut lo, mut hi)) = windows.pop() {
        loop {
            if lo >= hi {
                break;
            }
            if let Some(p) = (lo..hi).rev().find(|&p| interior_negligible(&pair, p, opts.c)) {
                pair.a[(p + 1, p)] = ZERO;
                pair.b[(p + 1, p)] = ZERO;
                stats.deflations.push((p, DeflationKind::Interior));
                windows.push((lo, p));
                lo = p + 1;
                since_deflation = 0;
                continue;
            }
            if exterior_deflation_in(&mut pair, lo, hi, End::Bottom, wa, wb).is_some() {
                stats.deflations.push((hi - 1, DeflationKind::ExteriorBottom));
                hi -= 1;
                since_deflation = 0;
                continue;
            }
            if exterior_deflation_in(&mut pair, lo, hi, End::Top, wa, wb).is_some() {
                stats.deflations.push((lo, DeflationKind::ExteriorTop));
                lo += 1;
                since_deflation = 0;
                continue;
            }
            if stats.iterations >= budget {
                return Err(Error::NoConvergence { lo, hi, iterations: stats.iterations });
            }

            since_deflation += 1;
            let npoles = hi - lo;
            let m = opts.packed.max(1);
            let result = if m > 1 && npoles >= 2 * m {
                let shifts = block_eigenvalues(&pair, hi + 1 - m, m)?;
                let shifts: Vec<_> =
                    shifts.into_iter().map(|s| guard_shift(&pair, lo, hi, s, scale, &mut stats)).collect();
                let new_poles = source.next_block(&pair, lo, hi, m)?;
                stats.iterations += m;
                tightly_packed_sweep_in(&mut pair, lo, hi, &shifts, &new_poles)
            } else {
                let shift = if since_deflation % EXCEPTIONAL_PERIOD == 0 {
                    stats.exceptional_shifts += 1;
                    let local = pencil_scale(
                        &pair.a.submatrix(lo..hi + 1, lo..hi + 1),
                        &pair.b.submatrix(lo..hi + 1, lo..hi + 1),
                    );
                    let r = exceptional.random::<f64>().sqrt() * local;
                    let t = exceptional.random::<f64>() * std::f64::consts::TAU;
                    ProjectivePoint::finite(C64::from_polar(r, t))
                } else {
                    wilkinson_shift_in(&pair, hi)
                };
                let shift = guard_shift(&pair, lo, hi, shift, scale, &mut stats);
                let new_pole = source.next(&pair, lo, hi)?;
                stats.iterations += 1;
                rqz_step_in(&mut pair, lo, hi, &shift, &new_pole)
            };
            match result {
                Ok(swaps) => {
                    stats.swaps += swaps;
                    singular_retries = 0;
                }
                Err(Error::SingularBlock { position }) => {
                    // a vanished pole means a deflation was missed; recheck
                    singular_retries += 1;
                    if singular_retries > 3 {
                        return Err(Error::SingularBlock { position });
                    }
                    log::debug!("singular block at {position}, rechecking deflations");
                }
                Err(e) => return Err(e),
            }
            observer.after_step(&pair, lo, hi);
        }
    }

    stats.swaps_per_n2 = stats.swaps as f64 / (n * n) as f64;
    stats.iterations_per_eigenvalue = stats.iterations as f64 / n as f64;
    stats.unstable_swaps = pair.counters.unstable_swaps - unstable_before;
    let mut eigenvalues = Vec::with_capacity(n);
    for i in 0..n {
        let (s, t) = (pair.a[(i, i)], pair.b[(i, i)]);
        eigenvalues.push(
            ProjectivePoint::new(s, t)
                .map_err(|_| Error::SingularPencil(format!("s_ii = t_ii = 0 at index {i}")))?,
        );
    }
    let acc = pair.acc.take().expect("accumulator");
    Ok(SchurResult { s: pair.a, t: pair.b, q: acc.q, z: acc.z, eigenvalues, stats })
}

#[derive(Clone, Debug)]
pub struct FilterReport {
    /// `|q(lambda_i)|^s` in input order; infinite when an eigenvalue hits a pole.
    pub values: Vec<f64>,
    /// The values in ascending order.
    pub sorted: Vec<f64>,
    pub min: f64,
    /// `|q(lambda_1)^s| / |q(lambda_2)^s|` after sorting.
    pub bottom_factor: f64,
    /// `|q(lambda_{n-1})^s| / |q(lambda_n)^s|` after sorting.
    pub top_factor: f64,
}

/// Magnitudes of the rational filter `q(z) = prod (z - rho_i) / prod (z - xi_j)`
/// raised to the power `s`. Infinite poles and shifts contribute no factor.
pub fn convergence_factor_report(
    eigenvalues: &[C64],
    poles: &[ProjectivePoint],
    shifts: &[ProjectivePoint],
    s: u32,
) -> FilterReport {
    let values: Vec<f64> = eigenvalues
        .iter()
        .map(|&z| {
            if s == 0 {
                return 1.0;
            }
            let mut v = 1.0;
            for rho in shifts.iter().filter_map(|r| r.to_complex()) {
                v *= (z - rho).norm();
            }
            for xi in poles.iter().filter_map(|x| x.to_complex()) {
                let d = (z - xi).norm();
                if d == 0.0 {
                    return f64::INFINITY;
                }
                v /= d;
            }
            v.powi(s as i32)
        })
        .collect();
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let ratio = |x: f64, y: f64| if x == y { 1.0 } else { x / y };
    let k = sorted.len();
    let (bottom_factor, top_factor) =
        if k >= 2 { (ratio(sorted[0], sorted[1]), ratio(sorted[k - 2], sorted[k - 1])) } else { (1.0, 1.0) };
    FilterReport { min: sorted.first().copied().unwrap_or(1.0), values, sorted, bottom_factor, top_factor }
}
