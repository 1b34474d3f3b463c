//! Seeded synthetic pencils: dense random pairs and pairs with a planted spectrum.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernels::{ComplexMatrix, C64};
use crate::oracles::{from_dmatrix, to_dmatrix};

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemKind {
    /// Independent complex Gaussian entries in A and B.
    Random,
    /// Half of the eigenvalues within distance 1 of each center.
    TwoCluster { c1: C64, c2: C64 },
    /// The listed eigenvalues; the list length must equal `n`.
    Planted(Vec<C64>),
}

fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn gaussian_matrix(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| gaussian(rng))
}

/// Haar-distributed unitary: Q factor of a Gaussian matrix with the phases of R removed.
pub fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let qr = to_dmatrix(&gaussian_matrix(n, rng)).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q: DMatrix<C64> = q;
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    from_dmatrix(&q)
}

/// `U S V` and `U T V` with random unitaries, upper triangular `S`, `T` and
/// `s_ii / t_ii = eigs[i]`. `coupling` scales the strictly upper parts.
pub fn planted_pencil(eigs: &[C64], coupling: f64, rng: &mut ChaCha8Rng) -> (ComplexMatrix, ComplexMatrix) {
    let n = eigs.len();
    let scale = coupling / (n.max(1) as f64).sqrt();
    let mut s = ComplexMatrix::zeros(n, n);
    let mut t = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..j {
            s[(i, j)] = gaussian(rng) * scale;
            t[(i, j)] = gaussian(rng) * scale;
        }
        s[(j, j)] = eigs[j];
        t[(j, j)] = C64::new(1.0, 0.0);
    }
    let u = random_unitary(n, rng);
    let v = random_unitary(n, rng);
    (u.matmul(&s).matmul(&v), u.matmul(&t).matmul(&v))
}

/// `n / 2` points uniform in the disk of radius `0.9` around `c1`, the rest around `c2`.
pub fn two_cluster_eigenvalues(n: usize, c1: C64, c2: C64, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..n)
        .map(|k| {
            let c = if k < n / 2 { c1 } else { c2 };
            let r = 0.9 * rng.random::<f64>().sqrt();
            c + C64::from_polar(r, rng.random::<f64>() * std::f64::consts::TAU)
        })
        .collect()
}

/// A reproducible test pencil of size `n`.
pub fn generate_problem(kind: &ProblemKind, n: usize, seed: u64) -> Result<(ComplexMatrix, ComplexMatrix)> {
    if n < 2 {
        return Err(Error::InvalidInput("generated problems need n >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(match kind {
        ProblemKind::Random => {
            let a = gaussian_matrix(n, &mut rng);
            (a, gaussian_matrix(n, &mut rng))
        }
        ProblemKind::TwoCluster { c1, c2 } => {
            let eigs = two_cluster_eigenvalues(n, *c1, *c2, &mut rng);
            planted_pencil(&eigs, 1.0, &mut rng)
        }
        ProblemKind::Planted(eigs) => {
            if eigs.len() != n {
                return Err(Error::DimensionMismatch(format!("{} planted eigenvalues for n = {n}", eigs.len())));
            }
            planted_pencil(eigs, 1.0, &mut rng)
        }
    })
}
