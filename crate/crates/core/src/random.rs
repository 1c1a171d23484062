//! Seeded random objects for tests and experiment sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hilbert::{c, ComplexMatrix, StateVector, C64};

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    c(x, y)
}

pub fn random_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim, |_, _| gaussian_complex(rng))
}

pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
    let v = StateVector::from_fn(dim, |_, _| gaussian_complex(rng));
    let n = v.norm();
    v.unscale(n)
}

pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = random_matrix(dim, rng);
    (&g + g.adjoint()).scale(0.5)
}

/// `G G† / Tr(G G†)` for a complex Gaussian `G`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = random_matrix(dim, rng);
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    rho.unscale(tr)
}

/// Haar unitary: QR of a complex Gaussian matrix with the phases of `R`'s
/// diagonal moved into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let qr = random_matrix(dim, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// A normalized pair `(a0, a1)` with both entries drawn from a complex Gaussian.
pub fn random_amplitudes<R: Rng + ?Sized>(rng: &mut R) -> (C64, C64) {
    let a0 = gaussian_complex(rng);
    let a1 = gaussian_complex(rng);
    let n = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
    (a0 / n, a1 / n)
}
