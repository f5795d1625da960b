//! Seeded random streams and random instance generators.
//!
//! Streams are keyed by `(seed, label, instance)` so that a check ensemble
//! produces the same instances regardless of how it is sharded across workers.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{CMatrix, CVector};

pub type Stream = ChaCha8Rng;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Independent stream for instance `id` of the ensemble called `label`.
pub fn stream(seed: u64, label: &str, id: u64) -> Stream {
    let key = splitmix(splitmix(seed ^ fnv1a(label)).wrapping_add(id));
    ChaCha8Rng::seed_from_u64(key)
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(normal(rng), normal(rng))
}

/// Haar-random unit vector in `C^dim`: normalized complex Gaussian.
pub fn haar_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVector {
    loop {
        let v = DVector::from_fn(dim, |_, _| complex_normal(rng));
        let norm = v.norm();
        if norm > 1e-300 {
            return v.unscale(norm);
        }
    }
}

/// Hermitian matrix with GUE-like entries.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| complex_normal(rng));
    (&g + g.adjoint()).unscale(2.0)
}

/// Random full-rank density matrix `G G^dag / tr(G G^dag)` from a Ginibre matrix.
pub fn density_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| complex_normal(rng));
    let rho = &g * g.adjoint();
    let tr = (0..dim).map(|i| rho[(i, i)].re).sum::<f64>();
    rho.unscale(tr)
}

/// Real vector with independent standard normal entries.
pub fn normal_vec<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| normal(rng)).collect()
}
