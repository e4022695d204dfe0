//! Deterministic sampling utilities: seeded RNG streams, random matrix
//! ensembles, and a low-discrepancy sequence for dual sample sets.
//!
//! Every randomized certification in the crate draws from `rng_for(seed, k)`
//! with a fixed stream index k, so results are reproducible bit-for-bit and
//! independent of how work is split across threads.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::sym::{HermMatrix, SymMatrix};

/// SplitMix64 finalizer; decorrelates (seed, stream) pairs.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Deterministic RNG for stream `k` of master seed `seed`.
pub fn rng_for(seed: u64, k: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed ^ mix(k)))
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Standard normal via Box-Muller (avoids a distribution dependency).
pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| normal(rng));
        let n = v.norm();
        if n > 1e-8 {
            return v / n;
        }
    }
}

/// Random Hermitian matrix with entries of the given scale.
pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> HermMatrix {
    let m = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(uniform(rng, -scale, scale), uniform(rng, -scale, scale))
    });
    HermMatrix::new(m)
}

/// Random real symmetric matrix.
pub fn random_sym(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> SymMatrix {
    let m = DMatrix::from_fn(dim, dim, |_, _| uniform(rng, -scale, scale));
    SymMatrix::new(m)
}

/// Random symmetric positive semidefinite matrix AᵀA of the given scale.
pub fn random_psd_sym(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> SymMatrix {
    let a = DMatrix::from_fn(dim, dim, |_, _| uniform(rng, -scale, scale));
    SymMatrix::new(a.transpose() * a / (dim as f64).sqrt())
}

/// Haar-ish random orthogonal matrix via QR of a Gaussian, with the sign of
/// each R diagonal fixed so the result is a deterministic function of the RNG.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| normal(rng));
    let qr = a.qr();
    let r = qr.r();
    let mut q = qr.q();
    for i in 0..dim {
        if r[(i, i)] < 0.0 {
            for k in 0..dim {
                q[(k, i)] = -q[(k, i)];
            }
        }
    }
    q
}

/// Random unitary matrix via complex QR with the same sign fix.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(n, n, |_, _| Complex64::new(normal(rng), normal(rng)));
    let qr = a.qr();
    let r = qr.r();
    let mut q = qr.q();
    for i in 0..n {
        let d = r[(i, i)];
        let norm = d.norm();
        if norm > 0.0 {
            let phase = d / Complex64::new(norm, 0.0);
            let corr = phase.conj();
            for k in 0..n {
                q[(k, i)] *= corr;
            }
        }
    }
    q
}

/// Random symmetric matrix with prescribed eigenvalue range [lo, hi].
pub fn random_sym_in_box(rng: &mut ChaCha8Rng, dim: usize, lo: f64, hi: f64) -> SymMatrix {
    let q = random_orthogonal(rng, dim);
    let d = DVector::from_fn(dim, |_, _| uniform(rng, lo, hi));
    SymMatrix::new(&q * DMatrix::from_diagonal(&d) * q.transpose())
}

/// Additive-recurrence (Weyl) low-discrepancy point in [0,1)^dim for index i.
/// Deterministic, dimension up to the number of provided irrationals.
pub fn weyl_point(i: usize, dim: usize) -> Vec<f64> {
    // Square roots of the first primes make an independent irrational family.
    const PRIMES: [f64; 40] = [
        2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0, 23.0, 29.0, 31.0, 37.0, 41.0, 43.0, 47.0,
        53.0, 59.0, 61.0, 67.0, 71.0, 73.0, 79.0, 83.0, 89.0, 97.0, 101.0, 103.0, 107.0, 109.0,
        113.0, 127.0, 131.0, 137.0, 139.0, 149.0, 151.0, 157.0, 163.0, 167.0, 173.0,
    ];
    assert!(dim <= PRIMES.len(), "weyl_point supports up to 40 dims");
    (0..dim)
        .map(|d| {
            let alpha = PRIMES[d].sqrt();
            let x = alpha * (i as f64 + 1.0);
            x - x.floor()
        })
        .collect()
}

/// Deterministic orthogonal matrix for low-discrepancy index i: a product of
/// Givens rotations with Weyl-sequence angles.
pub fn weyl_orthogonal(i: usize, dim: usize) -> DMatrix<f64> {
    let n_pairs = dim * (dim - 1) / 2;
    let angles = weyl_point(i.wrapping_mul(2654435761) % 1_000_003, n_pairs.max(1));
    let mut q = DMatrix::identity(dim, dim);
    let mut k = 0;
    for a in 0..dim {
        for b in (a + 1)..dim {
            let theta = angles[k % angles.len()] * std::f64::consts::PI;
            k += 1;
            let (s, c) = theta.sin_cos();
            // Right-multiply by the (a, b) rotation.
            for row in 0..dim {
                let x = q[(row, a)];
                let y = q[(row, b)];
                q[(row, a)] = c * x - s * y;
                q[(row, b)] = s * x + c * y;
            }
        }
    }
    q
}

/// Deterministic, thread-count-independent parallel map: results land in
/// index order no matter how rayon schedules the work.
pub fn par_map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}
