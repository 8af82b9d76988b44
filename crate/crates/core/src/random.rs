//! Seeded sampling helpers. Every sampler takes its generator explicitly.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{CMatrix, CVector};

pub type Rng = ChaCha20Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Independent sub-seed for restart or probe `index` (splitmix64 finalizer).
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn complex_normal(rng: &mut Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre(rows: usize, cols: usize, rng: &mut Rng) -> CMatrix {
    let mut m = CMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_normal(rng);
        }
    }
    m
}

pub fn random_hermitian(d: usize, rng: &mut Rng) -> CMatrix {
    let g = ginibre(d, d, rng);
    (&g + g.adjoint()).scale(0.5)
}

/// Unit vector drawn from the unitarily invariant measure.
pub fn random_unit_vector(d: usize, rng: &mut Rng) -> CVector {
    let v = CVector::from_iterator(d, (0..d).map(|_| complex_normal(rng)));
    let n = v.norm();
    v.unscale(n)
}

/// Haar-random unitary (QR of a Ginibre matrix with phase correction).
pub fn random_unitary(d: usize, rng: &mut Rng) -> CMatrix {
    random_isometry(d, d, rng)
}

/// Haar-random isometry `rows x cols`, `rows >= cols`.
pub fn random_isometry(rows: usize, cols: usize, rng: &mut Rng) -> CMatrix {
    assert!(rows >= cols);
    let g = ginibre(rows, cols, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..cols {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..rows {
            q[(i, k)] *= phase;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isometry_is_isometric() {
        let mut rng = rng_from_seed(1);
        let v = random_isometry(6, 2, &mut rng);
        let g = v.adjoint() * &v;
        assert!(crate::linalg::max_diff(&g, &CMatrix::identity(2, 2)) < 1e-12);
    }

    #[test]
    fn sub_seeds_differ() {
        let a: Vec<u64> = (0..8).map(|i| sub_seed(42, i)).collect();
        for i in 0..8 {
            for j in 0..i {
                assert_ne!(a[i], a[j]);
            }
        }
        assert_eq!(sub_seed(42, 3), sub_seed(42, 3));
    }
}
