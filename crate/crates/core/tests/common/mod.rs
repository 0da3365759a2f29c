#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use pgm_core::numerics::CMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re, im)
    })
}

/// Q factor of a complex Gaussian matrix.
pub fn random_unitary(d: usize, seed: u64) -> CMatrix {
    gaussian_matrix(d, d, seed).qr().q()
}

/// Principal square root of a positive definite matrix by the
/// Denman–Beavers iteration; uses only products and inverses.
pub fn sqrtm_denman_beavers(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = CMatrix::identity(n, n);
    for _ in 0..100 {
        let yi = y.clone().try_inverse().expect("invertible iterate");
        let zi = z.clone().try_inverse().expect("invertible iterate");
        let y_next = (&y + zi).scale(0.5);
        let z_next = (&z + yi).scale(0.5);
        let delta = (&y_next - &y).iter().map(|c| c.norm()).fold(0.0, f64::max);
        y = y_next;
        z = z_next;
        if delta < 1e-15 {
            break;
        }
    }
    y
}
