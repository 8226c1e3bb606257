//! Reproducible random streams.
//!
//! The generator is ChaCha with 8 rounds (`rand_chacha::ChaCha8Rng`), seeded
//! through `seed_from_u64`. Uniform variates take the top 53 bits of each
//! 64-bit output: `u = (x >> 11) · 2⁻⁵³ ∈ [0, 1)`. Gaussian variates use
//! Box–Muller on consecutive uniforms `(u1, u2)`:
//! `z0 = sqrt(−2 ln(1 − u1)) cos(2π u2)` is returned first and
//! `z1 = sqrt(−2 ln(1 − u1)) sin(2π u2)` is kept for the next call.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DenseMatrix;

#[derive(Clone, Debug)]
pub struct NormalStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        NormalStream {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn next_uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        let rad = (-2.0 * (1.0 - u1).ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(rad * s);
        rad * c
    }

    /// Gaussian matrix filled in row-major order.
    pub fn matrix(&mut self, rows: usize, cols: usize) -> DenseMatrix {
        let data = (0..rows * cols).map(|_| self.next_gaussian()).collect();
        DenseMatrix::new(rows, cols, data).expect("finite gaussian samples")
    }
}
