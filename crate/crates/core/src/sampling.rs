//! Seeded point generators shared by the certifiers.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex Gaussian point in ℂ^m (real and imaginary parts i.i.d. N(0, 1)).
pub fn complex_gaussian(rng: &mut SampleRng, m: usize) -> Vec<Complex64> {
    (0..m).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect()
}

/// Uniform point in an axis-aligned box given as `(lo, hi)` per coordinate.
pub fn uniform_in_box(rng: &mut SampleRng, bounds: &[(f64, f64)]) -> Vec<f64> {
    bounds.iter().map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>()).collect()
}

pub fn to_complex(xi: &[f64], m: usize) -> Vec<Complex64> {
    (0..m).map(|k| Complex64::new(xi[2 * k], xi[2 * k + 1])).collect()
}
