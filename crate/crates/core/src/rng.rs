//! Seed streams shared by all solvers.
//!
//! Restart `r` of a run seeded with `s` always draws from ChaCha8 stream `r`
//! of key `s`, so two solvers given the same seed start from the same points
//! regardless of thread scheduling.

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

pub fn standard_normal(rng: &mut ChaCha8Rng, len: usize) -> Array1<f64> {
    Array1::from_shape_simple_fn(len, || StandardNormal.sample(rng))
}

/// A standard normal draw rescaled to unit norm.
pub fn random_unit(rng: &mut ChaCha8Rng, len: usize) -> Array1<f64> {
    let mut z = standard_normal(rng, len);
    let norm = z.dot(&z).sqrt();
    if norm > 0.0 {
        z /= norm;
    } else if len > 0 {
        z[0] = 1.0;
    }
    z
}
