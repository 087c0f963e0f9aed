//! Seeded RNG streams.
//!
//! All randomness in the crate flows through ChaCha8 with an explicit seed
//! and stream id, so sub-streams (planted blocks, noise, permutations) stay
//! independent: changing the noise draw never perturbs the planted blocks.

use ndarray::Array2;
use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Returns the RNG for (`seed`, `stream`).
pub fn stream(seed: u64, stream_id: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Matrix with iid uniform [0,1) entries, filled row by row.
pub fn uniform_matrix(rng: &mut StreamRng, rows: usize, cols: usize) -> Array2<f64> {
    let dist = Uniform::new(0.0, 1.0);
    Array2::from_shape_fn((rows, cols), |_| dist.sample(rng))
}

/// Matrix with iid standard normal entries.
pub fn normal_matrix(rng: &mut StreamRng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| {
        // Box-Muller keeps us off rand_distr for one distribution.
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    })
}

/// Fisher-Yates permutation of 0..n.
pub fn permutation(rng: &mut StreamRng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        p.swap(i, j);
    }
    p
}
