//! Fixture builders shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wearnet_core::cnn::Tensor4;

pub fn random_window(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn random_tensor(n: usize, c: usize, h: usize, w: usize, seed: u64) -> Tensor4 {
    let data = random_window(n * c * h * w, seed);
    Tensor4::from_vec(n, c, h, w, data).expect("consistent dims")
}
