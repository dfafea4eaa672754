#![allow(dead_code)]

pub mod gradcheck;

use cfchanpred::tensor::Array;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_array(rng: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Array<f64> {
    Array::from_fn(shape, |_| rng.random_range(-scale..scale))
}

pub mod cli;
pub mod experiments;
pub mod oracles;
