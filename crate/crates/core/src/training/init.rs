use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;
use crate::tensor::Array;

/// Fan-in and fan-out of the matricised shape: product of the leading
/// dimensions by the last one.
pub fn fans(shape: &[usize]) -> (usize, usize) {
    match shape.split_last() {
        Some((&last, lead)) if !lead.is_empty() => (lead.iter().product(), last),
        Some((&last, _)) => (1, last),
        None => (1, 1),
    }
}

/// `√6 / √(n_in + n_out)`.
pub fn glorot_bound(shape: &[usize]) -> f64 {
    let (fan_in, fan_out) = fans(shape);
    6f64.sqrt() / ((fan_in + fan_out) as f64).sqrt()
}

/// I.i.d. `U[−b, b]` with the Glorot bound `b`, drawn from `rng`.
pub fn glorot_uniform<S: Scalar, R: Rng>(rng: &mut R, shape: &[usize]) -> Array<S> {
    let b = glorot_bound(shape);
    Array::from_fn(shape, |_| S::lit(rng.random_range(-b..=b)))
}

/// Glorot-uniform array from its own seed.
pub fn init_glorot<S: Scalar>(shape: &[usize], seed: u64) -> Array<S> {
    glorot_uniform(&mut ChaCha8Rng::seed_from_u64(seed), shape)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_and_determinism() {
        assert_eq!(fans(&[3, 4, 5]), (12, 5));
        assert_eq!(fans(&[7]), (1, 7));
        let a: Array<f64> = init_glorot(&[10, 20], 4);
        let b = 6f64.sqrt() / 30f64.sqrt();
        assert!(a.data().iter().all(|v| v.abs() <= b));
        assert_eq!(a, init_glorot(&[10, 20], 4));
        assert_ne!(a, init_glorot(&[10, 20], 5));
    }
}
