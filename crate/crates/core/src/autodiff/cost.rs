//! Floating-point operation counts per primitive.
//!
//! The graph charges these while executing a forward pass and the analytic
//! complexity counter charges the same amounts from shapes alone, so the two
//! can be checked against each other.

/// `[m×k]·[k×n]`: one multiply and one add per inner-product term.
pub const fn matmul(m: u64, k: u64, n: u64) -> u64 {
    2 * m * k * n
}

/// add, sub, mul, scale, relu, exp, tanh, sigmoid.
pub const fn elementwise(n: u64) -> u64 {
    n
}

/// `sqrt(x + eps)`: one add and one root.
pub const fn sqrt_eps(n: u64) -> u64 {
    2 * n
}

/// Row softmax: max-compare, subtract, exp, accumulate, divide.
pub const fn softmax(n: u64) -> u64 {
    5 * n
}

/// Normalisation over `groups` groups holding `n` elements in total:
/// mean, centre, square, variance accumulate, scale per element, plus
/// eps-add, root and reciprocal per group.
pub const fn layer_norm(n: u64, groups: u64) -> u64 {
    5 * n + 3 * groups
}

/// Depthwise 1-D convolution producing `outputs` values with `taps` taps each.
pub const fn depthwise_conv(outputs: u64, taps: u64) -> u64 {
    2 * outputs * taps
}

/// Full reduction of `n` elements (`mean` adds one division).
pub const fn sum(n: u64) -> u64 {
    n
}

pub const fn mean(n: u64) -> u64 {
    n + 1
}
