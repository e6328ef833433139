//! Standard normal CDF.
//!
//! `erfc` uses the Chebyshev-fitted exponential form from Numerical Recipes
//! (`erfcc`), whose fractional error is below `1.2e-7` everywhere:
//!
//! `erfc(z) ~ t exp(-z^2 + P(t))`, `t = 1 / (1 + z/2)`, `z >= 0`,
//!
//! with `P` the degree-9 polynomial in [`ERFC_COEFFS`]. Negative arguments
//! use `erfc(-z) = 2 - erfc(z)`.

/// Coefficients of `P(t)`, constant term first.
pub const ERFC_COEFFS: [f64; 10] = [
    -1.265_512_23,
    1.000_023_68,
    0.374_091_96,
    0.096_784_18,
    -0.186_288_06,
    0.278_868_07,
    -1.135_203_98,
    1.488_515_87,
    -0.822_152_23,
    0.170_872_77,
];

/// Complementary error function, fractional error below `1.2e-7`.
pub fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = ERFC_COEFFS.iter().rev().fold(0.0, |acc, &c| acc * t + c);
    let r = t * (-z * z + poly).exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// Standard normal CDF with absolute error below `1e-7`.
///
/// Each tail is taken from `erfc` directly so small tail probabilities keep
/// their relative accuracy.
pub fn normal_cdf(x: f64) -> f64 {
    let z = x / std::f64::consts::SQRT_2;
    if x <= 0.0 {
        0.5 * erfc(-z)
    } else {
        1.0 - 0.5 * erfc(z)
    }
}
