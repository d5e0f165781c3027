//! Log-bucket index mapping.
//!
//! A value x > 0 lands in bucket `i = ceil(log_gamma(x))`, so bucket i covers
//! the half-open interval (gamma^(i-1), gamma^i]. The index is computed as
//! `ceil(ln x / ln gamma)` in double precision with no epsilon correction:
//! values within floating round-off of a boundary may land on either side,
//! but the mapping is deterministic for a given (x, gamma) bit pattern, which
//! is what the merge-equality guarantees rely on.

use crate::error::{Result, SketchError};

/// Log base for a relative-accuracy target: gamma = (1 + alpha) / (1 - alpha).
pub fn gamma_from_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SketchError::InvalidAlpha(alpha));
    }
    Ok((1.0 + alpha) / (1.0 - alpha))
}

/// Relative accuracy guaranteed by a log base: alpha = (gamma - 1) / (gamma + 1).
pub fn alpha_from_gamma(gamma: f64) -> Result<f64> {
    if !(gamma > 1.0) || !gamma.is_finite() {
        return Err(SketchError::InvalidGamma(gamma));
    }
    Ok((gamma - 1.0) / (gamma + 1.0))
}

/// Bucket key for a positive value under the given log base.
pub fn bucket_index(x: f64, gamma: f64) -> Result<i64> {
    if !(x > 0.0) {
        return Err(SketchError::NonPositiveValue(x));
    }
    Ok(bucket_index_ln(x, gamma.ln()))
}

/// Hot-path variant taking a precomputed `ln(gamma)`.
#[inline]
pub(crate) fn bucket_index_ln(x: f64, ln_gamma: f64) -> i64 {
    (x.ln() / ln_gamma).ceil() as i64
}

/// Representative value reported for bucket i: `2 * gamma^i / (gamma + 1)`.
///
/// This is the point with equal worst-case relative error against both bucket
/// ends, so every x in (gamma^(i-1), gamma^i] satisfies
/// `|estimate - x| <= alpha * x` with alpha = (gamma - 1) / (gamma + 1).
pub fn value_estimate(i: i64, gamma: f64) -> f64 {
    2.0 * pow_gamma(gamma, i) / (gamma + 1.0)
}

/// `gamma^i` for possibly large positive or negative integer exponents.
#[inline]
pub(crate) fn pow_gamma(gamma: f64, i: i64) -> f64 {
    if let Ok(exp) = i32::try_from(i) {
        gamma.powi(exp)
    } else {
        gamma.powf(i as f64)
    }
}

/// Key a bucket moves to when the whole store is collapsed pairwise:
/// `j = ceil(i / 2)`, the index of the same value under gamma squared.
#[inline]
pub fn collapse_key(i: i64) -> i64 {
    // Ceiling division by two without the +1 that could overflow i64::MAX.
    (i >> 1) + (i & 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    #[test]
    fn gamma_from_alpha_examples() {
        // alpha = 1/3 gives gamma = 2 as a rational identity; in doubles the
        // denominator 1 - 1/3 rounds one ulp away from 2/3, so allow that.
        let two = gamma_from_alpha(1.0 / 3.0).unwrap();
        assert!((two - 2.0).abs() <= 4.0 * f64::EPSILON, "got {two}");
        assert_eq!(gamma_from_alpha(0.5).unwrap(), 3.0);
        // Full-precision evaluation of (1.001 / 0.999).
        let expected = 1.001f64 / 0.999f64;
        assert_eq!(gamma_from_alpha(0.001).unwrap(), expected);
        assert!((expected - 1.002002002002002).abs() < 1e-15);
    }

    #[test]
    fn gamma_from_alpha_rejects_out_of_range() {
        for alpha in [0.0, 1.0, -1.0, 2.0, f64::NAN, f64::INFINITY] {
            assert!(gamma_from_alpha(alpha).is_err(), "alpha={alpha}");
        }
    }

    #[test]
    fn alpha_from_gamma_examples() {
        assert_eq!(alpha_from_gamma(2.0).unwrap(), 1.0 / 3.0);
        assert_eq!(alpha_from_gamma(3.0).unwrap(), 0.5);
    }

    #[test]
    fn alpha_from_gamma_rejects_out_of_range() {
        for gamma in [1.0, 0.5, -2.0, f64::NAN, f64::INFINITY] {
            assert!(alpha_from_gamma(gamma).is_err(), "gamma={gamma}");
        }
    }

    #[test]
    fn alpha_of_squared_gamma_matches_algebra() {
        // (gamma^2 - 1) / (gamma^2 + 1) == 2*alpha / (1 + alpha^2) for
        // gamma = (1+alpha)/(1-alpha); check both routes numerically.
        let alpha0 = 0.001;
        let gamma0 = gamma_from_alpha(alpha0).unwrap();
        let direct = alpha_from_gamma(gamma0 * gamma0).unwrap();
        let algebraic = 2.0 * alpha0 / (1.0 + alpha0 * alpha0);
        assert!((direct - algebraic).abs() < 1e-15);
        assert!((direct - 0.001999998000002).abs() < 1e-12);
    }

    #[test]
    fn round_trip_alpha_gamma() {
        for alpha in [0.001, 0.01, 0.1, 0.5, 0.9] {
            let gamma = gamma_from_alpha(alpha).unwrap();
            let back = alpha_from_gamma(gamma).unwrap();
            assert!((back - alpha).abs() <= 4.0 * f64::EPSILON, "alpha={alpha}");
        }
    }

    /// Independent oracle: smallest integer i with x <= gamma^i, where gamma
    /// is the exact rational (1 + a/b) / (1 - a/b) and x is a small integer.
    /// Uses exact big-integer arithmetic, no logarithms or floats.
    fn oracle_index_rational(x: u64, gamma_num: u64, gamma_den: u64) -> i64 {
        // x <= (num/den)^i  <=>  x * den^i <= num^i, scanning i upward from 0.
        let x = BigUint::from(x);
        let num = BigUint::from(gamma_num);
        let den = BigUint::from(gamma_den);
        let mut num_pow = BigUint::from(1u8);
        let mut den_pow = BigUint::from(1u8);
        let mut i: i64 = 0;
        loop {
            if &x * &den_pow <= num_pow {
                return i;
            }
            num_pow *= &num;
            den_pow *= &den;
            i += 1;
            assert!(i < 100_000, "oracle runaway");
        }
    }

    #[test]
    fn bucket_index_examples() {
        assert_eq!(bucket_index(1.0, 2.0).unwrap(), 0);
        assert_eq!(bucket_index(3.0, 2.0).unwrap(), 2); // ceil(1.58496)
        assert_eq!(bucket_index(2.0, 2.0).unwrap(), 1); // x exactly at a boundary

        // alpha = 0.001 gives the exact rational gamma 1001/999; the oracle
        // brackets x = 2 by exact repeated multiplication.
        let expected = oracle_index_rational(2, 1001, 999);
        assert_eq!(expected, 347);
        let gamma = gamma_from_alpha(0.001).unwrap();
        assert_eq!(bucket_index(2.0, gamma).unwrap(), expected);
    }

    #[test]
    fn bucket_index_rejects_non_positive() {
        for x in [0.0, -1.0, f64::NAN, f64::NEG_INFINITY] {
            assert!(bucket_index(x, 2.0).is_err(), "x={x}");
        }
    }

    #[test]
    fn value_estimate_examples() {
        assert_eq!(value_estimate(1, 2.0), 4.0 / 3.0);
        assert_eq!(value_estimate(0, 2.0), 2.0 / 3.0);
        assert_eq!(value_estimate(-1, 2.0), 1.0 / 3.0);
    }

    #[test]
    fn value_estimate_worst_case_error_is_alpha() {
        // Maximize |estimate - x| / x over bucket 0 of gamma = 2, i.e. over
        // x in (0.5, 1]: the supremum is alpha = 1/3, approached at x -> 0.5+.
        let gamma = 2.0;
        let alpha = alpha_from_gamma(gamma).unwrap();
        let est = value_estimate(0, gamma);
        let mut worst: f64 = 0.0;
        let steps = 200_000;
        for k in 1..=steps {
            let x = 0.5 + 0.5 * (k as f64) / (steps as f64);
            worst = worst.max((est - x).abs() / x);
        }
        assert!(worst <= alpha + 1e-12, "worst={worst} alpha={alpha}");
        // The bound is approached at the open end of the bucket.
        let near_edge = 0.5 + 1e-9;
        let err = (est - near_edge).abs() / near_edge;
        assert!((err - alpha).abs() < 1e-6);
    }

    #[test]
    fn estimate_within_alpha_across_buckets() {
        let gamma = gamma_from_alpha(0.01).unwrap();
        let alpha = alpha_from_gamma(gamma).unwrap();
        for i in [-50i64, -3, 0, 1, 7, 200] {
            let lo = pow_gamma(gamma, i - 1);
            let hi = pow_gamma(gamma, i);
            let est = value_estimate(i, gamma);
            for t in [1e-6, 0.25, 0.5, 0.75, 1.0] {
                let x = lo + (hi - lo) * t;
                assert!(
                    (est - x).abs() <= alpha * x * (1.0 + 1e-12),
                    "i={i} t={t}"
                );
            }
        }
    }

    #[test]
    fn collapse_key_examples() {
        assert_eq!(collapse_key(1), 1);
        assert_eq!(collapse_key(2), 1);
        assert_eq!(collapse_key(3), 2);
        assert_eq!(collapse_key(0), 0);
        assert_eq!(collapse_key(-1), 0);
        assert_eq!(collapse_key(-2), -1);
        assert_eq!(collapse_key(-3), -1);
    }
}
