//! Fixed-point natural logarithm on big integers, used where a floating-point
//! ceiling could land on the wrong side of an integer.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use std::cmp::Ordering;

const GUARD_BITS: u32 = 24;

/// Absolute error bound of [`ln_fixed`], in units of `2^-bits`.
pub(crate) const LN_ERROR_ULPS: u32 = 4;

/// `ln(n) * 2^bits`, truncated, with error at most [`LN_ERROR_ULPS`].
pub(crate) fn ln_fixed(n: u64, bits: u32) -> BigInt {
    assert!(n >= 1);
    let p = bits + GUARD_BITS;
    let m = 63 - n.leading_zeros();
    let base = 1u64 << m;
    // ln n = m ln 2 + 2 atanh((n - 2^m) / (n + 2^m))
    let ln2 = atanh_fixed(&BigInt::from(1), &BigInt::from(3), p) * 2;
    let frac = atanh_fixed(&BigInt::from(n - base), &(BigInt::from(n) + BigInt::from(base)), p) * 2;
    (ln2 * m + frac) >> GUARD_BITS
}

/// `atanh(num/den) * 2^p` for `0 <= num/den <= 1/3`.
fn atanh_fixed(num: &BigInt, den: &BigInt, p: u32) -> BigInt {
    let z: BigInt = (num << p) / den;
    let z2: BigInt = (&z * &z) >> p;
    let mut term = z;
    let mut sum = BigInt::zero();
    let mut i = 0u64;
    while !term.is_zero() {
        sum += &term / (2 * i + 1);
        term = (term * &z2) >> p;
        i += 1;
    }
    sum
}

/// Sign of `k^3 - 4 n^2 ln n`, decided with a certified error interval that
/// is refined until it excludes zero.
pub(crate) fn cmp_cube_to_sample_target(k: u64, n: u64) -> Ordering {
    let k3 = BigInt::from(k).pow(3);
    let four_n2 = BigInt::from(n).pow(2) * 4;
    let mut bits = 128u32;
    loop {
        let lhs: BigInt = &k3 << bits;
        let rhs: BigInt = &four_n2 * ln_fixed(n, bits);
        let slack: BigInt = &four_n2 * LN_ERROR_ULPS;
        let diff = lhs - rhs;
        if diff.abs() > slack {
            return if diff.is_positive() { Ordering::Greater } else { Ordering::Less };
        }
        // ln n is irrational for n >= 2, so refinement terminates.
        bits *= 2;
        assert!(bits <= 1 << 16, "precision refinement did not converge for k={k}, n={n}");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    #[test]
    fn matches_f64_logarithm() {
        for n in [1u64, 2, 3, 10, 100, 1000, 4096, 123_456_789] {
            let l = ln_fixed(n, 60).to_f64().unwrap() / 2f64.powi(60);
            assert!((l - (n as f64).ln()).abs() < 1e-12, "{n}: {l}");
        }
    }

    #[test]
    fn ln2_to_many_digits() {
        // ln 2 = 0.693147180559945309417232121458176568075500134360255254120680...
        let l = ln_fixed(2, 200);
        let scaled = (l * BigInt::from(10).pow(40)) >> 200u32;
        assert_eq!(scaled.to_string(), "6931471805599453094172321214581765680755");
    }
}
