//! Closed-form probabilities and additive-gap guarantees.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::One;
use serde::Serialize;

use super::hiprec::cmp_cube_to_sample_target;
use super::Rational;
use crate::error::{Error, Result};

/// Probability that the top vertex lands in the nominated set under Random
/// k-sample: `(1 - (1 - Δ/(n-1))^k) (1 - 1/n)^k`.
pub fn pr_top_in_nominated(n: usize, k: usize, delta: usize) -> Result<Rational> {
    if n < 2 || k == 0 {
        return Err(Error::InvalidArgument(format!("need n >= 2 and k >= 1, got n = {n}, k = {k}")));
    }
    if delta == 0 || delta > n - 1 {
        return Err(Error::InvalidArgument(format!("delta = {delta} outside [1, {}]", n - 1)));
    }
    let r = |num: usize, den: usize| Rational::new(BigInt::from(num), BigInt::from(den));
    let missed = num_traits::pow(r(n - 1 - delta, n - 1), k);
    let top_unsampled = num_traits::pow(r(n - 1, n), k);
    Ok((Rational::one() - missed) * top_unsampled)
}

/// Guaranteed upper bound on `Δ - E[δ(winner)]` for Random k-sample on any
/// single-model profile: `2(k-1) + (n+1)/(k+1)`.
pub fn rks_gap_bound(n: usize, k: usize) -> f64 {
    2.0 * (k as f64 - 1.0) + (n as f64 + 1.0) / (k as f64 + 1.0)
}

/// The degree `(n - 1 + 2k²)/(k + 1)` at which the Random k-sample analysis is
/// tight.
pub fn rks_worst_delta(n: usize, k: usize) -> f64 {
    (n as f64 - 1.0 + 2.0 * (k * k) as f64) / (k as f64 + 1.0)
}

/// `⌈4^{1/3} n^{2/3} ln^{1/3} n⌉` clamped to `[1, n-1]`. The ceiling is
/// certified with big-integer arithmetic, not trusted to floating point.
pub fn sks_sample_size(n: usize) -> usize {
    assert!(n >= 2, "sample size needs n >= 2");
    let n64 = n as u64;
    let estimate = (4.0 * (n as f64).powi(2) * (n as f64).ln()).cbrt().ceil().max(1.0) as u64;
    let mut k = estimate;
    while cmp_cube_to_sample_target(k, n64) == Ordering::Less {
        k += 1;
    }
    while k > 1 && cmp_cube_to_sample_target(k - 1, n64) == Ordering::Greater {
        k -= 1;
    }
    (k as usize).clamp(1, n - 1)
}

/// Guaranteed upper bound on `Δ - E[δ(winner)]` for Simple k-sample:
/// `2k + n² exp(-k³ / (2n²))`.
pub fn sks_gap_bound(n: usize, k: usize) -> f64 {
    let (n, k) = (n as f64, k as f64);
    2.0 * k + n * n * (-(k * k * k) / (2.0 * n * n)).exp()
}

/// The `⌈n/2⌉` guarantee usually quoted for Majority with Default. With the
/// strict threshold the default still wins when some vertex has `⌈n/2⌉`
/// other nominations plus the default's, so from `n = 4` the exact worst case
/// is one higher.
pub fn mwd_gap_bound(n: usize) -> usize {
    n.div_ceil(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    RksLower,
    SksLower,
    MwdUpper,
}

/// A guaranteed bound on the additive gap for one instance size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub n: usize,
    pub k: usize,
    pub delta: usize,
    pub bound_value: f64,
    pub kind: BoundKind,
}

impl BoundReport {
    pub fn new(kind: BoundKind, n: usize, k: usize, delta: usize) -> Self {
        let bound_value = match kind {
            BoundKind::RksLower => rks_gap_bound(n, k),
            BoundKind::SksLower => sks_gap_bound(n, k),
            BoundKind::MwdUpper => mwd_gap_bound(n) as f64,
        };
        Self { n, k, delta, bound_value, kind }
    }

    /// Lowest expected winner degree the guarantee allows.
    pub fn min_expected_degree(&self) -> f64 {
        self.delta as f64 - self.bound_value
    }
}
