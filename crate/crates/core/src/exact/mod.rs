//! Exact winner distributions.
//!
//! Randomized mechanisms draw `k` vertices uniformly with replacement, so
//! their outcome space is the `n^k` equiprobable draw sequences. Two routes
//! evaluate it:
//!
//! * sequence enumeration, visiting every sequence;
//! * weighted enumeration, visiting each distinct sample once. For Random
//!   k-sample a set `T` is hit by `Σ_j (-1)^j C(|T|,j) (|T|-j)^k` sequences;
//!   for Simple k-sample a multiset with multiplicities `m_i` by
//!   `k! / Π m_i!` sequences.
//!
//! Probabilities are kept as integer counts over `n^k` and only turned into
//! rationals at the end.

mod bounds;
mod hiprec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::mechanisms::{MechanismSpec, Scratch};
use crate::profile::NominationProfile;
use crate::rng::RandomnessSource;

pub use bounds::{
    mwd_gap_bound, pr_top_in_nominated, rks_gap_bound, rks_worst_delta, sks_gap_bound, sks_sample_size, BoundKind,
    BoundReport,
};

pub type Rational = BigRational;

/// Default limit on `n^k` for exact evaluation.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// Exact probability of each vertex winning, plus the no-winner mass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WinnerDistribution {
    p: Vec<Rational>,
    p_none: Rational,
}

impl WinnerDistribution {
    pub fn point(n: usize, winner: Option<usize>) -> Self {
        let mut p = vec![Rational::zero(); n];
        let mut p_none = Rational::zero();
        match winner {
            Some(w) => p[w] = Rational::one(),
            None => p_none = Rational::one(),
        }
        Self { p, p_none }
    }

    fn from_counts(counts: &[u128], none: u128, total: u128) -> Self {
        let total = BigInt::from(total);
        let q = |c: u128| Rational::new(BigInt::from(c), total.clone());
        Self { p: counts.iter().map(|&c| q(c)).collect(), p_none: q(none) }
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn prob(&self, u: usize) -> &Rational {
        &self.p[u]
    }

    pub fn probs(&self) -> &[Rational] {
        &self.p
    }

    pub fn p_none(&self) -> &Rational {
        &self.p_none
    }

    pub fn total(&self) -> Rational {
        self.p.iter().fold(self.p_none.clone(), |acc, x| acc + x)
    }

    /// The unique vertex with probability one, if the distribution is a
    /// point mass on a vertex.
    pub fn certain_winner(&self) -> Option<usize> {
        self.p.iter().position(|x| x.is_one())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let p: serde_json::Map<String, serde_json::Value> =
            self.p.iter().enumerate().map(|(u, x)| (u.to_string(), json!(format_rational(x)))).collect();
        json!({ "n": self.n(), "p": p, "none": format_rational(&self.p_none) })
    }
}

/// `num/den` with the denominator always present.
pub fn format_rational(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// `E[δ(winner)] = Σ_u p(u) δ(u)`; the no-winner mass contributes nothing.
pub fn expected_winner_degree(dist: &WinnerDistribution, profile: &NominationProfile) -> Rational {
    dist.p
        .iter()
        .zip(profile.in_degrees())
        .filter(|(p, _)| !p.is_zero())
        .fold(Rational::zero(), |acc, (p, &d)| acc + p * Rational::from_integer(BigInt::from(d)))
}

/// `Δ - E[δ(winner)]` as an exact rational.
pub fn additive_gap(dist: &WinnerDistribution, profile: &NominationProfile) -> Rational {
    Rational::from_integer(BigInt::from(profile.delta())) - expected_winner_degree(dist, profile)
}

/// `n^k`, saturating at `u128::MAX`.
pub fn enumeration_size(n: usize, k: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..k {
        acc = match acc.checked_mul(n as u128) {
            Some(v) => v,
            None => return u128::MAX,
        };
    }
    acc
}

fn check_budget(n: usize, k: usize, cap: u128) -> Result<u128> {
    let required = enumeration_size(n, k);
    if required > cap {
        Err(Error::EnumerationTooLarge { required, cap })
    } else {
        Ok(required)
    }
}

/// Exact distribution under the default cap, by weighted enumeration of
/// distinct samples.
pub fn exact_distribution(spec: &MechanismSpec, profile: &NominationProfile) -> Result<WinnerDistribution> {
    exact_distribution_with_cap(spec, profile, DEFAULT_ENUMERATION_CAP)
}

pub fn exact_distribution_with_cap(
    spec: &MechanismSpec,
    profile: &NominationProfile,
    cap: u128,
) -> Result<WinnerDistribution> {
    spec.validate(profile.n(), profile.model())?;
    let n = profile.n();
    match spec {
        MechanismSpec::RandomKSample { .. } => {
            let k = spec.resolve_k(n);
            let total = check_budget(n, k, cap)?;
            Ok(random_k_by_sets(profile, k, total))
        }
        MechanismSpec::SimpleKSample { .. } => {
            let k = spec.resolve_k(n);
            let total = check_budget(n, k, cap)?;
            Ok(simple_k_by_multisets(profile, k, total))
        }
        MechanismSpec::FixedSample { .. } | MechanismSpec::MajorityDefault { .. } => {
            // deterministic: randomness is never read
            let trace = spec.run(profile, &mut RandomnessSource::from_seed(0))?;
            Ok(WinnerDistribution::point(n, trace.winner))
        }
    }
}

/// Exact distribution by visiting all `n^k` draw sequences. Work is split by
/// first draw across threads; the result does not depend on the split.
pub fn exact_distribution_by_sequences(
    spec: &MechanismSpec,
    profile: &NominationProfile,
    cap: u128,
) -> Result<WinnerDistribution> {
    spec.validate(profile.n(), profile.model())?;
    let n = profile.n();
    let plurality = match spec {
        MechanismSpec::RandomKSample { .. } => false,
        MechanismSpec::SimpleKSample { .. } => true,
        _ => return exact_distribution_with_cap(spec, profile, cap),
    };
    let k = spec.resolve_k(n);
    let total = check_budget(n, k, cap)?;
    let (counts, none) = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut scratch = Scratch::new(n);
            let mut counts = vec![0u128; n];
            let mut none = 0u128;
            for_each_sequence_with_prefix(n, k, first, |draws| {
                let w = if plurality {
                    scratch.plurality_rule(profile, draws)
                } else {
                    scratch.sample_rule(profile, draws)
                };
                match w {
                    Some(w) => counts[w] += 1,
                    None => none += 1,
                }
            });
            (counts, none)
        })
        .reduce(|| (vec![0u128; n], 0), merge_counts);
    Ok(WinnerDistribution::from_counts(&counts, none, total))
}

fn merge_counts(mut a: (Vec<u128>, u128), b: (Vec<u128>, u128)) -> (Vec<u128>, u128) {
    for (x, y) in a.0.iter_mut().zip(b.0) {
        *x += y;
    }
    a.1 += b.1;
    a
}

/// Visits every sequence in `{0..n}^k` starting with `first`, in odometer order.
fn for_each_sequence_with_prefix(n: usize, k: usize, first: usize, mut f: impl FnMut(&[usize])) {
    let mut draws = vec![0usize; k];
    draws[0] = first;
    loop {
        f(&draws);
        let mut i = k;
        loop {
            if i == 1 {
                return;
            }
            i -= 1;
            draws[i] += 1;
            if draws[i] < n {
                break;
            }
            draws[i] = 0;
        }
    }
}

/// Number of length-`k` sequences whose set of values is exactly a given
/// `t`-element set, for `t = 0..=k`.
fn surjection_counts(k: usize) -> Vec<u128> {
    (0..=k)
        .map(|t| {
            let mut sum = BigInt::zero();
            let mut binom = BigInt::one();
            for j in 0..=t {
                let term = &binom * BigInt::from(t - j).pow(k as u32);
                if j % 2 == 0 {
                    sum += term;
                } else {
                    sum -= term;
                }
                binom = binom * BigInt::from(t - j) / BigInt::from(j + 1);
            }
            u128::try_from(sum).expect("surjection count fits the enumeration budget")
        })
        .collect()
}

fn random_k_by_sets(profile: &NominationProfile, k: usize, total: u128) -> WinnerDistribution {
    let n = profile.n();
    let weights = surjection_counts(k);
    let mut scratch = Scratch::new(n);
    let mut counts = vec![0u128; n];
    let mut none = 0u128;
    let mut subset = Vec::with_capacity(k);
    for_each_subset(n, k.min(n), 0, &mut subset, &mut |set| {
        let w = weights[set.len()];
        match scratch.sample_rule(profile, set) {
            Some(v) => counts[v] += w,
            None => none += w,
        }
    });
    WinnerDistribution::from_counts(&counts, none, total)
}

/// Nonempty subsets of `{start..n}` extending `subset`, of size at most `max`.
fn for_each_subset(n: usize, max: usize, start: usize, subset: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    for v in start..n {
        subset.push(v);
        f(subset);
        if subset.len() < max {
            for_each_subset(n, max, v + 1, subset, f);
        }
        subset.pop();
    }
}

fn simple_k_by_multisets(profile: &NominationProfile, k: usize, total: u128) -> WinnerDistribution {
    let n = profile.n();
    let binom = binomial_table(k);
    let mut scratch = Scratch::new(n);
    let mut counts = vec![0u128; n];
    let mut none = 0u128;
    let mut draws = Vec::with_capacity(k);
    for_each_multiset(n, k, 0, 1, &binom, &mut draws, &mut |draws, weight| {
        match scratch.plurality_rule(profile, draws) {
            Some(v) => counts[v] += weight,
            None => none += weight,
        }
    });
    WinnerDistribution::from_counts(&counts, none, total)
}

fn binomial_table(k: usize) -> Vec<Vec<u128>> {
    let mut t = vec![vec![0u128; k + 1]; k + 1];
    for i in 0..=k {
        t[i][0] = 1;
        for j in 1..=i {
            t[i][j] = t[i - 1][j - 1] + if j < i { t[i - 1][j] } else { 0 };
        }
    }
    t
}

/// Multisets of size `k` over `{v..n}` appended to `draws`; `weight` carries
/// the multinomial count of the multiplicities fixed so far.
fn for_each_multiset(
    n: usize,
    k: usize,
    v: usize,
    weight: u128,
    binom: &[Vec<u128>],
    draws: &mut Vec<usize>,
    f: &mut impl FnMut(&[usize], u128),
) {
    let remaining = k - draws.len();
    if remaining == 0 {
        f(draws, weight);
        return;
    }
    if v == n - 1 {
        let before = draws.len();
        draws.extend(std::iter::repeat_n(v, remaining));
        f(draws, weight);
        draws.truncate(before);
        return;
    }
    let before = draws.len();
    for m in 0..=remaining {
        for_each_multiset(n, k, v + 1, weight * binom[remaining][m], binom, draws, f);
        draws.push(v);
    }
    draws.truncate(before);
}

/// Visits every Random k-sample draw sequence with its nominated set `W`
/// (unordered) and winner.
pub fn for_each_random_k_trace(
    profile: &NominationProfile,
    k: usize,
    cap: u128,
    mut f: impl FnMut(&[usize], &[usize], Option<usize>),
) -> Result<()> {
    MechanismSpec::random_k(k).validate(profile.n(), profile.model())?;
    let n = profile.n();
    check_budget(n, k, cap)?;
    let mut scratch = Scratch::new(n);
    for first in 0..n {
        for_each_sequence_with_prefix(n, k, first, |draws| {
            let w = scratch.sample_rule(profile, draws);
            f(draws, &scratch.candidates, w);
        });
    }
    Ok(())
}

/// `Pr[v ∈ W]` under Random k-sample, counted over draw sequences.
pub fn nominated_probability(profile: &NominationProfile, k: usize, v: usize, cap: u128) -> Result<Rational> {
    let mut hits = 0u128;
    for_each_random_k_trace(profile, k, cap, |_, nominated, _| {
        if nominated.contains(&v) {
            hits += 1;
        }
    })?;
    Ok(Rational::new(BigInt::from(hits), BigInt::from(enumeration_size(profile.n(), k))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Model;

    fn q(a: i64, b: i64) -> Rational {
        Rational::new(a.into(), b.into())
    }

    fn tri() -> NominationProfile {
        NominationProfile::single(&[2, 2, 0]).unwrap()
    }

    #[test]
    fn random_k_single_draw_on_triangle() {
        let d = exact_distribution(&MechanismSpec::random_k(1), &tri()).unwrap();
        assert_eq!(d.prob(2), &q(2, 3));
        assert_eq!(d.prob(0), &q(1, 3));
        assert_eq!(d.prob(1), &q(0, 1));
        assert!(d.p_none().is_zero());
        assert_eq!(expected_winner_degree(&d, &tri()), q(5, 3));
    }

    #[test]
    fn deterministic_point_masses() {
        let star = NominationProfile::single(&[1, 0, 0, 0, 0]).unwrap();
        let d = exact_distribution(&MechanismSpec::fixed([0]), &star).unwrap();
        assert_eq!(d, WinnerDistribution::point(5, Some(1)));
        assert_eq!(expected_winner_degree(&d, &star), q(1, 1));
        assert_eq!(additive_gap(&d, &star), q(3, 1));
        let top = WinnerDistribution::point(5, Some(0));
        assert_eq!(expected_winner_degree(&top, &star), q(4, 1));
    }

    #[test]
    fn all_abstaining_has_no_winner() {
        let p = NominationProfile::empty(3).unwrap();
        let d = exact_distribution(&MechanismSpec::simple_k(1), &p).unwrap();
        assert!(d.p_none().is_one());
        assert!(expected_winner_degree(&d, &p).is_zero());
    }

    #[test]
    fn budget_is_enforced() {
        let p = NominationProfile::single(&[1, 0, 0, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        let err = exact_distribution_with_cap(&MechanismSpec::random_k(4), &p, 1000).unwrap_err();
        assert!(matches!(err, Error::EnumerationTooLarge { required: 10_000, cap: 1000 }));
        assert!(exact_distribution_with_cap(&MechanismSpec::random_k(3), &p, 1000).is_ok());
        assert_eq!(enumeration_size(10, 40), u128::MAX);
    }

    #[test]
    fn model_mismatch_is_reported() {
        let m = NominationProfile::empty(3).unwrap();
        assert!(matches!(
            exact_distribution(&MechanismSpec::random_k(1), &m),
            Err(Error::ModelMismatch { expected: Model::Single, found: Model::Multi })
        ));
    }

    #[test]
    fn surjections_match_brute_force() {
        for k in 1..6usize {
            let counts = surjection_counts(k);
            for t in 0..=k {
                // count sequences over {0..t} using every value
                let mut brute = 0u128;
                let total = (t as u128).pow(k as u32);
                for mut code in 0..total {
                    let mut seen = vec![false; t];
                    for _ in 0..k {
                        seen[(code % t as u128) as usize] = true;
                        code /= t as u128;
                    }
                    if seen.iter().all(|&s| s) {
                        brute += 1;
                    }
                }
                if t == 0 {
                    brute = 0;
                }
                assert_eq!(counts[t], brute, "k={k} t={t}");
            }
        }
    }

    #[test]
    fn routes_agree_on_small_profiles() {
        let profiles = [
            tri(),
            NominationProfile::single(&[1, 0, 0, 0, 0]).unwrap(),
            NominationProfile::single(&[3, 0, 1, 1, 2]).unwrap(),
            NominationProfile::multi(vec![vec![2], vec![2], vec![0, 1]]).unwrap(),
            NominationProfile::multi(vec![vec![1, 2, 3], vec![], vec![0], vec![0, 2]]).unwrap(),
        ];
        for p in &profiles {
            for k in 1..=4 {
                let mut specs = vec![MechanismSpec::simple_k(k)];
                if p.model() == Model::Single {
                    specs.push(MechanismSpec::random_k(k));
                }
                for spec in specs {
                    let a = exact_distribution(&spec, p).unwrap();
                    let b = exact_distribution_by_sequences(&spec, p, DEFAULT_ENUMERATION_CAP).unwrap();
                    assert_eq!(a, b, "{spec} on {p:?}");
                    assert!(a.total().is_one());
                }
            }
        }
    }

    #[test]
    fn nominated_probability_matches_closed_form_on_triangle() {
        let p = tri();
        assert_eq!(nominated_probability(&p, 1, 2, DEFAULT_ENUMERATION_CAP).unwrap(), q(2, 3));
        assert_eq!(pr_top_in_nominated(3, 1, 2).unwrap(), q(2, 3));
        let cycle = NominationProfile::single(&[1, 0]).unwrap();
        assert_eq!(nominated_probability(&cycle, 1, 0, DEFAULT_ENUMERATION_CAP).unwrap(), q(1, 2));
    }

    #[test]
    fn json_keeps_exact_probabilities() {
        let d = exact_distribution(&MechanismSpec::random_k(1), &tri()).unwrap();
        let j = d.to_json();
        assert_eq!(j["p"]["2"], "2/3");
        assert_eq!(j["p"]["1"], "0/1");
        assert_eq!(j["none"], "0/1");
    }
}
