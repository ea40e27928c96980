use rayon::prelude::*;

use super::{MechanismOracle, ProfileSpace, Witness};
use crate::error::Result;
use crate::exact::{self, Rational, WinnerDistribution};
use crate::profile::NominationProfile;

pub(crate) fn all_distributions(oracle: &dyn MechanismOracle, space: &ProfileSpace) -> Result<Vec<WinnerDistribution>> {
    (0..space.len()).into_par_iter().map(|i| oracle.distribution(&space.profile(i))).collect()
}

/// Compares every vertex's winning probability across every unilateral
/// change of its own out-set. Each unordered pair is reported once, with
/// `profile_a` the lower-indexed profile; witnesses are sorted by
/// `(profile_a index, vertex, profile_b index)`.
pub fn check_impartial(oracle: &dyn MechanismOracle, space: &ProfileSpace) -> Result<Vec<Witness>> {
    let dists = all_distributions(oracle, space)?;
    let n = space.n();
    let mut found: Vec<(usize, usize, usize)> = (0..space.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let dists = &dists;
            (0..n).flat_map(move |v| {
                let own = space.digit(i, v);
                (own + 1..space.choices()).filter_map(move |c| {
                    let j = space.with_digit(i, v, c);
                    (dists[i].prob(v) != dists[j].prob(v)).then_some((i, v, j))
                })
            })
        })
        .collect();
    found.sort_unstable();
    Ok(found
        .into_iter()
        .map(|(i, v, j)| Witness::impartiality(space.profile(i), space.profile(j), v, dists[i].prob(v), dists[j].prob(v)))
        .collect())
}

/// Exact worst case of `Δ - E[δ(winner)]` over a profile space.
#[derive(Debug, Clone, PartialEq)]
pub struct GapMeasurement {
    pub alpha: Rational,
    /// The lowest-indexed profile attaining `alpha`.
    pub worst_profile: NominationProfile,
    pub profiles: usize,
}

pub fn measure_additive_gap_exhaustive(oracle: &dyn MechanismOracle, space: &ProfileSpace) -> Result<GapMeasurement> {
    let gaps: Vec<Rational> = (0..space.len())
        .into_par_iter()
        .map(|i| {
            let p = space.profile(i);
            oracle.distribution(&p).map(|d| exact::additive_gap(&d, &p))
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, g) in gaps.iter().enumerate() {
        if *g > gaps[best] {
            best = i;
        }
    }
    Ok(GapMeasurement { alpha: gaps[best].clone(), worst_profile: space.profile(best), profiles: space.len() })
}
