//! Sample functions `g` for deterministic sample mechanisms, the strong
//! sample property, and a falsifier for the claim that every strong and
//! impartial sample function is constant.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use super::impartial::check_impartial;
use super::{MechanismOracle, ProfileSpace, Witness, WitnessKind};
use crate::error::{Error, Result};
use crate::exact::WinnerDistribution;
use crate::mechanisms::Scratch;
use crate::profile::{Model, NominationProfile, VertexSet};

type SampleFn = dyn Fn(&NominationProfile) -> VertexSet + Send + Sync;

/// A sample function on single-model profiles.
#[derive(Clone)]
pub struct SampleFunction {
    name: String,
    g: Arc<SampleFn>,
}

impl SampleFunction {
    pub fn new(name: impl Into<String>, g: impl Fn(&NominationProfile) -> VertexSet + Send + Sync + 'static) -> Self {
        Self { name: name.into(), g: Arc::new(g) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `g(x)`; an empty sample is an error.
    pub fn sample(&self, profile: &NominationProfile) -> Result<VertexSet> {
        let s = (self.g)(profile);
        if s.is_empty() {
            return Err(Error::Oracle(format!("sample function {} returned an empty set", self.name)));
        }
        if let Some(&v) = s.members().iter().find(|&&v| v >= profile.n()) {
            return Err(Error::VertexOutOfRange { vertex: v, n: profile.n() });
        }
        Ok(s)
    }
}

impl fmt::Debug for SampleFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampleFunction").field("name", &self.name).finish()
    }
}

fn least_with_degree(p: &NominationProfile, pick_max: bool) -> usize {
    let deg = p.in_degrees();
    let target = if pick_max { deg.iter().max() } else { deg.iter().min() };
    let target = *target.unwrap();
    deg.iter().position(|&d| d == target).unwrap()
}

fn profile_hash(p: &NominationProfile) -> u64 {
    // FNV-1a over the out-sets
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for (v, out) in p.out_sets().iter().enumerate() {
        for &t in out {
            h ^= (v * p.n() + t) as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Names of the shipped sample functions.
pub const CATALOG: [&str; 9] = [
    "const:0",
    "const:0,1",
    "first-k:1",
    "first-k:2",
    "nominee-of:0",
    "self-and-nominee:0",
    "min-degree",
    "max-degree",
    "hash",
];

/// Looks up a sample function by name. `const:` takes a vertex list,
/// `first-k:` a count, `nominee-of:` and `self-and-nominee:` a vertex.
pub fn sample_function(name: &str) -> Result<SampleFunction> {
    let bad = || Error::InvalidArgument(format!("unknown sample function `{name}`; catalog: {}", CATALOG.join(", ")));
    let (kind, arg) = match name.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (name, None),
    };
    let num = |a: &str| a.trim().parse::<usize>().map_err(|_| bad());
    let g = match (kind, arg) {
        ("const", Some(list)) => {
            let set = VertexSet::new(list.split(',').map(num).collect::<Result<Vec<_>>>()?);
            SampleFunction::new(name, move |_| set.clone())
        }
        ("first-k", Some(k)) => {
            let k = num(k)?;
            SampleFunction::new(name, move |p| VertexSet::new(0..k.min(p.n())))
        }
        ("nominee-of", Some(v)) => {
            let v = num(v)?;
            SampleFunction::new(name, move |p| VertexSet::new(p.out(v).iter().copied()))
        }
        ("self-and-nominee", Some(v)) => {
            let v = num(v)?;
            SampleFunction::new(name, move |p| VertexSet::new(std::iter::once(v).chain(p.out(v).iter().copied())))
        }
        ("min-degree", None) => SampleFunction::new(name, |p| VertexSet::new([least_with_degree(p, false)])),
        ("max-degree", None) => SampleFunction::new(name, |p| VertexSet::new([least_with_degree(p, true)])),
        ("hash", None) => SampleFunction::new(name, |p| VertexSet::new([(profile_hash(p) % p.n() as u64) as usize])),
        _ => return Err(bad()),
    };
    Ok(g)
}

pub fn catalog() -> Vec<SampleFunction> {
    CATALOG.iter().map(|name| sample_function(name).unwrap()).collect()
}

/// The deterministic mechanism that samples `g(x)` and applies the sample
/// winner rule: among vertices outside the sample nominated by it, the one
/// with the most nominations from outside that set, ties to the least id.
pub struct SampleMechanism<'a> {
    g: &'a SampleFunction,
}

impl<'a> SampleMechanism<'a> {
    pub fn new(g: &'a SampleFunction) -> Self {
        Self { g }
    }
}

impl MechanismOracle for SampleMechanism<'_> {
    fn name(&self) -> String {
        format!("sample-mechanism[{}]", self.g.name())
    }

    fn distribution(&self, profile: &NominationProfile) -> Result<WinnerDistribution> {
        let s = self.g.sample(profile)?;
        let w = Scratch::new(profile.n()).sample_rule(profile, s.members());
        Ok(WinnerDistribution::point(profile.n(), w))
    }
}

fn single_space(n: usize, budget: u128) -> Result<ProfileSpace> {
    ProfileSpace::new(n, Model::Single, budget)
}

fn all_samples(g: &SampleFunction, space: &ProfileSpace) -> Result<Vec<VertexSet>> {
    (0..space.len()).into_par_iter().map(|i| g.sample(&space.profile(i))).collect()
}

fn sample_pair_witness(kind: WitnessKind, space: &ProfileSpace, i: usize, j: usize, u: Option<usize>, sa: &VertexSet, sb: &VertexSet) -> Witness {
    Witness {
        kind,
        profile_a: space.profile(i),
        profile_b: Some(space.profile(j)),
        vertex: u,
        detail: format!("g(a) = {sa}, g(b) = {sb}"),
        gap: None,
        relabeling: None,
    }
}

/// Every `(x, u, x')` where `u ∈ g(x)`, `x'` changes only `u`'s vote, and
/// `g(x') != g(x)`. Sorted by `(x index, u, x' index)`.
pub fn check_strong_sample(g: &SampleFunction, n: usize, budget: u128) -> Result<Vec<Witness>> {
    let space = single_space(n, budget)?;
    let samples = all_samples(g, &space)?;
    let mut found: Vec<(usize, usize, usize)> = (0..space.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let (samples, space) = (&samples, &space);
            samples[i].members().to_vec().into_iter().flat_map(move |u| {
                (0..space.choices()).filter_map(move |c| {
                    let j = space.with_digit(i, u, c);
                    (samples[j] != samples[i]).then_some((i, u, j))
                })
            })
        })
        .collect();
    found.sort_unstable();
    Ok(found
        .into_iter()
        .map(|(i, u, j)| {
            sample_pair_witness(WitnessKind::StrongSampleViolation, &space, i, j, Some(u), &samples[i], &samples[j])
        })
        .collect())
}

/// Whether `g` returns the same set on every profile; otherwise a witness
/// pairing the first profile with the first one that differs.
pub fn check_sample_constant(g: &SampleFunction, n: usize, budget: u128) -> Result<(bool, Option<Witness>)> {
    let space = single_space(n, budget)?;
    let samples = all_samples(g, &space)?;
    match samples.iter().position(|s| *s != samples[0]) {
        None => Ok((true, None)),
        Some(j) => Ok((
            false,
            Some(sample_pair_witness(WitnessKind::SampleNotConstant, &space, 0, j, None, &samples[0], &samples[j])),
        )),
    }
}

/// Impartiality of the mechanism built from `g` by [`SampleMechanism`].
pub fn check_sample_mechanism_impartial(g: &SampleFunction, n: usize, budget: u128) -> Result<Vec<Witness>> {
    check_impartial(&SampleMechanism::new(g), &single_space(n, budget)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FalsifierRow {
    pub name: String,
    pub n: usize,
    pub strong: bool,
    pub impartial: bool,
    pub constant: bool,
}

impl FalsifierRow {
    /// A strong, impartial, non-constant sample function would contradict
    /// the characterization.
    pub fn contradicts(&self) -> bool {
        self.strong && self.impartial && !self.constant
    }
}

pub fn falsify_characterization(functions: &[SampleFunction], ns: &[usize], budget: u128) -> Result<Vec<FalsifierRow>> {
    let mut rows = Vec::new();
    for g in functions {
        for &n in ns {
            rows.push(FalsifierRow {
                name: g.name().to_string(),
                n,
                strong: check_strong_sample(g, n, budget)?.is_empty(),
                impartial: check_sample_mechanism_impartial(g, n, budget)?.is_empty(),
                constant: check_sample_constant(g, n, budget)?.0,
            });
        }
    }
    Ok(rows)
}
