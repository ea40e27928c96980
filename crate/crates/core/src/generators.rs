//! Instance families: the adversarial constructions behind the lower bounds,
//! the instance that makes the Random k-sample analysis tight, and seeded
//! random background profiles.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mechanisms::ceil_sqrt;
use crate::profile::{Model, NominationProfile};
use crate::rng::RandomnessSource;

/// Vertex 0 receives exactly `delta` nominations (from `1..=delta`); every
/// other vertex ends with in-degree at most 1. Vertex 0 nominates the first
/// vertex of the chain `delta+1 -> ... -> n-1 -> 1`, or vertex 1 when the
/// chain is empty.
pub fn gen_single_worst(n: usize, delta: usize) -> Result<NominationProfile> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("n must be at least 2, got {n}")));
    }
    if delta == 0 || delta > n - 1 {
        return Err(Error::InvalidArgument(format!("delta = {delta} outside [1, {}]", n - 1)));
    }
    let mut nominee = vec![0usize; n];
    nominee[0] = if delta + 1 < n { delta + 1 } else { 1 };
    for (v, t) in nominee.iter_mut().enumerate().skip(delta + 1) {
        *t = if v + 1 < n { v + 1 } else { 1 };
    }
    NominationProfile::single(&nominee)
}

/// Everyone except `v` nominates `v`; `v` nominates `(v+1) mod n`.
pub fn gen_fixed_sample_adversary(n: usize, v: usize) -> Result<NominationProfile> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("n must be at least 3, got {n}")));
    }
    if v >= n {
        return Err(Error::VertexOutOfRange { vertex: v, n });
    }
    let nominee: Vec<usize> = (0..n).map(|u| if u == v { (v + 1) % n } else { v }).collect();
    NominationProfile::single(&nominee)
}

/// `⌈√n / 2⌉`, computed exactly as the least `d` with `4d² >= n`.
pub fn sqrt_adversary_delta(n: usize) -> usize {
    let start = ceil_sqrt(n) / 2;
    (start.max(1)..).find(|&d| 4 * d * d >= n).unwrap()
}

/// Vertex 0 with `max(1, ⌈√n/2⌉)` nominators; everything else arranged as in
/// [`gen_single_worst`].
pub fn gen_sqrt_adversary(n: usize) -> Result<NominationProfile> {
    if n < 4 {
        return Err(Error::InvalidArgument(format!("n must be at least 4, got {n}")));
    }
    gen_single_worst(n, sqrt_adversary_delta(n))
}

/// `round((n - 1 + 2k²)/(k + 1))` with halves rounded up, clamped to `[1, n-1]`.
pub fn bound_stress_delta(n: usize, k: usize) -> usize {
    let num = 2 * (n - 1 + 2 * k * k) + (k + 1);
    let den = 2 * (k + 1);
    (num / den).clamp(1, n - 1)
}

pub fn gen_bound_stress(n: usize, k: usize) -> Result<NominationProfile> {
    if n < 2 || k == 0 {
        return Err(Error::InvalidArgument(format!("need n >= 2 and k >= 1, got n = {n}, k = {k}")));
    }
    gen_single_worst(n, bound_stress_delta(n, k))
}

/// Each vertex nominates a uniformly random other vertex.
pub fn gen_random_single(n: usize, seed: u64) -> Result<NominationProfile> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("n must be at least 2, got {n}")));
    }
    let mut rng = RandomnessSource::from_seed(seed);
    let nominee: Vec<usize> = (0..n)
        .map(|v| {
            let t = rng.draw(n - 1);
            if t >= v {
                t + 1
            } else {
                t
            }
        })
        .collect();
    NominationProfile::single(&nominee)
}

/// Each ordered pair `(u, v)`, `u != v`, is an edge independently with
/// probability `p`.
pub fn gen_random_multi(n: usize, p: f64, seed: u64) -> Result<NominationProfile> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("n must be at least 2, got {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("edge probability {p} outside [0, 1]")));
    }
    let mut rng = RandomnessSource::from_seed(seed);
    let out = (0..n)
        .map(|u| (0..n).filter(|&v| v != u).filter(|_| rng.unit() < p).collect())
        .collect();
    NominationProfile::new(Model::Multi, out)
}

/// Multi-model star: every vertex but `center` nominates `center`, which
/// abstains.
pub fn gen_star(n: usize, center: usize) -> Result<NominationProfile> {
    if center >= n {
        return Err(Error::VertexOutOfRange { vertex: center, n });
    }
    let out = (0..n).map(|u| if u == center { vec![] } else { vec![center] }).collect();
    NominationProfile::new(Model::Multi, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    SingleWorst,
    FixedSampleAdversary,
    SqrtAdversary,
    BoundStress,
    RandomSingle,
    RandomMulti,
    Star,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::SingleWorst,
        Family::FixedSampleAdversary,
        Family::SqrtAdversary,
        Family::BoundStress,
        Family::RandomSingle,
        Family::RandomMulti,
        Family::Star,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::SingleWorst => "single-worst",
            Family::FixedSampleAdversary => "fixed-sample-adversary",
            Family::SqrtAdversary => "sqrt-adversary",
            Family::BoundStress => "bound-stress",
            Family::RandomSingle => "random-single",
            Family::RandomMulti => "random-multi",
            Family::Star => "star",
        }
    }

    pub fn model(self) -> Model {
        match self {
            Family::RandomMulti | Family::Star => Model::Multi,
            _ => Model::Single,
        }
    }

    pub fn is_seeded(self) -> bool {
        matches!(self, Family::RandomSingle | Family::RandomMulti)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown generator family `{s}`")))
    }
}

/// A family with its parameters, resolved for one `n`.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    SingleWorst { n: usize, delta: usize },
    FixedSampleAdversary { n: usize, v: usize },
    SqrtAdversary { n: usize },
    BoundStress { n: usize, k: usize },
    RandomSingle { n: usize, seed: u64 },
    RandomMulti { n: usize, p: f64, seed: u64 },
    Star { n: usize, center: usize },
}

impl GeneratorSpec {
    pub fn family(&self) -> Family {
        match self {
            Self::SingleWorst { .. } => Family::SingleWorst,
            Self::FixedSampleAdversary { .. } => Family::FixedSampleAdversary,
            Self::SqrtAdversary { .. } => Family::SqrtAdversary,
            Self::BoundStress { .. } => Family::BoundStress,
            Self::RandomSingle { .. } => Family::RandomSingle,
            Self::RandomMulti { .. } => Family::RandomMulti,
            Self::Star { .. } => Family::Star,
        }
    }

    pub fn generate(&self) -> Result<NominationProfile> {
        match *self {
            Self::SingleWorst { n, delta } => gen_single_worst(n, delta),
            Self::FixedSampleAdversary { n, v } => gen_fixed_sample_adversary(n, v),
            Self::SqrtAdversary { n } => gen_sqrt_adversary(n),
            Self::BoundStress { n, k } => gen_bound_stress(n, k),
            Self::RandomSingle { n, seed } => gen_random_single(n, seed),
            Self::RandomMulti { n, p, seed } => gen_random_multi(n, p, seed),
            Self::Star { n, center } => gen_star(n, center),
        }
    }
}
