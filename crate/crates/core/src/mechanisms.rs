//! Selection mechanisms.
//!
//! All argmax ties are broken toward the lowest vertex id. None of the rules
//! reads a candidate's own out-edges when scoring it, so the tie-break keeps
//! the mechanisms impartial.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::profile::{Model, NominationProfile, VertexSet};
use crate::rng::RandomnessSource;

/// Sample size of a k-sample mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SampleSize {
    Fixed(usize),
    /// `⌈√n⌉` for Random k-sample, `⌈(4 n² ln n)^{1/3}⌉` for Simple k-sample.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MechanismSpec {
    RandomKSample { k: SampleSize },
    SimpleKSample { k: SampleSize },
    FixedSample { set: VertexSet },
    MajorityDefault { default_vertex: usize },
}

impl MechanismSpec {
    pub fn random_k(k: usize) -> Self {
        Self::RandomKSample { k: SampleSize::Fixed(k) }
    }

    pub fn simple_k(k: usize) -> Self {
        Self::SimpleKSample { k: SampleSize::Fixed(k) }
    }

    pub fn fixed<I: IntoIterator<Item = usize>>(set: I) -> Self {
        Self::FixedSample { set: VertexSet::new(set) }
    }

    pub fn majority_default(default_vertex: usize) -> Self {
        Self::MajorityDefault { default_vertex }
    }

    /// Model the mechanism is defined on; `None` means both.
    pub fn required_model(&self) -> Option<Model> {
        match self {
            Self::SimpleKSample { .. } => None,
            _ => Some(Model::Single),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, Self::FixedSample { .. } | Self::MajorityDefault { .. })
    }

    /// Number of draws used on an `n`-vertex profile, 0 for deterministic kinds.
    ///
    /// Simple k-sample is clamped to `[1, n-1]` so at least one vertex stays
    /// eligible. An explicit Random k-sample size is used as given.
    pub fn resolve_k(&self, n: usize) -> usize {
        match self {
            Self::RandomKSample { k: SampleSize::Fixed(k) } => *k,
            Self::RandomKSample { k: SampleSize::Auto } => ceil_sqrt(n).clamp(1, n - 1),
            Self::SimpleKSample { k: SampleSize::Fixed(k) } => (*k).clamp(1, n - 1),
            Self::SimpleKSample { k: SampleSize::Auto } => crate::exact::sks_sample_size(n),
            Self::FixedSample { .. } | Self::MajorityDefault { .. } => 0,
        }
    }

    /// The `k` column of reports: draws for k-sample kinds, `|S|` for fixed
    /// samples, 0 otherwise.
    pub fn report_k(&self, n: usize) -> usize {
        match self {
            Self::FixedSample { set } => set.len(),
            _ => self.resolve_k(n),
        }
    }

    pub fn validate(&self, n: usize, model: Model) -> Result<()> {
        if let Some(required) = self.required_model() {
            if required != model {
                return Err(Error::ModelMismatch { expected: required, found: model });
            }
        }
        match self {
            Self::RandomKSample { k: SampleSize::Fixed(0) } | Self::SimpleKSample { k: SampleSize::Fixed(0) } => {
                Err(Error::InvalidSpec("sample size must be at least 1".into()))
            }
            Self::FixedSample { set } if set.is_empty() => Err(Error::InvalidSpec("fixed sample set is empty".into())),
            Self::FixedSample { set } => match set.members().iter().find(|&&v| v >= n) {
                Some(&v) => Err(Error::VertexOutOfRange { vertex: v, n }),
                None => Ok(()),
            },
            Self::MajorityDefault { default_vertex } if *default_vertex >= n => {
                Err(Error::VertexOutOfRange { vertex: *default_vertex, n })
            }
            _ => Ok(()),
        }
    }

    pub fn run(&self, profile: &NominationProfile, rng: &mut RandomnessSource) -> Result<MechanismTrace> {
        self.validate(profile.n(), profile.model())?;
        let n = profile.n();
        match self {
            Self::RandomKSample { .. } => run_random_k_sample(profile, self.resolve_k(n), rng),
            Self::SimpleKSample { .. } => run_simple_k_sample(profile, self.resolve_k(n), rng),
            Self::FixedSample { set } => run_fixed_sample(profile, set),
            Self::MajorityDefault { default_vertex } => run_majority_default(profile, *default_vertex),
        }
    }
}

impl fmt::Display for MechanismSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let size = |k: &SampleSize| match k {
            SampleSize::Fixed(k) => k.to_string(),
            SampleSize::Auto => "auto".to_string(),
        };
        match self {
            Self::RandomKSample { k } => write!(f, "random-k:{}", size(k)),
            Self::SimpleKSample { k } => write!(f, "simple-k:{}", size(k)),
            Self::FixedSample { set } => {
                let ids: Vec<String> = set.members().iter().map(usize::to_string).collect();
                write!(f, "fixed:{}", ids.join(","))
            }
            Self::MajorityDefault { default_vertex } => write!(f, "majority-default:{default_vertex}"),
        }
    }
}

impl FromStr for MechanismSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidSpec(format!("`{s}`: {why}"));
        let (kind, arg) = s.split_once(':').ok_or_else(|| bad("expected <kind>:<arg>"))?;
        let size = || -> Result<SampleSize> {
            match arg {
                "auto" => Ok(SampleSize::Auto),
                k => match k.parse::<usize>() {
                    Ok(0) => Err(bad("sample size must be at least 1")),
                    Ok(k) => Ok(SampleSize::Fixed(k)),
                    Err(_) => Err(bad("sample size must be an integer or `auto`")),
                },
            }
        };
        match kind {
            "random-k" => Ok(Self::RandomKSample { k: size()? }),
            "simple-k" => Ok(Self::SimpleKSample { k: size()? }),
            "fixed" => {
                let ids = arg
                    .split(',')
                    .map(|v| v.trim().parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad("expected comma-separated vertex ids"))?;
                if ids.is_empty() {
                    return Err(bad("fixed sample set is empty"));
                }
                Ok(Self::fixed(ids))
            }
            "majority-default" => {
                let d = arg.parse::<usize>().map_err(|_| bad("expected a vertex id"))?;
                Ok(Self::majority_default(d))
            }
            _ => Err(bad("unknown mechanism kind")),
        }
    }
}

/// One realized run of a mechanism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MechanismTrace {
    /// The sample: a set for Random k-sample and fixed samples, a multiset for
    /// Simple k-sample, empty for Majority with Default.
    pub sample: VertexSet,
    /// Vertices outside the sample nominated by it.
    pub nominated: VertexSet,
    pub winner: Option<usize>,
}

pub fn winner_degree(trace: &MechanismTrace, profile: &NominationProfile) -> usize {
    trace.winner.map_or(0, |w| profile.in_degrees()[w] as usize)
}

pub fn run_random_k_sample(
    profile: &NominationProfile,
    k: usize,
    rng: &mut RandomnessSource,
) -> Result<MechanismTrace> {
    require_single(profile)?;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let draws: Vec<usize> = (0..k).map(|_| rng.draw(profile.n())).collect();
    let mut scratch = Scratch::new(profile.n());
    let winner = scratch.sample_rule(profile, &draws);
    Ok(MechanismTrace {
        sample: VertexSet::new(draws),
        nominated: VertexSet::new(scratch.candidates.iter().copied()),
        winner,
    })
}

pub fn run_simple_k_sample(
    profile: &NominationProfile,
    k: usize,
    rng: &mut RandomnessSource,
) -> Result<MechanismTrace> {
    let n = profile.n();
    if k == 0 || k > n - 1 {
        return Err(Error::InvalidArgument(format!("k = {k} outside [1, {}]", n - 1)));
    }
    let draws: Vec<usize> = (0..k).map(|_| rng.draw(n)).collect();
    let mut scratch = Scratch::new(n);
    let winner = scratch.plurality_rule(profile, &draws);
    Ok(MechanismTrace {
        sample: VertexSet::from_draws(&draws),
        nominated: VertexSet::new(scratch.candidates.iter().copied()),
        winner,
    })
}

pub fn run_fixed_sample(profile: &NominationProfile, fixed_set: &VertexSet) -> Result<MechanismTrace> {
    require_single(profile)?;
    MechanismSpec::FixedSample { set: fixed_set.clone() }.validate(profile.n(), profile.model())?;
    let mut scratch = Scratch::new(profile.n());
    let winner = scratch.sample_rule(profile, fixed_set.members());
    Ok(MechanismTrace {
        sample: VertexSet::new(fixed_set.members().iter().copied()),
        nominated: VertexSet::new(scratch.candidates.iter().copied()),
        winner,
    })
}

pub fn run_majority_default(profile: &NominationProfile, default_vertex: usize) -> Result<MechanismTrace> {
    require_single(profile)?;
    MechanismSpec::majority_default(default_vertex).validate(profile.n(), profile.model())?;
    Ok(MechanismTrace {
        sample: VertexSet::default(),
        nominated: VertexSet::default(),
        winner: Some(majority_default_winner(profile, default_vertex)),
    })
}

/// Least `v != d` whose in-degree ignoring `d`'s edges exceeds `⌈n/2⌉`, else `d`.
/// Works on either model.
pub fn majority_default_winner(profile: &NominationProfile, d: usize) -> usize {
    let threshold = profile.n().div_ceil(2);
    (0..profile.n())
        .filter(|&v| v != d)
        .find(|&v| profile.in_degrees()[v] as usize - usize::from(profile.nominates(d, v)) > threshold)
        .unwrap_or(d)
}

fn require_single(profile: &NominationProfile) -> Result<()> {
    match profile.model() {
        Model::Single => Ok(()),
        found => Err(Error::ModelMismatch { expected: Model::Single, found }),
    }
}

pub(crate) fn ceil_sqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r < n {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= n {
        r -= 1;
    }
    r
}

/// Reusable buffers for evaluating winner rules without allocation. Marks are
/// generation-stamped so clearing is O(1).
#[derive(Debug, Clone)]
pub(crate) struct Scratch {
    generation: u32,
    in_sample: Vec<u32>,
    in_candidates: Vec<u32>,
    score_stamp: Vec<u32>,
    score: Vec<u32>,
    members: Vec<usize>,
    /// After a call: W for the sample rule, eligible nominated vertices for the
    /// plurality rule. Unordered.
    pub(crate) candidates: Vec<usize>,
}

impl Scratch {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            generation: 0,
            in_sample: vec![0; n],
            in_candidates: vec![0; n],
            score_stamp: vec![0; n],
            score: vec![0; n],
            members: Vec::new(),
            candidates: Vec::new(),
        }
    }

    fn next_generation(&mut self) {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.in_sample.fill(0);
            self.in_candidates.fill(0);
            self.score_stamp.fill(0);
            self.generation = 1;
        }
    }

    fn mark_sample(&mut self, draws: &[usize]) {
        self.members.clear();
        for &d in draws {
            if self.in_sample[d] != self.generation {
                self.in_sample[d] = self.generation;
                self.members.push(d);
            }
        }
    }

    fn bump(&mut self, v: usize) -> bool {
        let fresh = self.score_stamp[v] != self.generation;
        if fresh {
            self.score_stamp[v] = self.generation;
            self.score[v] = 0;
        }
        self.score[v] += 1;
        fresh
    }

    fn score_of(&self, v: usize) -> u32 {
        if self.score_stamp[v] == self.generation {
            self.score[v]
        } else {
            0
        }
    }

    /// W = vertices outside the sample nominated by it; winner maximizes
    /// in-degree from outside W. `draws` may repeat vertices.
    pub(crate) fn sample_rule(&mut self, profile: &NominationProfile, draws: &[usize]) -> Option<usize> {
        self.next_generation();
        self.mark_sample(draws);
        self.candidates.clear();
        for i in 0..self.members.len() {
            let s = self.members[i];
            for &t in profile.out(s) {
                if self.in_sample[t] != self.generation && self.in_candidates[t] != self.generation {
                    self.in_candidates[t] = self.generation;
                    self.candidates.push(t);
                }
            }
        }
        // score[u] = in-degree of u from W
        for i in 0..self.candidates.len() {
            let w = self.candidates[i];
            for &t in profile.out(w) {
                if self.in_candidates[t] == self.generation {
                    self.bump(t);
                }
            }
        }
        let in_deg = profile.in_degrees();
        let mut best: Option<(u32, usize)> = None;
        for &u in &self.candidates {
            let s = in_deg[u] - self.score_of(u);
            best = match best {
                Some((bs, bu)) if bs > s || (bs == s && bu < u) => Some((bs, bu)),
                _ => Some((s, u)),
            };
        }
        best.map(|(_, u)| u)
    }

    /// Winner maximizes multiplicity-weighted in-degree from the sample among
    /// vertices outside it; none when no outside vertex is nominated.
    pub(crate) fn plurality_rule(&mut self, profile: &NominationProfile, draws: &[usize]) -> Option<usize> {
        self.next_generation();
        self.mark_sample(draws);
        self.candidates.clear();
        for &d in draws {
            for &t in profile.out(d) {
                if self.in_sample[t] != self.generation && self.bump(t) {
                    self.candidates.push(t);
                }
            }
        }
        let mut best: Option<(u32, usize)> = None;
        for &u in &self.candidates {
            let s = self.score[u];
            best = match best {
                Some((bs, bu)) if bs > s || (bs == s && bu < u) => Some((bs, bu)),
                _ => Some((s, u)),
            };
        }
        best.map(|(_, u)| u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> NominationProfile {
        NominationProfile::single(&[2, 2, 0]).unwrap()
    }

    fn sample_rule(p: &NominationProfile, draws: &[usize]) -> (Vec<usize>, Option<usize>) {
        let mut s = Scratch::new(p.n());
        let w = s.sample_rule(p, draws);
        let mut c = s.candidates.clone();
        c.sort_unstable();
        (c, w)
    }

    #[test]
    fn random_k_single_draw_examples() {
        let p = tri();
        assert_eq!(sample_rule(&p, &[0]), (vec![2], Some(2)));
        assert_eq!(sample_rule(&p, &[2]), (vec![0], Some(0)));
        let cycle = NominationProfile::single(&[1, 0]).unwrap();
        assert_eq!(sample_rule(&cycle, &[0]), (vec![1], Some(1)));
    }

    #[test]
    fn simple_k_examples() {
        let p = NominationProfile::multi(vec![vec![2], vec![2], vec![0, 1]]).unwrap();
        let mut s = Scratch::new(3);
        assert_eq!(s.plurality_rule(&p, &[2]), Some(0));
        assert_eq!(s.plurality_rule(&p, &[0]), Some(2));
        let empty = NominationProfile::empty(3).unwrap();
        for d in 0..3 {
            assert_eq!(s.plurality_rule(&empty, &[d]), None);
        }
    }

    #[test]
    fn fixed_sample_examples() {
        let star = NominationProfile::single(&[1, 0, 0, 0, 0]).unwrap();
        let t = run_fixed_sample(&star, &VertexSet::new([0])).unwrap();
        assert_eq!(t.nominated, VertexSet::new([1]));
        assert_eq!(t.winner, Some(1));
        assert_eq!(winner_degree(&t, &star), 1);
        assert_eq!(star.delta() - winner_degree(&t, &star), 3);

        let pairs = NominationProfile::single(&[1, 0, 3, 2]).unwrap();
        let t = run_fixed_sample(&pairs, &VertexSet::new([0, 1])).unwrap();
        assert!(t.nominated.is_empty());
        assert_eq!(t.winner, None);
        assert_eq!(winner_degree(&t, &pairs), 0);

        let p = NominationProfile::single(&[2, 2, 0, 2]).unwrap();
        let t = run_fixed_sample(&p, &VertexSet::new([0, 1])).unwrap();
        assert_eq!(t.nominated, VertexSet::new([2]));
        assert_eq!(t.winner, Some(2));
    }

    #[test]
    fn majority_default_examples() {
        let p = NominationProfile::single(&[5, 5, 5, 5, 5, 0]).unwrap();
        assert_eq!(run_majority_default(&p, 0).unwrap().winner, Some(5));
        let cycle = NominationProfile::single(&[1, 0]).unwrap();
        assert_eq!(run_majority_default(&cycle, 0).unwrap().winner, Some(0));
    }

    #[test]
    fn majority_default_never_overrides_default_at_n5() {
        let n = 5;
        let mut idx = vec![0usize; n];
        loop {
            let nominees: Vec<usize> = (0..n).map(|v| if idx[v] < v { idx[v] } else { idx[v] + 1 }).collect();
            let p = NominationProfile::single(&nominees).unwrap();
            assert_eq!(majority_default_winner(&p, 0), 0, "{nominees:?}");
            let mut i = 0;
            while i < n && idx[i] == n - 2 {
                idx[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
            idx[i] += 1;
        }
    }

    #[test]
    fn model_errors() {
        let m = NominationProfile::empty(3).unwrap();
        let mut rng = RandomnessSource::from_seed(0);
        assert!(matches!(run_random_k_sample(&m, 1, &mut rng), Err(Error::ModelMismatch { .. })));
        assert!(matches!(run_fixed_sample(&m, &VertexSet::new([0])), Err(Error::ModelMismatch { .. })));
        assert!(matches!(run_majority_default(&m, 0), Err(Error::ModelMismatch { .. })));
        assert!(run_simple_k_sample(&tri(), 1, &mut rng).is_ok());
        assert!(run_simple_k_sample(&tri(), 3, &mut rng).is_err());
    }

    #[test]
    fn spec_strings_round_trip() {
        for s in ["random-k:3", "random-k:auto", "simple-k:2", "simple-k:auto", "fixed:0,3,7", "majority-default:2"] {
            let spec: MechanismSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        for s in ["random-k", "random-k:0", "fixed:", "fixed:a", "dictator:0", "majority-default:x"] {
            assert!(s.parse::<MechanismSpec>().is_err(), "{s}");
        }
    }

    #[test]
    fn k_resolution() {
        assert_eq!(MechanismSpec::RandomKSample { k: SampleSize::Auto }.resolve_k(64), 8);
        assert_eq!(MechanismSpec::RandomKSample { k: SampleSize::Auto }.resolve_k(65), 9);
        assert_eq!(MechanismSpec::RandomKSample { k: SampleSize::Auto }.resolve_k(2), 1);
        assert_eq!(MechanismSpec::random_k(5).resolve_k(3), 5);
        assert_eq!(MechanismSpec::simple_k(5).resolve_k(3), 2);
        assert_eq!(MechanismSpec::SimpleKSample { k: SampleSize::Auto }.resolve_k(100), 57);
        assert_eq!(MechanismSpec::fixed([0, 2]).report_k(5), 2);
    }

    #[test]
    fn ceil_sqrt_is_exact() {
        for n in 1..5000usize {
            let r = ceil_sqrt(n);
            assert!(r * r >= n && (r - 1) * (r - 1) < n, "{n}");
        }
    }

    #[test]
    fn sample_is_independent_of_profile() {
        let a = tri();
        let b = NominationProfile::single(&[1, 0, 1]).unwrap();
        for seed in 0..20 {
            let ta = run_random_k_sample(&a, 2, &mut RandomnessSource::from_seed(seed)).unwrap();
            let tb = run_random_k_sample(&b, 2, &mut RandomnessSource::from_seed(seed)).unwrap();
            assert_eq!(ta.sample, tb.sample);
            let sa = run_simple_k_sample(&a, 2, &mut RandomnessSource::from_seed(seed)).unwrap();
            let sb = run_simple_k_sample(&b, 2, &mut RandomnessSource::from_seed(seed)).unwrap();
            assert_eq!(sa.sample, sb.sample);
        }
    }
}
