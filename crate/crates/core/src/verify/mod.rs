//! Exhaustive verification: impartiality over whole profile spaces, strong
//! sample functions, exact worst-case gaps, and the four-vertex refutation
//! driver for deterministic mechanisms.

mod impartial;
mod refute;
mod sample;
mod space;

use std::fmt;

use num_traits::Signed;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{self, format_rational, Rational, WinnerDistribution, DEFAULT_ENUMERATION_CAP};
use crate::io::format_profile;
use crate::mechanisms::{majority_default_winner, MechanismSpec, Scratch};
use crate::profile::NominationProfile;

pub use impartial::{check_impartial, measure_additive_gap_exhaustive, GapMeasurement};
pub use refute::{refute_two_additive, MAX_QUERIES};
pub use sample::{
    catalog, check_sample_constant, check_sample_mechanism_impartial, check_strong_sample, falsify_characterization,
    sample_function, FalsifierRow, SampleFunction, SampleMechanism,
};
pub use space::{ProfileSpace, DEFAULT_PROFILE_BUDGET};
pub use sample::CATALOG as SAMPLE_CATALOG;

/// A mechanism queried as a black box for its exact winner distribution.
pub trait MechanismOracle: Sync {
    fn name(&self) -> String;
    fn distribution(&self, profile: &NominationProfile) -> Result<WinnerDistribution>;
}

/// A mechanism spec evaluated through exact enumeration.
#[derive(Debug, Clone)]
pub struct ExactMechanism {
    pub spec: MechanismSpec,
    pub cap: u128,
}

impl ExactMechanism {
    pub fn new(spec: MechanismSpec) -> Self {
        Self { spec, cap: DEFAULT_ENUMERATION_CAP }
    }
}

impl MechanismOracle for ExactMechanism {
    fn name(&self) -> String {
        self.spec.to_string()
    }

    fn distribution(&self, profile: &NominationProfile) -> Result<WinnerDistribution> {
        exact::exact_distribution_with_cap(&self.spec, profile, self.cap)
    }
}

type WinnerFn = dyn Fn(&NominationProfile) -> Option<usize> + Send + Sync;

/// A deterministic mechanism given as a winner function.
pub struct DeterministicOracle {
    name: String,
    f: Box<WinnerFn>,
}

impl DeterministicOracle {
    pub fn new(name: impl Into<String>, f: impl Fn(&NominationProfile) -> Option<usize> + Send + Sync + 'static) -> Self {
        Self { name: name.into(), f: Box::new(f) }
    }

    pub fn winner(&self, profile: &NominationProfile) -> Option<usize> {
        (self.f)(profile)
    }
}

impl fmt::Debug for DeterministicOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DeterministicOracle").field("name", &self.name).finish()
    }
}

impl MechanismOracle for DeterministicOracle {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn distribution(&self, profile: &NominationProfile) -> Result<WinnerDistribution> {
        let w = self.winner(profile);
        if let Some(w) = w {
            if w >= profile.n() {
                return Err(Error::Oracle(format!("{} returned vertex {w} for n = {}", self.name, profile.n())));
            }
        }
        Ok(WinnerDistribution::point(profile.n(), w))
    }
}

/// Names accepted by [`builtin_oracle`].
pub const BUILTIN_ORACLES: [&str; 4] = ["dictator:V", "plurality", "majority-default:D", "fixed-sample:V"];

/// Built-in deterministic oracles, defined on both models:
///
/// * `dictator:V` always selects `V`;
/// * `plurality` selects the least-id vertex of maximum in-degree;
/// * `majority-default:D` is Majority with Default, counting every edge not
///   leaving `D`;
/// * `fixed-sample:V` applies the sample winner rule to the sample `{V}`, so
///   it selects nobody when `V` abstains.
pub fn builtin_oracle(name: &str) -> Result<DeterministicOracle> {
    let (kind, arg) = match name.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (name, None),
    };
    let vertex = || -> Result<usize> {
        match arg {
            None => Ok(0),
            Some(a) => a.parse().map_err(|_| Error::InvalidArgument(format!("bad vertex `{a}` in oracle `{name}`"))),
        }
    };
    let oracle = match kind {
        "dictator" => {
            let v = vertex()?;
            DeterministicOracle::new(format!("dictator:{v}"), move |p| (v < p.n()).then_some(v))
        }
        "plurality" if arg.is_none() => DeterministicOracle::new("plurality", |p| Some(p.top_vertex())),
        "majority-default" => {
            let d = vertex()?;
            DeterministicOracle::new(format!("majority-default:{d}"), move |p| {
                (d < p.n()).then(|| majority_default_winner(p, d))
            })
        }
        "fixed-sample" => {
            let v = vertex()?;
            DeterministicOracle::new(format!("fixed-sample:{v}"), move |p| {
                (v < p.n()).then(|| Scratch::new(p.n()).sample_rule(p, &[v])).flatten()
            })
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "unknown oracle `{name}`; expected one of {}",
                BUILTIN_ORACLES.join(", ")
            )))
        }
    };
    Ok(oracle)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    ImpartialityViolation,
    StrongSampleViolation,
    AdditivityViolation,
    NoWinnerViolation,
    SampleNotConstant,
}

impl WitnessKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::ImpartialityViolation => "impartiality_violation",
            Self::StrongSampleViolation => "strong_sample_violation",
            Self::AdditivityViolation => "additivity_violation",
            Self::NoWinnerViolation => "no_winner_violation",
            Self::SampleNotConstant => "sample_not_constant",
        }
    }
}

impl fmt::Display for WitnessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A concrete, re-checkable counterexample.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub kind: WitnessKind,
    pub profile_a: NominationProfile,
    pub profile_b: Option<NominationProfile>,
    pub vertex: Option<usize>,
    /// Human-readable values involved (probabilities, degrees, samples).
    pub detail: String,
    /// For additivity violations, the recorded `Δ - E[δ(winner)]`.
    pub gap: Option<Rational>,
    /// Role names `a, b, c, d` mapped to vertex ids, when the witness comes
    /// from the refutation driver.
    pub relabeling: Option<[usize; 4]>,
}

impl Witness {
    pub(crate) fn impartiality(
        a: NominationProfile,
        b: NominationProfile,
        vertex: usize,
        pa: &Rational,
        pb: &Rational,
    ) -> Self {
        Self {
            kind: WitnessKind::ImpartialityViolation,
            detail: format!("P[{vertex} wins] = {} vs {}", format_rational(pa), format_rational(pb)),
            profile_a: a,
            profile_b: Some(b),
            vertex: Some(vertex),
            gap: None,
            relabeling: None,
        }
    }

    pub(crate) fn additivity(profile: NominationProfile, dist: &WinnerDistribution) -> Self {
        let gap = exact::additive_gap(dist, &profile);
        let mean = exact::expected_winner_degree(dist, &profile);
        Self {
            kind: WitnessKind::AdditivityViolation,
            detail: format!(
                "max in-degree {}, expected winner degree {}, gap {}",
                profile.delta(),
                format_rational(&mean),
                format_rational(&gap)
            ),
            profile_a: profile,
            profile_b: None,
            vertex: dist.certain_winner(),
            gap: Some(gap),
            relabeling: None,
        }
    }

    pub(crate) fn no_winner(profile: NominationProfile) -> Self {
        Self {
            kind: WitnessKind::NoWinnerViolation,
            detail: "mechanism selected no vertex".into(),
            profile_a: profile,
            profile_b: None,
            vertex: None,
            gap: None,
            relabeling: None,
        }
    }

    /// Re-derives the recorded violation from `oracle`'s exact distributions.
    /// Sample-function witnesses are checked with [`Witness::validate_sample`].
    pub fn validate(&self, oracle: &dyn MechanismOracle) -> Result<bool> {
        match self.kind {
            WitnessKind::ImpartialityViolation => {
                let (Some(b), Some(v)) = (&self.profile_b, self.vertex) else { return Ok(false) };
                if self.profile_a.differing_vertex(b) != Some(v) {
                    return Ok(false);
                }
                let da = oracle.distribution(&self.profile_a)?;
                let db = oracle.distribution(b)?;
                Ok(da.prob(v) != db.prob(v))
            }
            WitnessKind::AdditivityViolation => {
                let dist = oracle.distribution(&self.profile_a)?;
                let gap = exact::additive_gap(&dist, &self.profile_a);
                let recorded = self.gap.as_ref().is_none_or(|g| *g == gap);
                Ok(recorded && gap > Rational::from_integer(2.into()))
            }
            WitnessKind::NoWinnerViolation => {
                let dist = oracle.distribution(&self.profile_a)?;
                Ok(dist.p_none().is_positive())
            }
            WitnessKind::StrongSampleViolation | WitnessKind::SampleNotConstant => Err(Error::InvalidArgument(
                format!("{} witnesses are validated against a sample function", self.kind),
            )),
        }
    }

    /// Re-checks a sample-function witness against `g`.
    pub fn validate_sample(&self, g: &SampleFunction) -> Result<bool> {
        let Some(b) = &self.profile_b else { return Ok(false) };
        let sa = g.sample(&self.profile_a)?;
        let sb = g.sample(b)?;
        match self.kind {
            WitnessKind::StrongSampleViolation => {
                let Some(u) = self.vertex else { return Ok(false) };
                Ok(self.profile_a.differing_vertex(b) == Some(u) && sa.contains(u) && sa != sb)
            }
            WitnessKind::SampleNotConstant => Ok(sa != sb),
            WitnessKind::ImpartialityViolation => {
                let m = SampleMechanism::new(g);
                self.validate(&m)
            }
            _ => Ok(false),
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if let Some(v) = self.vertex {
            write!(f, " vertex={v}")?;
        }
        if let Some(r) = self.relabeling {
            write!(f, " roles a={} b={} c={} d={}", r[0], r[1], r[2], r[3])?;
        }
        writeln!(f, ": {}", self.detail)?;
        writeln!(f, "--- profile a")?;
        f.write_str(&format_profile(&self.profile_a))?;
        if let Some(b) = &self.profile_b {
            writeln!(f, "--- profile b")?;
            f.write_str(&format_profile(b))?;
        }
        Ok(())
    }
}
