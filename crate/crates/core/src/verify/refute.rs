//! Replays, against a concrete deterministic mechanism on four vertices in
//! the multi model, the case analysis showing that no impartial
//! deterministic mechanism is 2-additive. Each run ends in one of:
//!
//! * two queried profiles differing only in vertex `v`'s out-set where `v`
//!   wins in exactly one of them (impartiality);
//! * a queried profile whose winner has in-degree at least 3 below the
//!   maximum (additivity);
//! * a queried profile with no winner.
//!
//! Roles `a, b, c, d` are assigned from the oracle's answers; `a` is the
//! winner on the empty profile and the witness records the final role map.

use std::collections::HashMap;

use super::{DeterministicOracle, Witness};
use crate::error::{Error, Result};
use crate::exact::{Rational, WinnerDistribution};
use crate::profile::{Model, NominationProfile};

/// Upper limit on distinct oracle queries in one run.
pub const MAX_QUERIES: usize = 64;

const N: usize = 4;

struct Driver<'a> {
    oracle: &'a DeterministicOracle,
    memo: HashMap<NominationProfile, Option<usize>>,
}

/// Outcome of a query that lets the case analysis continue.
enum Step {
    Winner(usize),
    Done(Box<Witness>),
}

impl Driver<'_> {
    fn query(&mut self, p: &NominationProfile) -> Result<Step> {
        let w = match self.memo.get(p) {
            Some(&w) => w,
            None => {
                if self.memo.len() >= MAX_QUERIES {
                    return Err(Error::Oracle(format!("more than {MAX_QUERIES} queries")));
                }
                let first = self.oracle.winner(p);
                if self.oracle.winner(p) != first {
                    return Err(Error::Oracle(format!("{} is not deterministic", self.oracle.name)));
                }
                if let Some(w) = first {
                    if w >= N {
                        return Err(Error::Oracle(format!("{} returned vertex {w}", self.oracle.name)));
                    }
                }
                self.memo.insert(p.clone(), first);
                first
            }
        };
        Ok(match w {
            Some(w) => Step::Winner(w),
            None => Step::Done(Box::new(Witness::no_winner(p.clone()))),
        })
    }

    /// `v` must win in `p` and `q` alike, since they differ only in `v`'s
    /// vote.
    fn check_status(&mut self, p: &NominationProfile, q: &NominationProfile, v: usize) -> Result<Option<Witness>> {
        let wp = match self.query(p)? {
            Step::Winner(w) => w,
            Step::Done(w) => return Ok(Some(*w)),
        };
        let wq = match self.query(q)? {
            Step::Winner(w) => w,
            Step::Done(w) => return Ok(Some(*w)),
        };
        debug_assert_eq!(p.differing_vertex(q), Some(v));
        if (wp == v) != (wq == v) {
            let pr = |w: usize| if w == v { Rational::from_integer(1.into()) } else { Rational::from_integer(0.into()) };
            return Ok(Some(Witness::impartiality(p.clone(), q.clone(), v, &pr(wp), &pr(wq))));
        }
        Ok(None)
    }

    /// Additivity witness if the winner of `p` is at least 3 below the
    /// maximum in-degree.
    fn check_gap(&mut self, p: &NominationProfile) -> Result<Option<Witness>> {
        let w = match self.query(p)? {
            Step::Winner(w) => w,
            Step::Done(w) => return Ok(Some(*w)),
        };
        if p.delta() >= p.in_degrees()[w] as usize + 3 {
            return Ok(Some(Witness::additivity(p.clone(), &WinnerDistribution::point(N, Some(w)))));
        }
        Ok(None)
    }

    fn winner(&mut self, p: &NominationProfile) -> Result<Step> {
        self.query(p)
    }
}

fn with_votes(base: &NominationProfile, votes: &[(usize, &[usize])]) -> NominationProfile {
    let mut out: Vec<Vec<usize>> = base.out_sets().to_vec();
    for &(v, targets) in votes {
        out[v].extend_from_slice(targets);
    }
    NominationProfile::new(Model::Multi, out).expect("driver profiles are valid")
}

fn others(of: &[usize], v: usize) -> Vec<usize> {
    of.iter().copied().filter(|&u| u != v).collect()
}

macro_rules! settle {
    ($e:expr) => {
        if let Some(w) = $e? {
            return Ok(Some(w));
        }
    };
}

macro_rules! winner_or_return {
    ($d:expr, $p:expr) => {
        match $d.winner($p)? {
            Step::Winner(w) => w,
            Step::Done(w) => return Ok(Some(*w)),
        }
    };
}

/// Runs the case analysis; the returned witness validates against `oracle`.
pub fn refute_two_additive(oracle: &DeterministicOracle) -> Result<Witness> {
    let mut d = Driver { oracle, memo: HashMap::new() };
    let mut roles = [0usize; 4];
    let w = run(&mut d, &mut roles)?.ok_or_else(|| Error::Oracle("case analysis ended without a witness".into()))?;
    Ok(Witness { relabeling: Some(roles), ..w })
}

fn run(d: &mut Driver<'_>, roles: &mut [usize; 4]) -> Result<Option<Witness>> {
    let s = NominationProfile::empty(N)?;
    let a = winner_or_return!(d, &s);
    let rest: Vec<usize> = (0..N).filter(|&v| v != a).collect();
    let (b, c, dd) = (rest[0], rest[1], rest[2]);
    *roles = [a, b, c, dd];

    // x, y, z: c, b, d in turn vote for the other two of {b, c, d}.
    let voters = [c, b, dd];
    let mut one_voter = Vec::new();
    for &v in &voters {
        let targets = others(&rest, v);
        let p = with_votes(&s, &[(v, &targets)]);
        settle!(d.check_status(&s, &p, v));
        one_voter.push(p);
    }
    let mut winners = Vec::new();
    for p in &one_voter {
        winners.push(winner_or_return!(d, p));
    }

    if let Some(i) = winners.iter().position(|&w| w == a) {
        // Case 1: rename so the voter is c and its nominees are b and d.
        let voter = voters[i];
        let nominees = others(&rest, voter);
        let (b, dd) = (nominees[0], nominees[1]);
        *roles = [a, b, voter, dd];
        let base = &one_voter[i];

        let w = with_votes(base, &[(a, &[b, dd])]);
        settle!(d.check_status(base, &w, a));

        let w1 = with_votes(&w, &[(b, &[dd])]);
        settle!(d.check_status(&w, &w1, b));
        settle!(d.check_gap(&w1));
        let w2 = with_votes(&w, &[(dd, &[b])]);
        settle!(d.check_status(&w, &w2, dd));
        settle!(d.check_gap(&w2));
        // Now d wins w' and b wins w''; t adds the missing vote to each.
        let t = with_votes(&w, &[(b, &[dd]), (dd, &[b])]);
        settle!(d.check_status(&w1, &t, dd));
        settle!(d.check_status(&w2, &t, b));
        return Ok(None);
    }

    // Case 2: voter v's profile is won by f(v) in {b, c, d} \ {v}.
    let f = |v: usize| winners[voters.iter().position(|&u| u == v).unwrap()];
    let profile_of = |v: usize| &one_voter[voters.iter().position(|&u| u == v).unwrap()];
    if let Some(&v1) = voters.iter().find(|&&v| f(f(v)) == v) {
        // Two voters each hand the win to the other.
        let v2 = f(v1);
        let mut sorted = [v1, v2];
        sorted.sort_unstable();
        let third = others(&others(&rest, v1), v2)[0];
        *roles = [a, sorted[0], third, sorted[1]];
        let t1 = with_votes(&s, &[(v1, &others(&rest, v1)), (v2, &others(&rest, v2))]);
        let (p1, p2) = (profile_of(v1).clone(), profile_of(v2).clone());
        settle!(d.check_status(&p1, &t1, v2));
        settle!(d.check_status(&p2, &t1, v1));
        return Ok(None);
    }

    // A 3-cycle: each winner f(v) adds its own votes to v's profile.
    let mut extended = Vec::new();
    for &v in &voters {
        let u = f(v);
        let p = with_votes(profile_of(v), &[(u, &others(&rest, u))]);
        settle!(d.check_status(profile_of(v), &p, u));
        extended.push((v, u, p));
    }
    let clique = with_votes(&s, &[(b, &others(&rest, b)), (c, &others(&rest, c)), (dd, &others(&rest, dd))]);
    for (v, u, p) in &extended {
        // The remaining vertex of {b, c, d} joins the clique but lost p.
        let missing = others(&others(&rest, *v), *u)[0];
        settle!(d.check_status(p, &clique, missing));
    }
    settle!(d.check_gap(&clique));
    let boosted = with_votes(&clique, &[(a, &[b])]);
    settle!(d.check_status(&clique, &boosted, a));
    settle!(d.check_gap(&boosted));
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{builtin_oracle, WitnessKind};

    fn run_and_validate(oracle: &DeterministicOracle) -> Witness {
        let w = refute_two_additive(oracle).unwrap();
        assert!(w.validate(oracle).unwrap(), "{w}");
        w
    }

    #[test]
    fn dictator_hits_gap_three() {
        for v in 0..4 {
            let oracle = builtin_oracle(&format!("dictator:{v}")).unwrap();
            let w = run_and_validate(&oracle);
            assert_eq!(w.kind, WitnessKind::AdditivityViolation);
            assert_eq!(w.gap, Some(Rational::from_integer(3.into())));
            assert_eq!(w.profile_a.delta(), 3);
            assert_eq!(w.profile_a.in_degrees()[v], 0);
        }
    }

    #[test]
    fn plurality_and_majority_default() {
        let w = run_and_validate(&builtin_oracle("plurality").unwrap());
        assert_eq!(w.kind, WitnessKind::ImpartialityViolation);
        for dflt in 0..4 {
            let w = run_and_validate(&builtin_oracle(&format!("majority-default:{dflt}")).unwrap());
            assert!(matches!(w.kind, WitnessKind::ImpartialityViolation | WitnessKind::AdditivityViolation));
        }
    }

    #[test]
    fn partial_oracle_reports_no_winner() {
        let w = run_and_validate(&builtin_oracle("fixed-sample:0").unwrap());
        assert_eq!(w.kind, WitnessKind::NoWinnerViolation);
    }

    #[test]
    fn every_case_is_reachable() {
        // Oracles steering the driver into each branch, keyed on edge count and
        // the vote pattern. Whatever they answer, a valid witness comes back.
        let cycle = DeterministicOracle::new("cycle", |p| {
            let voters: Vec<usize> = (0..4).filter(|&v| !p.out(v).is_empty()).collect();
            match voters.as_slice() {
                [] => Some(0),
                [v] => Some(1 + (*v % 3)),
                _ => Some(p.top_vertex()),
            }
        });
        let swap = DeterministicOracle::new("swap", |p| {
            let voters: Vec<usize> = (0..4).filter(|&v| !p.out(v).is_empty()).collect();
            match voters.as_slice() {
                [] => Some(0),
                [1] => Some(2),
                [2] => Some(1),
                [3] => Some(1),
                _ => Some(0),
            }
        });
        for oracle in [cycle, swap] {
            run_and_validate(&oracle);
        }
        let flaky = std::sync::atomic::AtomicUsize::new(0);
        let flaky = DeterministicOracle::new("flaky", move |_| {
            Some(flaky.fetch_add(1, std::sync::atomic::Ordering::Relaxed) % 2)
        });
        assert!(refute_two_additive(&flaky).is_err());
    }

    #[test]
    fn exhaustive_over_small_oracle_family() {
        // Each oracle answers by a lookup on (number of voters, lowest voter);
        // 4^(5*4) is too many, so sweep a seeded sample of tables.
        let mut rng = crate::rng::RandomnessSource::from_seed(99);
        for _ in 0..500 {
            let table: Vec<usize> = (0..20).map(|_| rng.draw(4)).collect();
            let oracle = DeterministicOracle::new("table", move |p| {
                let voters: Vec<usize> = (0..4).filter(|&v| !p.out(v).is_empty()).collect();
                let key = voters.len() * 4 + voters.first().copied().unwrap_or(0);
                Some(table[key])
            });
            let w = refute_two_additive(&oracle).unwrap();
            assert!(w.validate(&oracle).unwrap(), "{w}");
        }
    }
}
