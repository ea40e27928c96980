//! Nomination graphs and degree computations.
//!
//! A profile over `n` vertices stores, for every vertex, the sorted set of
//! vertices it nominates. Vertex ids are `0..n`. Profiles are immutable
//! values: deviations return a modified copy.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which nomination domain a profile belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Every vertex nominates exactly one other vertex.
    Single,
    /// Arbitrary out-sets, abstention allowed.
    Multi,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Single => "single",
            Model::Multi => "multi",
        })
    }
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Model::Single),
            "multi" => Ok(Model::Multi),
            other => Err(Error::InvalidArgument(format!("unknown model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NominationProfile {
    model: Model,
    out: Vec<Vec<usize>>,
    in_deg: Vec<u32>,
}

impl NominationProfile {
    /// Builds a profile from per-vertex out-sets. Out-sets are sorted and
    /// deduplicated.
    pub fn new(model: Model, mut out: Vec<Vec<usize>>) -> Result<Self> {
        let n = out.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!("profile needs n >= 2, got {n}")));
        }
        for (v, targets) in out.iter_mut().enumerate() {
            targets.sort_unstable();
            targets.dedup();
            check_out_set(n, model, v, targets)?;
        }
        Ok(Self::from_validated(model, out))
    }

    /// Single-model profile from the nominee of each vertex.
    pub fn single(nominees: &[usize]) -> Result<Self> {
        Self::new(Model::Single, nominees.iter().map(|&t| vec![t]).collect())
    }

    /// Multi-model profile from explicit out-sets.
    pub fn multi(out: Vec<Vec<usize>>) -> Result<Self> {
        Self::new(Model::Multi, out)
    }

    /// Multi-model profile with no edges.
    pub fn empty(n: usize) -> Result<Self> {
        Self::new(Model::Multi, vec![Vec::new(); n])
    }

    pub(crate) fn from_validated(model: Model, out: Vec<Vec<usize>>) -> Self {
        let mut in_deg = vec![0u32; out.len()];
        for targets in &out {
            for &t in targets {
                in_deg[t] += 1;
            }
        }
        Self { model, out, in_deg }
    }

    pub fn n(&self) -> usize {
        self.out.len()
    }

    pub fn model(&self) -> Model {
        self.model
    }

    /// Sorted out-set of `v`.
    pub fn out(&self, v: usize) -> &[usize] {
        &self.out[v]
    }

    pub fn out_sets(&self) -> &[Vec<usize>] {
        &self.out
    }

    /// The nominee of `v` in the single model.
    pub fn nominee(&self, v: usize) -> Option<usize> {
        match self.out[v].as_slice() {
            [t] => Some(*t),
            _ => None,
        }
    }

    pub fn nominates(&self, from: usize, to: usize) -> bool {
        self.out[from].binary_search(&to).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(u, targets)| targets.iter().map(move |&v| (u, v)))
    }

    /// In-degree of `u` counting every edge.
    pub fn in_degree(&self, u: usize) -> Result<usize> {
        self.check_vertex(u)?;
        Ok(self.in_deg[u] as usize)
    }

    /// Cached in-degrees of all vertices.
    pub fn in_degrees(&self) -> &[u32] {
        &self.in_deg
    }

    /// In-degree of `u` counting only edges that originate in `from`. Each
    /// source contributes its multiplicity when `from` is a multiset.
    pub fn in_degree_from(&self, u: usize, from: &VertexSet) -> Result<usize> {
        self.check_vertex(u)?;
        let mut total = 0usize;
        for (s, mult) in from.iter_weighted() {
            self.check_vertex(s)?;
            if s != u && self.nominates(s, u) {
                total += mult as usize;
            }
        }
        Ok(total)
    }

    /// Maximum in-degree and the ascending list of vertices attaining it.
    pub fn max_degree(&self) -> (usize, Vec<usize>) {
        let delta = self.in_deg.iter().copied().max().unwrap_or(0);
        let argmax = (0..self.n()).filter(|&u| self.in_deg[u] == delta).collect();
        (delta as usize, argmax)
    }

    /// Maximum in-degree.
    pub fn delta(&self) -> usize {
        self.in_deg.iter().copied().max().unwrap_or(0) as usize
    }

    /// Lowest-id vertex of maximum in-degree.
    pub fn top_vertex(&self) -> usize {
        let delta = self.delta() as u32;
        self.in_deg.iter().position(|&d| d == delta).unwrap_or(0)
    }

    pub fn apply_deviation(&self, d: &Deviation) -> Result<Self> {
        self.check_vertex(d.vertex)?;
        let mut new_out = d.new_out.clone();
        new_out.sort_unstable();
        new_out.dedup();
        check_out_set(self.n(), self.model, d.vertex, &new_out)?;
        Ok(self.with_out_set(d.vertex, new_out))
    }

    /// Copy with `v`'s out-set replaced. The caller guarantees validity.
    pub(crate) fn with_out_set(&self, v: usize, new_out: Vec<usize>) -> Self {
        let mut in_deg = self.in_deg.clone();
        for &t in &self.out[v] {
            in_deg[t] -= 1;
        }
        for &t in &new_out {
            in_deg[t] += 1;
        }
        let mut out = self.out.clone();
        out[v] = new_out;
        Self { model: self.model, out, in_deg }
    }

    /// The deviation that restores `v`'s current out-set.
    pub fn current_vote(&self, v: usize) -> Deviation {
        Deviation { vertex: v, new_out: self.out[v].clone() }
    }

    /// Returns the single vertex whose out-set differs, if exactly one does.
    pub fn differing_vertex(&self, other: &Self) -> Option<usize> {
        if self.n() != other.n() {
            return None;
        }
        let mut diff = (0..self.n()).filter(|&v| self.out[v] != other.out[v]);
        match (diff.next(), diff.next()) {
            (Some(v), None) => Some(v),
            _ => None,
        }
    }

    fn check_vertex(&self, u: usize) -> Result<()> {
        if u < self.n() {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { vertex: u, n: self.n() })
        }
    }
}

fn check_out_set(n: usize, model: Model, v: usize, targets: &[usize]) -> Result<()> {
    for &t in targets {
        if t >= n {
            return Err(Error::VertexOutOfRange { vertex: t, n });
        }
        if t == v {
            return Err(Error::SelfLoop(v));
        }
    }
    if model == Model::Single && targets.len() != 1 {
        return Err(Error::ModelViolation(format!(
            "vertex {v} has out-degree {} in the single model",
            targets.len()
        )));
    }
    Ok(())
}

/// A set of vertices, optionally carrying a multiplicity per member.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct VertexSet {
    members: Vec<usize>,
    multiplicity: Option<Vec<u32>>,
}

impl VertexSet {
    pub fn new<I: IntoIterator<Item = usize>>(members: I) -> Self {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        Self { members, multiplicity: None }
    }

    /// Multiset of a draw sequence; multiplicities sum to `draws.len()`.
    pub fn from_draws(draws: &[usize]) -> Self {
        let mut sorted = draws.to_vec();
        sorted.sort_unstable();
        let mut members = Vec::new();
        let mut mult: Vec<u32> = Vec::new();
        for v in sorted {
            if members.last() == Some(&v) {
                *mult.last_mut().unwrap() += 1;
            } else {
                members.push(v);
                mult.push(1);
            }
        }
        Self { members, multiplicity: Some(mult) }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_multiset(&self) -> bool {
        self.multiplicity.is_some()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    pub fn multiplicity(&self, v: usize) -> u32 {
        match self.members.binary_search(&v) {
            Ok(i) => self.multiplicity.as_ref().map_or(1, |m| m[i]),
            Err(_) => 0,
        }
    }

    /// Sum of multiplicities (the number of draws for a sample multiset).
    pub fn total_weight(&self) -> usize {
        self.multiplicity
            .as_ref()
            .map_or(self.members.len(), |m| m.iter().map(|&c| c as usize).sum())
    }

    pub fn iter_weighted(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.members
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, self.multiplicity.as_ref().map_or(1, |m| m[i])))
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut counts = std::collections::BTreeMap::new();
        for (v, m) in self.iter_weighted().chain(other.iter_weighted()) {
            *counts.entry(v).or_insert(0u32) += m;
        }
        let members = counts.keys().copied().collect();
        let multiplicity = if self.is_multiset() || other.is_multiset() {
            Some(counts.values().copied().collect())
        } else {
            None
        };
        Self { members, multiplicity }
    }
}

impl fmt::Display for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, m)) in self.iter_weighted().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            if self.is_multiset() && m > 1 {
                write!(f, "{v}x{m}")?;
            } else {
                write!(f, "{v}")?;
            }
        }
        f.write_str("}")
    }
}

/// Replacement of one vertex's out-set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deviation {
    pub vertex: usize,
    pub new_out: Vec<usize>,
}

impl Deviation {
    pub fn new(vertex: usize, new_out: Vec<usize>) -> Self {
        Self { vertex, new_out }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star5() -> NominationProfile {
        NominationProfile::single(&[1, 0, 0, 0, 0]).unwrap()
    }

    #[test]
    fn star_degrees() {
        let p = star5();
        assert_eq!(p.in_degree(0).unwrap(), 4);
        assert_eq!(p.in_degree_from(0, &VertexSet::new([1, 2])).unwrap(), 2);
        assert!(matches!(p.in_degree(5), Err(Error::VertexOutOfRange { vertex: 5, n: 5 })));
    }

    #[test]
    fn multiset_sources_carry_multiplicity() {
        let p = NominationProfile::multi(vec![vec![], vec![], vec![0, 1]]).unwrap();
        let s = VertexSet::from_draws(&[2, 2]);
        assert_eq!(p.in_degree_from(0, &s).unwrap(), 2);
        assert_eq!(s.total_weight(), 2);
    }

    #[test]
    fn max_degree_examples() {
        let empty = NominationProfile::empty(4).unwrap();
        assert_eq!(empty.max_degree(), (0, vec![0, 1, 2, 3]));

        let p = NominationProfile::single(&[2, 2, 0]).unwrap();
        assert_eq!(p.max_degree(), (2, vec![2]));

        let p = NominationProfile::single(&[3, 0, 0, 0]).unwrap();
        assert_eq!(p.max_degree(), (3, vec![0]));
    }

    #[test]
    fn deviations() {
        let p = NominationProfile::single(&[1, 0, 0]).unwrap();
        assert_eq!(p.apply_deviation(&p.current_vote(2)).unwrap(), p);

        let q = p.apply_deviation(&Deviation::new(2, vec![1])).unwrap();
        assert_eq!(q, NominationProfile::single(&[1, 0, 1]).unwrap());
        assert_eq!(p.out(2), &[0]);
        assert_eq!(p.differing_vertex(&q), Some(2));

        let m = NominationProfile::multi(vec![vec![1, 2], vec![0], vec![]]).unwrap();
        let m2 = m.apply_deviation(&Deviation::new(0, vec![])).unwrap();
        assert!(m2.out(0).is_empty());
        assert_eq!(m2.edge_count(), 1);
    }

    #[test]
    fn deviation_errors() {
        let p = NominationProfile::single(&[1, 0, 0]).unwrap();
        assert!(matches!(p.apply_deviation(&Deviation::new(1, vec![1])), Err(Error::SelfLoop(1))));
        assert!(matches!(
            p.apply_deviation(&Deviation::new(1, vec![0, 2])),
            Err(Error::ModelViolation(_))
        ));
        assert!(matches!(p.apply_deviation(&Deviation::new(1, vec![])), Err(Error::ModelViolation(_))));
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(NominationProfile::single(&[0, 0]), Err(Error::SelfLoop(0))));
        assert!(matches!(NominationProfile::single(&[3, 0]), Err(Error::VertexOutOfRange { .. })));
        assert!(NominationProfile::single(&[0]).is_err());
    }

    #[test]
    fn all_abstaining_multi_profile_is_valid() {
        let p = NominationProfile::empty(3).unwrap();
        assert_eq!(p.delta(), 0);
        assert_eq!(p.top_vertex(), 0);
    }
}
