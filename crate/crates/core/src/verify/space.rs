//! Mixed-radix indexing of every profile on `n` vertices.
//!
//! Vertex `v` contributes digit `v` (least significant first). In the single
//! model a digit `c` names the nominee `c < v ? c : c + 1`; in the multi model
//! it is a bitmask over the other `n - 1` vertices in the same order.

use crate::error::{Error, Result};
use crate::profile::{Model, NominationProfile};

/// Default cap on the number of profiles in an exhaustive check.
pub const DEFAULT_PROFILE_BUDGET: u128 = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProfileSpace {
    n: usize,
    model: Model,
    radix: usize,
    size: usize,
}

impl ProfileSpace {
    pub fn new(n: usize, model: Model, budget: u128) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("n must be at least 2, got {n}")));
        }
        let radix: u128 = match model {
            Model::Single => (n - 1) as u128,
            Model::Multi if n <= 64 => 1u128 << (n - 1),
            Model::Multi => u128::MAX,
        };
        let size = (0..n).try_fold(1u128, |acc, _| acc.checked_mul(radix)).unwrap_or(u128::MAX);
        if size > budget {
            return Err(Error::EnumerationTooLarge { required: size, cap: budget });
        }
        Ok(Self { n, model, radix: radix as usize, size: size as usize })
    }

    pub fn with_default_budget(n: usize, model: Model) -> Result<Self> {
        Self::new(n, model, DEFAULT_PROFILE_BUDGET)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// Number of out-sets available to one vertex.
    pub fn choices(&self) -> usize {
        self.radix
    }

    fn stride(&self, v: usize) -> usize {
        self.radix.pow(v as u32)
    }

    pub fn digit(&self, index: usize, v: usize) -> usize {
        (index / self.stride(v)) % self.radix
    }

    /// Index of the profile where `v` switches to out-set `choice`.
    pub fn with_digit(&self, index: usize, v: usize, choice: usize) -> usize {
        let s = self.stride(v);
        index - self.digit(index, v) * s + choice * s
    }

    /// The out-set of `v` encoded by `choice`.
    pub fn out_set(&self, v: usize, choice: usize) -> Vec<usize> {
        let other = |c: usize| if c < v { c } else { c + 1 };
        match self.model {
            Model::Single => vec![other(choice)],
            Model::Multi => (0..self.n - 1).filter(|j| choice >> j & 1 == 1).map(other).collect(),
        }
    }

    pub fn profile(&self, index: usize) -> NominationProfile {
        let out = (0..self.n).map(|v| self.out_set(v, self.digit(index, v))).collect();
        NominationProfile::from_validated(self.model, out)
    }

    /// Inverse of [`ProfileSpace::profile`].
    pub fn index_of(&self, profile: &NominationProfile) -> Option<usize> {
        if profile.n() != self.n || profile.model() != self.model {
            return None;
        }
        let squash = |v: usize, t: usize| if t < v { t } else { t - 1 };
        let mut index = 0;
        for v in (0..self.n).rev() {
            let digit = match self.model {
                Model::Single => squash(v, profile.nominee(v)?),
                Model::Multi => profile.out(v).iter().map(|&t| 1 << squash(v, t)).sum(),
            };
            index = index * self.radix + digit;
        }
        Some(index)
    }
}
