//! Seeded randomness for mechanism runs.
//!
//! `RandomnessSource` wraps ChaCha8 seeded through `SeedableRng::seed_from_u64`
//! and draws with `Rng::gen_range(0..n)` from rand 0.8. The draw sequence for a
//! given seed is stable across platforms and releases of this crate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RandomnessSource {
    rng: ChaCha8Rng,
}

impl RandomnessSource {
    pub fn from_seed(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Next uniform integer in `[0, n)`.
    pub fn draw(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    pub fn unit(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }
}

/// Stateless seed for stream `index` under `master`. Uses the SplitMix64
/// finalizer so neighbouring indices give unrelated seeds.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
