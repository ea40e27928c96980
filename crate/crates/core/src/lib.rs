//! Impartial selection on nomination profiles: mechanisms, exact winner
//! distributions, seeded Monte Carlo estimation of the additive gap, instance
//! generators, and exhaustive verification of impartiality.

pub mod cli;
pub mod error;
pub mod exact;
pub mod generators;
pub mod io;
pub mod mechanisms;
pub mod montecarlo;
pub mod profile;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
pub use mechanisms::{MechanismSpec, MechanismTrace, SampleSize};
pub use profile::{Deviation, Model, NominationProfile, VertexSet};
