//! Deterministic round-based network simulation in the q-bounded
//! synchronous model, plus the experiments run on top of it.

mod config;
mod experiments;
pub mod stats;
mod transcript;
mod wallet;
mod world;

pub use config::{ConfigError, Experiment, SimConfig};
pub use experiments::{
    archiving_availability, bootstrap_equivalence, network_run, pow_equivalence, run_experiment,
    storage_profile, Distinguisher, ExperimentOutput, EXTRAPOLATED_BLOCK_BYTES,
};
pub use transcript::{Report, Transcript};
pub use wallet::Wallet;
pub use world::{party_key, ChainAudit, Envelope, World};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::hash::hash_concat;

/// Actor id of the environment's random stream.
pub const ENVIRONMENT_STREAM: u64 = u64::MAX;
/// Actor id of the adversary's random stream.
pub const ADVERSARY_STREAM: u64 = u64::MAX - 1;

/// Independent random stream for `actor` in `round`, derived from the root
/// seed by hashing so no RNG state is shared between actors.
pub fn stream(seed: u64, actor: u64, round: u64) -> ChaCha8Rng {
    let d = hash_concat(&[
        &seed.to_be_bytes(),
        &actor.to_be_bytes(),
        &round.to_be_bytes(),
    ]);
    ChaCha8Rng::from_seed(d.0)
}
