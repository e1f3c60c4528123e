//! Non-adaptive characterization of Pauli channels.
//!
//! A Pauli channel on `n` qubits is described by a probability distribution
//! over the `4^n` Pauli strings. Sending one half of `n` Bell pairs through the
//! channel and measuring in the Bell basis yields one exact sample of that
//! distribution per channel use ([`sim`]). Every task then reduces to
//! classical estimation from i.i.d. samples:
//!
//! - [`learner`]: empirical ℓp learning with closed-form sample-size planning;
//! - [`tester`]: white-noise (uniformity) testing;
//! - [`unseen`]: entropy, support-size and ℓ1-distance estimation from
//!   fingerprints via a histogram linear program ([`lp`]);
//! - [`diamond`]: diamond distance between two Pauli channels;
//! - [`bench`]: seeded experiment sweeps and report serialization.

pub mod bench;
pub mod channels;
pub mod diamond;
pub mod distribution;
pub mod error;
pub mod learner;
pub mod lp;
pub mod metrics;
pub mod pauli;
pub mod rng;
pub mod sim;
pub mod tester;
pub mod unseen;

pub use channels::{make_channel, ChannelPreset};
pub use distribution::{ChannelFile, PauliDistribution};
pub use error::{Error, Result};
pub use metrics::{
    binary_entropy, fannes_audenaert_bound, lp_distance, shannon_entropy, support_size,
    total_variation, LpParams, PNorm,
};
pub use pauli::{decode, encode, Pauli, PauliString};
pub use rng::StreamSeed;
pub use sim::{draw_samples, SampleBatch};
