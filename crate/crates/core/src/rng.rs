//! Seeded random streams.
//!
//! Every stochastic operation draws from ChaCha20 keyed by a 64-bit master
//! seed, with a separate 64-bit stream per trial. Bench cells use
//! `stream = cell << 32 | trial`, so no two (cell, trial) pairs share a stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

/// Name of the generator family, echoed in reports.
pub const GENERATOR: &str = "chacha20";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamSeed {
    pub master: u64,
    pub stream: u64,
}

impl StreamSeed {
    pub fn new(master: u64, stream: u64) -> Self {
        Self { master, stream }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }

    /// Same master seed, different stream.
    pub fn with_stream(&self, stream: u64) -> Self {
        Self {
            master: self.master,
            stream,
        }
    }
}

pub fn stream_id(cell: u32, trial: u32) -> u64 {
    ((cell as u64) << 32) | trial as u64
}

/// Fresh master seed from the operating system.
pub fn entropy_seed() -> u64 {
    rand::rng().random()
}
