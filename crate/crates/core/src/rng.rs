//! Named random substreams derived from a single master seed.
//!
//! A stream is addressed by `(purpose, a, b)`, e.g. `(Purpose::Move, stage,
//! particle)`. Keys are mixed with splitmix64 into a ChaCha seed, so the draws
//! seen by particle `i` at stage `n` never depend on how many other particles
//! ran before it or on which thread.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Init = 1,
    Resample = 2,
    Move = 3,
    Shuffle = 4,
    Restart = 5,
    Segment = 6,
    Run = 7,
    Block = 8,
    Data = 9,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Streams {
    pub seed: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn key(&self, purpose: Purpose, a: u64, b: u64) -> u64 {
        let mut h = splitmix64(self.seed);
        h = splitmix64(h ^ purpose as u64);
        h = splitmix64(h ^ a);
        splitmix64(h ^ b.rotate_left(32))
    }

    pub fn rng(&self, purpose: Purpose, a: u64, b: u64) -> StreamRng {
        ChaCha8Rng::seed_from_u64(self.key(purpose, a, b))
    }

    /// Child master seed, used to hand independent seeds to repeated runs.
    pub fn derive(&self, purpose: Purpose, a: u64) -> Streams {
        Streams::new(self.key(purpose, a, u64::MAX))
    }
}
