//! Counter-style random streams.
//!
//! Every random draw in the crate comes from a [`StreamKey`], a 64-bit key
//! derived from a master seed and a path of (purpose, index) pairs. Two
//! workers that derive the same path get the same stream no matter which
//! thread or in what order they run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// What a derived stream is used for. Distinct purposes never collide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Replication = 1,
    Data = 2,
    Bootstrap = 3,
    Moments = 4,
    Probe = 5,
    Experiment = 6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamKey(u64);

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl StreamKey {
    pub fn new(master_seed: u64) -> Self {
        Self(splitmix64(master_seed))
    }

    pub fn child(self, purpose: Purpose, index: u64) -> Self {
        let tagged = splitmix64(self.0 ^ splitmix64(purpose as u64));
        Self(splitmix64(tagged ^ splitmix64(index.wrapping_add(0x632B_E59B_D9B4_E019))))
    }

    /// Child keyed by a multi-component index (e.g. grid cell coordinates).
    pub fn child_path(self, purpose: Purpose, path: &[u64]) -> Self {
        path.iter()
            .fold(self.child(purpose, path.len() as u64), |k, &i| k.child(purpose, i))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    pub fn raw(self) -> u64 {
        self.0
    }
}
