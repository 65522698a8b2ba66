//! Deterministic, splittable randomness.
//!
//! Every instance index gets its own ChaCha stream keyed by the master seed,
//! so instance ι is bit-identical whether it is generated alone, in a batch,
//! or on another thread.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type InstanceRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sub-seed of stream `index`; a pure function of `(seed, index)`.
    pub fn sub_seed(&self, index: u64) -> u64 {
        mix64(self.seed ^ mix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
    }

    /// Generator for stream `index`.
    pub fn stream(&self, index: u64) -> InstanceRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    /// A child stream family, for nesting (e.g. one family per dataset).
    pub fn child(&self, label: u64) -> RngStream {
        RngStream::new(self.sub_seed(label ^ 0xC0FF_EE00_DEAD_BEEF))
    }
}
