//! Seeded random streams.
//!
//! Every consumer of randomness owns a ChaCha8 stream derived from a base
//! seed and a fixed stream id, so adding draws in one place never shifts the
//! values seen elsewhere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream ids used across the crate.
pub mod stream {
    pub const PROTOTYPES: u64 = 1;
    pub const LEXICON: u64 = 2;
    pub const SAMPLES: u64 = 3;
    pub const TEXT_TABLE: u64 = 4;
    pub const ENCODER_INIT: u64 = 5;
    pub const SHUFFLE: u64 = 6;
    pub const MINING: u64 = 7;
    /// Augmentation streams start here, one per `(epoch, slot)`.
    pub const AUGMENT_BASE: u64 = 1 << 32;
}

/// A ChaCha8 generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Augmentation stream for one sample slot of one epoch.
///
/// Giving every slot its own stream lets data-loading workers augment in
/// any order, or in parallel, and still reproduce the same batches.
pub fn augment_rng(seed: u64, epoch: u64, slot: u64) -> Rng {
    debug_assert!(slot < 1 << 24, "slot out of range");
    stream_rng(seed, stream::AUGMENT_BASE + (epoch << 24) + slot)
}
