//! Deterministic random streams.
//!
//! Every random draw in the crate comes from a stream addressed by
//! `(root seed, stream index)`. The index names the realization, never the
//! worker that happens to compute it, so results do not depend on scheduling.
//!
//! Stream indices pack three fields into 64 bits:
//!
//! ```text
//! | domain: 4 | drop: 28 | sample: 32 |
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

const DROP_BITS: u32 = 28;
const SAMPLE_BITS: u32 = 32;

/// What a stream is used for. Distinct domains never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    /// User positions, shadowing and angles for one drop.
    LargeScale = 1,
    /// Channels and pilot noise for one coherence block.
    SmallScale = 2,
    /// Data symbols and receiver noise for the symbol-level path.
    Symbols = 3,
    /// Randomized configurations in validation suites.
    Config = 4,
}

/// Packs `(domain, drop, sample)` into a stream index.
///
/// Panics if `drop >= 2^28` or `sample >= 2^32`.
pub fn stream_index(domain: Domain, drop: u64, sample: u64) -> u64 {
    assert!(drop < (1 << DROP_BITS), "drop index {drop} out of range");
    assert!(sample < (1 << SAMPLE_BITS), "sample index {sample} out of range");
    ((domain as u64) << (DROP_BITS + SAMPLE_BITS)) | (drop << SAMPLE_BITS) | sample
}

/// Independent stream for `(root_seed, index)`: a ChaCha8 key derived from the
/// seed, with `index` as the 64-bit stream id.
pub fn split_stream(root_seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
    rng.set_stream(index);
    rng
}

pub fn stream_for(root_seed: u64, domain: Domain, drop: u64, sample: u64) -> Stream {
    split_stream(root_seed, stream_index(domain, drop, sample))
}
