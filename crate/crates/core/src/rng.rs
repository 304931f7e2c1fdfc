//! Deterministic random substreams.
//!
//! Every independent work item (a randomization draw, a grid location) gets
//! its own ChaCha stream keyed by the master seed and the item's indices, so
//! results do not depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags that keep streams for different uses disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamKind {
    Randomization = 1,
    Channel = 2,
    Noise = 3,
    Repetition = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and an index path.
pub fn derive_seed(seed: u64, kind: StreamKind, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(kind as u64)) ^ index)
}

/// Independent generator for item `index` of the given kind.
pub fn substream(seed: u64, kind: StreamKind, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(derive_seed(seed, kind, index));
    rng
}
