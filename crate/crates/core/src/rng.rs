//! Seeded substreams: every (purpose, index) pair gets its own ChaCha8 stream so a
//! draw never depends on how many numbers other nodes or stages consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const ANGLE: u64 = 1;
pub(crate) const EDGE: u64 = 2;
pub(crate) const INTERNAL: u64 = 3;
pub(crate) const LABELS: u64 = 4;
pub(crate) const SPLIT: u64 = 5;
pub(crate) const RANDOM_ANGLES: u64 = 6;
pub(crate) const AUC_SAMPLE: u64 = 7;
pub(crate) const ROUTE_PAIRS: u64 = 8;

/// Generator for `(purpose, index)` under `seed`.
pub fn substream(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    debug_assert!(purpose < 256 && index < (1 << 56));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((purpose << 56) | index);
    rng
}
