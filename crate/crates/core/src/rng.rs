//! Reproducible random-number substreams.
//!
//! Monte Carlo loops draw one substream per work item, keyed by the master
//! seed plus the item's coordinates. Results are therefore independent of how
//! items are batched across threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Fixed tags separating the substream spaces of unrelated consumers.
pub(crate) const TAG_OPTIMIZER: u64 = 0x4f50_5449;
pub(crate) const TAG_BATCH: u64 = 0x4241_5443;
pub(crate) const TAG_PSL_MC: u64 = 0x5053_4c4d;
pub(crate) const TAG_CORR: u64 = 0x434f_5252;
pub(crate) const TAG_SER: u64 = 0x5345_5253;

/// SplitMix64 finalizer; scrambles a composite tag into a stream id.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combine two coordinates into a single stream id.
pub fn stream_id(tag: u64, index: u64) -> u64 {
    mix64(tag.rotate_left(32) ^ mix64(index))
}

/// A generator seeded by `master` on the ChaCha stream `(tag, index)`.
///
/// Distinct `(tag, index)` pairs give statistically independent streams of
/// the same keyed cipher, so per-item draws do not depend on scheduling.
pub fn substream(master: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream_id(tag, index));
    rng
}
