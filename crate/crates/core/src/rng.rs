//! Deterministic random-stream derivation.
//!
//! Every tree gets its own ChaCha stream selected by tree index, and every
//! node inside a tree gets a seed derived from its parent's seed and the side
//! it hangs on. A node's randomness therefore depends only on its path from
//! the root, not on the order in which sibling subtrees were trained.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream for tree `tree_index` of a forest seeded with `seed`.
pub fn tree_rng(seed: u64, tree_index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree_index);
    rng
}

pub fn node_rng(node_seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(node_seed)
}

/// Seed of the left (`side = 0`) or right (`side = 1`) child.
#[inline]
pub fn child_seed(parent: u64, side: u64) -> u64 {
    mix64(parent ^ mix64(side.wrapping_add(0x5851_F42D_4C95_7F2D)))
}
