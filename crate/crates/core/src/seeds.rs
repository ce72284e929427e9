//! Counter-based seed derivation for independent ensemble members.

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of member `index` of an ensemble keyed by `master`.
///
/// Depends only on `(master, index)`, so members can be evaluated in any
/// order or on any number of threads.
pub fn member_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master) ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}
