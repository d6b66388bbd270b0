//! Seed handling.
//!
//! Every randomized stage in the crate draws from a [`Xoshiro256PlusPlus`]
//! stream created by [`stream`] from the run seed plus fixed tags. Parallel
//! units (tree 7, fold 2, cell 13, ...) get their own stream, so results do
//! not depend on scheduling or parallelism degree.

use rand::SeedableRng;
pub use rand_xoshiro::Xoshiro256PlusPlus;

/// Stage tags. Each randomized stage owns one so that streams never collide.
pub mod tag {
    pub const SAMPLING: u64 = 0x01;
    pub const SPLIT: u64 = 0x02;
    pub const TREE: u64 = 0x03;
    pub const SVM_SHUFFLE: u64 = 0x04;
    pub const SVM_FOLDS: u64 = 0x05;
    pub const SKIPGRAM: u64 = 0x06;
    pub const ABLATION_CELL: u64 = 0x07;
    pub const SYNTH: u64 = 0x08;
}

/// SplitMix64 step; the standard seed mixer.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a base seed with stage/unit tags into one derived seed.
pub fn derive(seed: u64, tags: &[u64]) -> u64 {
    let mut state = seed;
    let mut out = splitmix64(&mut state);
    for &t in tags {
        let mut s = out ^ t.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        out = splitmix64(&mut s);
    }
    out
}

/// RNG stream for a (seed, tags) pair.
pub fn stream(seed: u64, tags: &[u64]) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(derive(seed, tags))
}
