//! Counter-based seed streams: every component draws from its own
//! deterministic child stream of a master seed, so Monte Carlo iterations
//! can fan out without correlation and reduce in a fixed order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a master seed and a tag path.
pub fn child_seed(master: u64, tags: &[u64]) -> u64 {
    let mut s = splitmix64(master);
    for &t in tags {
        s = splitmix64(s ^ t.wrapping_mul(0xd6e8_feb8_6659_fd93));
    }
    s
}

/// RNG for the stream identified by `(master, tags...)`.
pub fn stream(master: u64, tags: &[u64]) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(child_seed(master, tags))
}
