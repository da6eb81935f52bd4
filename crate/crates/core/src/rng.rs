//! Seed derivation.
//!
//! Every random object in the crate (a hash function, a synthetic data point)
//! draws from its own ChaCha stream whose seed is a pure function of the
//! global seed and the object's coordinates. Results therefore do not depend
//! on iteration order or on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keep streams for different purposes disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Dataset = 1,
    L2Hash = 2,
    SrpHash = 3,
    Queries = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `(seed, stream, major, minor)` into a single 64-bit sub-seed.
pub fn derive_seed(seed: u64, stream: Stream, major: u64, minor: u64) -> u64 {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ stream as u64);
    h = splitmix64(h ^ major);
    splitmix64(h ^ minor.rotate_left(32))
}

/// A generator for the object at `(major, minor)` of `stream`.
pub fn stream_rng(seed: u64, stream: Stream, major: u64, minor: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, major, minor))
}
