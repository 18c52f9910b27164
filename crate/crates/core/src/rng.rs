//! Keyed random streams.
//!
//! Every stochastic step draws from a ChaCha8 stream whose seed is derived
//! from a master seed and a path of integer keys. Two runs that derive the
//! same path see the same numbers no matter which thread executes them or in
//! which order, which is what makes parallel sweeps reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Domain tags that keep streams for different purposes apart.
pub mod tag {
    pub const FRAME: u64 = 0x4652_414d;
    pub const ATTACK_SELECT: u64 = 0x4154_4b53;
    pub const BASELINE: u64 = 0x4241_5345;
    pub const COMBINATION: u64 = 0x434f_4d42;
    pub const READOUT: u64 = 0x5244_4f55;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and a sequence of keys.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

/// Open the stream addressed by `(seed, path)`.
pub fn stream(seed: u64, path: &[u64]) -> SimRng {
    let derived = derive_seed(seed, path);
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_mut(8).enumerate() {
        chunk.copy_from_slice(&splitmix64(derived.wrapping_add(i as u64)).to_le_bytes());
    }
    SimRng::from_seed(key)
}

/// Stream for frame `index` of a run seeded with `seed`.
pub fn frame_stream(seed: u64, index: u64) -> SimRng {
    stream(seed, &[tag::FRAME, index])
}
