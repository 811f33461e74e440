//! Keyed random streams.
//!
//! Every random quantity is drawn from a ChaCha8 stream whose key is derived
//! from (master seed, sample index, purpose) and whose 64-bit stream id is the
//! site index. Streams never depend on scheduling, so results are identical
//! for any worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Disorder = 1,
    Noise = 2,
    Probe = 3,
}

/// Seed for one (sample, purpose) pair.
pub fn derive_seed(master: u64, sample: u64, purpose: Purpose) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(sample)) ^ (purpose as u64).wrapping_mul(0xA24B_AED4_963E_E407))
}

/// Stream `stream` of the generator keyed by `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
