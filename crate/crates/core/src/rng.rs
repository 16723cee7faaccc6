//! Deterministic random substreams.
//!
//! Every random quantity is drawn from a ChaCha8 stream whose 256-bit key is
//! derived from `(seed, domain)` with SplitMix64 and whose 64-bit stream id
//! is the caller's index (replicate number, perturbation number, ...).
//! ChaCha is counter based, so each substream is independent of how many
//! other substreams exist or in which order they are consumed. Changing any
//! part of this derivation changes every seeded result in the crate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Separates the purposes random numbers are used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Resample = 0x5245_5341_4d50_4c45,
    Dataset = 0x4441_5441_5345_5421,
    Perturbation = 0x5045_5254_5552_4221,
    Replicate = 0x5245_504c_4943_4154,
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a seed with a domain and an index into a new 64-bit seed.
pub fn derive_seed(seed: u64, domain: Domain, index: u64) -> u64 {
    let mut s = seed ^ (domain as u64);
    let a = splitmix64(&mut s);
    let mut t = a ^ index.wrapping_mul(0xd6e8_feb8_6659_fd93);
    splitmix64(&mut t)
}

pub fn substream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut state = seed ^ (domain as u64);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
