//! Deterministic splittable random streams.
//!
//! Every simulated entity (replicate, particle, cell) draws from a
//! ChaCha8 stream keyed by a master seed plus a stable key derived from
//! its identity (replicate index, Ulam–Harris label). Streams are
//! independent of scheduling, so parallel runs reproduce sequential
//! ones byte for byte.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step; the standard 64-bit finalizer.
#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a sequence of key words into a single 64-bit stream key.
pub fn mix_key(words: &[u64]) -> u64 {
    let mut h = 0x51_7c_c1_b7_27_22_0a_95u64;
    for &w in words {
        let mut s = h ^ w;
        h = splitmix64(&mut s);
    }
    h
}

/// Stable key for an Ulam–Harris label (root = empty word).
pub fn label_key(label: &[u32]) -> u64 {
    let mut h = 0xa076_1d64_78bd_642fu64;
    for &c in label {
        let mut s = h ^ u64::from(c).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        h = splitmix64(&mut s);
    }
    h
}

/// Derives an independent ChaCha8 stream from `seed` and key words.
pub fn stream(seed: u64, words: &[u64]) -> ChaCha8Rng {
    let mut state = seed ^ mix_key(words);
    let mut seed_bytes = [0u8; 32];
    for chunk in seed_bytes.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed_bytes)
}

/// Master seed of one simulated system; hands out per-particle streams.
#[derive(Debug, Clone, Copy)]
pub struct RunRng {
    seed: u64,
}

impl RunRng {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    /// Seed for replicate `rep` of a Monte Carlo experiment.
    pub fn replicate(seed: u64, rep: u64) -> Self {
        Self {
            seed: mix_key(&[seed, 0x7265_706c, rep]),
        }
    }

    /// Stream owned by the particle with the given label.
    pub fn particle(&self, label: &[u32]) -> ChaCha8Rng {
        stream(self.seed, &[label_key(label)])
    }

    /// Stream for auxiliary draws keyed by a tag.
    pub fn tagged(&self, tag: u64) -> ChaCha8Rng {
        stream(self.seed, &[0x7461_67, tag])
    }
}
