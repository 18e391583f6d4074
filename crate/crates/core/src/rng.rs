//! Deterministic random-number substreams.
//!
//! All randomness in the crate flows from a single 64-bit master seed.
//! Independent substreams are derived by folding a path of 64-bit
//! components (trial index, epoch, batch, ...) into a ChaCha8 key with a
//! splitmix64 chain, so any unit of work is reproducible from
//! `(master seed, path)` alone and distinct paths are statistically
//! independent.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One trial's substream handle: `(master seed, trial index)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngStream {
    pub master: u64,
    pub trial: u64,
}

impl RngStream {
    pub fn new(master: u64, trial: u64) -> Self {
        RngStream { master, trial }
    }

    /// The generator for this `(seed, trial)` pair.
    pub fn rng(&self) -> ChaCha8Rng {
        derive_rng(self.master, &[self.trial])
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a generator from a master seed and a path of stream components.
pub fn derive_rng(master: u64, path: &[u64]) -> ChaCha8Rng {
    let mut state = master;
    splitmix64(&mut state);
    for &c in path {
        state ^= c.wrapping_mul(0xff51_afd7_ed55_8ccd);
        splitmix64(&mut state);
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
