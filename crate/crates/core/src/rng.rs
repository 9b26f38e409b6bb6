//! Deterministic stream derivation.
//!
//! Every random draw in the toolkit comes from a [`ChaCha12Rng`] obtained
//! through a [`SeedTree`]. Streams are addressed by integer paths
//! (e.g. `[STREAM_EPISODE, episode, STREAM_WIND]`), so independent parts of a
//! run can be reseeded or evaluated out of order without perturbing each
//! other.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Named path roots, so call sites read as intent rather than magic numbers.
pub mod stream {
    pub const WIND: u64 = 1;
    pub const LAYOUT: u64 = 2;
    pub const CHANNEL: u64 = 3;
    pub const POLICY: u64 = 4;
    pub const REPLAY: u64 = 5;
    pub const INIT: u64 = 6;
    pub const EPISODE: u64 = 7;
    pub const EVAL: u64 = 8;
    pub const PEER: u64 = 9;
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn absorb(state: u64, word: u64) -> u64 {
    let mut w = word.wrapping_add(0x1b87_3593_64c6_2b41);
    let mut s = state ^ splitmix64(&mut w);
    splitmix64(&mut s)
}

/// Derives independent, reproducible RNG streams from one master seed.
///
/// `child` is a left fold over the path, so
/// `tree.child(&[a]).child(&[b]) == tree.child(&[a, b])`.
#[derive(Clone, Copy, Debug)]
pub struct SeedTree {
    node: u64,
}

impl SeedTree {
    pub fn new(master: u64) -> Self {
        Self { node: master }
    }

    pub fn master(&self) -> u64 {
        self.node
    }

    /// Child tree rooted at `node/path...`.
    pub fn child(&self, path: &[u64]) -> SeedTree {
        let mut node = self.node;
        for &word in path {
            node = absorb(node, word);
        }
        SeedTree { node }
    }

    /// A fresh ChaCha stream for the given path.
    pub fn stream(&self, path: &[u64]) -> ChaCha12Rng {
        let mut state = absorb(self.child(path).node, u64::MAX);
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        ChaCha12Rng::from_seed(seed)
    }
}
