//! Counter-based stream derivation.
//!
//! Every random quantity in the crate is drawn from a generator fully determined
//! by a `(master_seed, stream_index)` pair, so results do not depend on how work is
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Generator type handed out by [`SeedStream::rng`].
pub type StreamRng = ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a tuple of tags (experiment id, n, replicate, ...) into one stream index.
pub fn stream_index(tags: &[u64]) -> u64 {
    tags.iter()
        .fold(0x6a09_e667_f3bc_c908, |acc, &t| mix64(acc ^ mix64(t)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    /// Stream for a tagged sub-task of the same master seed.
    pub fn child(&self, tags: &[u64]) -> Self {
        let mut all = Vec::with_capacity(tags.len() + 1);
        all.push(self.stream_index);
        all.extend_from_slice(tags);
        Self::new(self.master_seed, stream_index(&all))
    }

    pub fn rng(&self) -> StreamRng {
        let mut key = [0u8; 32];
        let mut state = mix64(self.master_seed ^ 0x243f_6a88_85a3_08d3);
        for chunk in key.chunks_exact_mut(8) {
            state = mix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(mix64(self.stream_index));
        rng
    }
}
