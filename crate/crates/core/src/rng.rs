//! Counter-based random streams.
//!
//! A [`WalkRng`] is a SplitMix64 generator whose output at position `i` is a
//! pure function of `(key, i)`. Child streams are derived by mixing an id into
//! the key, so walk `j` of source `u` draws the same numbers regardless of how
//! walks are scheduled across workers.

use rand::RngCore;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkRng {
    /// `key + counter * GOLDEN_GAMMA`, kept incrementally.
    state: u64,
    counter: u64,
}

impl WalkRng {
    pub fn new(seed: u64) -> Self {
        Self::keyed(mix64(seed ^ 0x6a09_e667_f3bc_c908))
    }

    fn keyed(key: u64) -> Self {
        Self { state: key, counter: 0 }
    }

    fn key(&self) -> u64 {
        self.state.wrapping_sub(self.counter.wrapping_mul(GOLDEN_GAMMA))
    }

    /// Independent stream keyed by `id`; does not advance `self`.
    pub fn derive(&self, id: u64) -> Self {
        Self::keyed(mix64(self.key() ^ mix64(id.wrapping_add(GOLDEN_GAMMA))))
    }

    pub fn position(&self) -> u64 {
        self.counter
    }

    #[inline]
    pub fn next_word(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform integer in `0..n` by multiply-shift. `n` must be nonzero.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_word() as u128 * n as u128) >> 64) as usize
    }

    /// Uniform float in `[0, 1)`.
    #[inline]
    pub fn unit(&mut self) -> f64 {
        (self.next_word() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for WalkRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_word() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.next_word()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let word = self.next_word().to_le_bytes();
            chunk.copy_from_slice(&word[..chunk.len()]);
        }
    }
}
