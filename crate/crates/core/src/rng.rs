//! Counter-based random streams.
//!
//! Every draw is addressed by a key: `(seed, stream, slot)`. The ChaCha key
//! comes from `seed`, the ChaCha stream id from `stream`, and the word
//! position from `slot`, so any single draw can be reproduced without
//! replaying the ones before it. Sequential reads and random access produce
//! the same values.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 32-bit words reserved per slot. Two `u64` draws fit in one slot.
const WORDS_PER_SLOT: u128 = 4;

#[derive(Clone, Debug)]
pub struct CounterStream {
    rng: ChaCha8Rng,
    slot: u64,
}

impl CounterStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        CounterStream { rng, slot: 0 }
    }

    /// Positions the stream at the first word of `slot`.
    pub fn seek(&mut self, slot: u64) {
        self.rng.set_word_pos(slot as u128 * WORDS_PER_SLOT);
        self.slot = slot;
    }

    /// Uniform draw in `[0, 1)` from the current slot, then advances to the
    /// next slot.
    pub fn next_unit(&mut self) -> f64 {
        let (a, _) = self.next_pair();
        unit(a)
    }

    /// Both `u64` words of the current slot, then advances to the next slot.
    pub fn next_pair(&mut self) -> (u64, u64) {
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        self.slot += 1;
        (a, b)
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }
}

/// One uniform draw for a fully specified key.
pub fn unit_at(seed: u64, stream: u64, slot: u64) -> f64 {
    let mut s = CounterStream::new(seed, stream);
    s.seek(slot);
    s.next_unit()
}

fn unit(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Mixes several integers into one stream id (splitmix64 finalizer chain).
pub fn mix(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        h ^= p;
        h = h.wrapping_add(0x9E37_79B9_7F4A_7C15);
        h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h ^= h >> 31;
    }
    h
}
