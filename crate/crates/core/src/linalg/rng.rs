//! Seeded, splittable random streams.
//!
//! A stream is addressed by `(seed, stream_id)` and backed by ChaCha20, whose
//! 64-bit stream selector and block counter make it a counter-based generator:
//! output depends only on the key, the stream id, and how many words have been
//! consumed. Children are derived by hashing the parent's id with a split
//! counter, so splitting never advances the parent's own output.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    splits: u64,
    inner: ChaCha20Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            splits: 0,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn position(&self) -> u128 {
        self.inner.get_word_pos()
    }

    /// Fresh child stream. Each call yields a different child; the parent's
    /// sample sequence is not affected.
    pub fn split(&mut self) -> RngStream {
        self.splits += 1;
        let id = splitmix64(self.stream_id ^ splitmix64(self.splits));
        RngStream::with_stream(self.seed, id)
    }

    /// Named child stream, stable regardless of how many splits happened.
    pub fn substream(&self, tag: &str) -> RngStream {
        let mut h = self.stream_id;
        for b in tag.bytes() {
            h = splitmix64(h ^ u64::from(b));
        }
        RngStream::with_stream(self.seed, splitmix64(h ^ 0xA5A5_A5A5_A5A5_A5A5))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform index in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
