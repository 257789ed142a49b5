//! Counter-based random streams.
//!
//! Every variate is addressed by `(seed, stream, index)`. A draw at index `i`
//! reads the fixed block of `WORDS_PER_DRAW` 64-bit words starting at ChaCha
//! word position `i * WORDS_PER_DRAW`, whatever the draw actually needs, so
//! any partition of `0..n` into chunks reproduces the serial sequence.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

/// 64-bit words reserved for every draw.
pub const WORDS_PER_DRAW: usize = 4;

/// Draws generated per parallel work item.
pub const CHUNK: usize = 4096;

/// Identifies an independent stream under a seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId(pub u64);

impl StreamId {
    /// Proposal draws `x`.
    pub const PROPOSAL: StreamId = StreamId(0);
    /// Noise draws `z`.
    pub const NOISE: StreamId = StreamId(1);
    /// Resampling uniforms.
    pub const RESAMPLE: StreamId = StreamId(2);
}

/// The words handed to a single draw.
#[derive(Debug, Clone, Copy)]
pub struct DrawWords([u64; WORDS_PER_DRAW]);

impl DrawWords {
    /// Uniform on `[0, 1)` built from word `k`, 53 bits of resolution.
    #[inline]
    pub fn uniform(&self, k: usize) -> f64 {
        (self.0[k] >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(0, 1]` built from word `k`.
    #[inline]
    pub fn uniform_open0(&self, k: usize) -> f64 {
        1.0 - self.uniform(k)
    }

    /// Standard normal variate from words `k` and `k + 1` (Box-Muller, cosine branch).
    #[inline]
    pub fn standard_normal(&self, k: usize) -> f64 {
        let r = (-2.0 * self.uniform_open0(k).ln()).sqrt();
        let theta = std::f64::consts::TAU * self.uniform(k + 1);
        r * theta.cos()
    }
}

/// A keyed, seekable stream of [`DrawWords`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterStream {
    seed: u64,
    stream: StreamId,
}

impl CounterStream {
    pub fn new(seed: u64, stream: StreamId) -> Self {
        Self { seed, stream }
    }

    fn rng_at(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream.0);
        // Word positions count 32-bit words.
        rng.set_word_pos(index as u128 * (2 * WORDS_PER_DRAW) as u128);
        rng
    }

    /// Words for the draw at `index`.
    pub fn words(&self, index: u64) -> DrawWords {
        let mut rng = self.rng_at(index);
        next_words(&mut rng)
    }

    /// Iterator over the words of draws `start, start + 1, ...`.
    pub fn iter_from(&self, start: u64) -> WordsIter {
        WordsIter {
            rng: self.rng_at(start),
        }
    }

    /// Fills `out[i]` with `draw(words(start + i))`, sequentially.
    pub fn fill_serial<T, F>(&self, start: u64, out: &mut [T], draw: F)
    where
        F: Fn(&DrawWords) -> T,
    {
        let mut rng = self.rng_at(start);
        for slot in out.iter_mut() {
            *slot = draw(&next_words(&mut rng));
        }
    }

    /// Generates `n` draws starting at index 0, chunked across the current
    /// rayon pool. The output does not depend on the number of workers.
    pub fn generate<T, F>(&self, n: usize, draw: F) -> Vec<T>
    where
        T: Send + Default + Clone,
        F: Fn(&DrawWords) -> T + Sync,
    {
        let mut out = vec![T::default(); n];
        out.par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(c, chunk)| {
                self.fill_serial((c * CHUNK) as u64, chunk, &draw);
            });
        out
    }
}

/// Sequential reader returned by [`CounterStream::iter_from`].
pub struct WordsIter {
    rng: ChaCha8Rng,
}

impl Iterator for WordsIter {
    type Item = DrawWords;

    #[inline]
    fn next(&mut self) -> Option<DrawWords> {
        Some(next_words(&mut self.rng))
    }
}

#[inline]
fn next_words(rng: &mut ChaCha8Rng) -> DrawWords {
    let mut w = [0u64; WORDS_PER_DRAW];
    for slot in &mut w {
        *slot = rng.next_u64();
    }
    DrawWords(w)
}
