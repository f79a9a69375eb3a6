//! Deterministic chunked sample streams for parallel Monte Carlo.
//!
//! Draw `k` of chunk `c` is a function of `(seed, c, k)` alone: every chunk
//! owns an independent counter-based RNG stream, chunks are mapped (possibly
//! in parallel) and merged in index order, so results are identical for any
//! worker count and bit-identical across re-runs with the same seed and
//! chunk size.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Default number of draws per chunk.
pub const DEFAULT_CHUNK_SIZE: usize = 8192;

/// Addresses a family of reproducible random substreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleStream {
    seed: u64,
    chunk_size: usize,
}

impl SampleStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }

    pub fn with_chunk_size(seed: u64, chunk_size: usize) -> Self {
        assert!(chunk_size > 0, "chunk size must be positive");
        Self { seed, chunk_size }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn chunk_size(&self) -> usize {
        self.chunk_size
    }

    /// The RNG owning chunk `chunk` of this stream.
    pub fn chunk_rng(&self, chunk: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(chunk);
        rng
    }

    /// A statistically independent stream for a distinct purpose. Estimators
    /// that must share draws (common random numbers) reuse the same stream;
    /// unrelated estimates derive their own tag.
    pub fn derive(&self, tag: u64) -> Self {
        Self {
            seed: splitmix64(self.seed ^ splitmix64(tag)),
            chunk_size: self.chunk_size,
        }
    }
}

fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn chunk_counts(total: usize, chunk_size: usize) -> Vec<(u64, usize)> {
    let mut out = Vec::with_capacity(total.div_ceil(chunk_size));
    let mut remaining = total;
    let mut index = 0u64;
    while remaining > 0 {
        let count = remaining.min(chunk_size);
        out.push((index, count));
        remaining -= count;
        index += 1;
    }
    out
}

/// Maps every chunk of a `total`-draw run through `f(chunk_index, count, rng)`
/// and returns the per-chunk results in chunk order. Runs on the rayon pool
/// when the `parallel` feature is enabled.
pub fn map_chunks<T, F>(stream: &SampleStream, total: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, usize, &mut ChaCha8Rng) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    {
        chunk_counts(total, stream.chunk_size)
            .into_par_iter()
            .map(|(index, count)| {
                let mut rng = stream.chunk_rng(index);
                f(index, count, &mut rng)
            })
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_chunks_sequential(stream, total, f)
    }
}

/// Sequential fallback with the identical chunk layout; produces bit-identical
/// results to [`map_chunks`].
pub fn map_chunks_sequential<T, F>(stream: &SampleStream, total: usize, f: F) -> Vec<T>
where
    F: Fn(u64, usize, &mut ChaCha8Rng) -> T,
{
    chunk_counts(total, stream.chunk_size)
        .into_iter()
        .map(|(index, count)| {
            let mut rng = stream.chunk_rng(index);
            f(index, count, &mut rng)
        })
        .collect()
}

/// Welford accumulator for mean and standard error; chunk partials combine in
/// index order with Chan's formula, keeping the merged result independent of
/// the worker count.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: Welford) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other;
            return;
        }
        let total = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / total as f64;
        self.m2 += other.m2
            + delta * delta * (self.count as f64 * other.count as f64) / total as f64;
        self.count = total;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample standard deviation (Bessel-corrected).
    pub fn sample_std(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        (self.m2 / (self.count as f64 - 1.0)).max(0.0).sqrt()
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        self.sample_std() / (self.count as f64).sqrt()
    }
}

/// Per-coordinate Welford accumulation for vector-valued samples.
#[derive(Debug, Clone)]
pub(crate) struct VecWelford {
    coords: Vec<Welford>,
}

impl VecWelford {
    pub fn new(dim: usize) -> Self {
        Self {
            coords: vec![Welford::default(); dim],
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        for (w, &v) in self.coords.iter_mut().zip(x) {
            w.push(v);
        }
    }

    pub fn merge(&mut self, other: VecWelford) {
        for (a, b) in self.coords.iter_mut().zip(other.coords) {
            a.merge(b);
        }
    }

    pub fn means(&self) -> Vec<f64> {
        self.coords.iter().map(Welford::mean).collect()
    }

    pub fn stderrs(&self) -> Vec<f64> {
        self.coords.iter().map(Welford::stderr).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn chunk_layout_covers_total() {
        let counts = chunk_counts(10_001, 4096);
        assert_eq!(counts.len(), 3);
        assert_eq!(counts.iter().map(|&(_, c)| c).sum::<usize>(), 10_001);
        assert_eq!(counts[2], (2, 1809));
    }

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let stream = SampleStream::with_chunk_size(7, 100);
        let f = |_, count: usize, rng: &mut ChaCha8Rng| {
            (0..count).map(|_| rng.gen::<f64>()).sum::<f64>()
        };
        let a = map_chunks(&stream, 1000, f);
        let b = map_chunks_sequential(&stream, 1000, f);
        assert_eq!(a, b);
    }

    #[test]
    fn derived_streams_differ() {
        let s = SampleStream::new(1);
        assert_ne!(s.derive(1).seed(), s.derive(2).seed());
        assert_eq!(s.derive(3).seed(), s.derive(3).seed());
    }

    #[test]
    fn welford_matches_two_pass() {
        let data: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.25).collect();
        let mut w = Welford::default();
        for &x in &data {
            w.push(x);
        }
        let mean = data.iter().sum::<f64>() / data.len() as f64;
        let var =
            data.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (data.len() - 1) as f64;
        assert!((w.mean() - mean).abs() < 1e-12);
        assert!((w.sample_std() - var.sqrt()).abs() < 1e-12);

        // merging two halves agrees with one pass
        let mut left = Welford::default();
        let mut right = Welford::default();
        for &x in &data[..400] {
            left.push(x);
        }
        for &x in &data[400..] {
            right.push(x);
        }
        left.merge(right);
        assert!((left.mean() - mean).abs() < 1e-12);
        assert!((left.sample_std() - var.sqrt()).abs() < 1e-12);
    }
}
