//! Seeded pseudo-random numbers via SplitMix64.
//!
//! Every random choice in this crate (weight init, shuffling, row
//! selection, synthetic data) flows through this generator so that a
//! fixed seed reproduces bit-identical results on any platform. The
//! algorithm is the public SplitMix64 mixer (Steele, Lea & Flood's
//! `splitmix64`), chosen over an external RNG crate because its output
//! sequence is pinned by ~10 lines of code and cannot drift across
//! dependency upgrades.

/// SplitMix64 generator. `new(seed)` with the same seed always yields
/// the same sequence.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Derive an independent stream seed from `(seed, tag)`.
    ///
    /// Used to give each consumer (epoch shuffles, pollution draws, ...)
    /// its own stream without correlated prefixes.
    pub fn derive(seed: u64, tag: u64) -> u64 {
        let mut rng = Self::new(seed ^ tag.wrapping_mul(0xA24B_AED4_963E_E407));
        rng.next_u64()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` on the 53-bit grid (multiples of 2^-53).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `[0, n)`, unbiased via rejection.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0) is undefined");
        let n64 = n as u64;
        // Largest multiple of n that fits in u64; values past it would bias the modulus.
        let limit = u64::MAX - u64::MAX % n64;
        loop {
            let v = self.next_u64();
            if v < limit {
                return (v % n64) as usize;
            }
        }
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }

    /// `k` distinct indices drawn uniformly from `[0, n)`, returned sorted.
    ///
    /// Partial Fisher-Yates over the index vector; the sorted order makes
    /// downstream row extraction independent of draw order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot sample {k} of {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool.sort_unstable();
        pool
    }

    /// Standard normal deviate (Box-Muller, cosine branch only).
    pub fn standard_normal(&mut self) -> f64 {
        // u ∈ (0,1] so the log is finite.
        let u = 1.0 - self.next_f64();
        let v = self.next_f64();
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    }
}
