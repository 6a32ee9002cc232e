//! Portable deterministic primitives: a seeded 64-bit generator and a stable
//! string hash.
//!
//! Everything that must reproduce bit-for-bit across platforms and across
//! reimplementations (few-shot sampling, weight initialization, the hash
//! embedder, mock log-probabilities) is built on these two functions, so the
//! exact algorithms are spelled out here.
//!
//! The generator is SplitMix64 (Steele, Lea & Flood; the same generator that
//! backs `java.util.SplittableRandom`). The hash is FNV-1a with the standard
//! 64-bit offset basis and prime.

/// SplitMix64 generator.
///
/// `next_u64` advances the state by the golden-gamma constant and applies the
/// standard finalizer:
///
/// ```text
/// state += 0x9E3779B97F4A7C15
/// z = state
/// z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
/// z = (z ^ (z >> 27)) * 0x94D049BB133111EB
/// return z ^ (z >> 31)
/// ```
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Derive an independent stream for `(seed, label)`, e.g. one stream per
    /// intent. The stream seed is `seed XOR fnv1a64(label)`.
    pub fn for_label(seed: u64, label: &str) -> Self {
        Self::new(seed ^ fnv1a64(label.as_bytes()))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`: the top 53 bits of `next_u64` scaled by 2^-53.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[0, n)` via the multiply-shift map
    /// `(next_u64() * n) >> 64` computed in 128 bits.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "next_below requires n > 0");
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Uniform in `[-bound, bound)`: `bound * (2u - 1)` with `u = next_f64()`.
    pub fn next_symmetric(&mut self, bound: f64) -> f64 {
        bound * (2.0 * self.next_f64() - 1.0)
    }
}

/// FNV-1a, 64-bit: offset basis `0xcbf29ce484222325`, prime `0x100000001b3`.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// FNV-1a over `prompt`, a `0x1F` separator byte, then `token`.
pub fn fnv1a64_pair(prompt: &str, token: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in prompt.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h ^= 0x1F;
    h = h.wrapping_mul(0x0000_0100_0000_01B3);
    for &b in token.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Map a hash to `[0, 1)` the same way `next_f64` does.
pub fn unit_f64(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Partial Fisher-Yates: returns the first `k` elements of a seeded shuffle
/// of `0..n`. For `i` in `0..k`, swap index `i` with `i + next_below(n - i)`.
pub fn sample_indices(rng: &mut SplitMix64, n: usize, k: usize) -> Vec<usize> {
    let k = k.min(n);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + rng.next_below((n - i) as u64) as usize;
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx
}
