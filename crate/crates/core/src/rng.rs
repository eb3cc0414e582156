//! Seeded random streams.
//!
//! Every random draw in the crate goes through [`SeededStream`], a ChaCha20
//! keystream (a counter-based generator: block `i` of stream `s` under key `k`
//! is a pure function of `(k, s, i)`). The 256-bit key is the little-endian
//! seed in bytes 0..8 followed by zeros, and each consumer uses its own stream
//! id, so the sequences can be regenerated by any ChaCha20 implementation.
//!
//! Derived variates use fixed transforms:
//! * uniform `[0,1)`: top 53 bits of a `u64` times 2^-53,
//! * bounded integers: Lemire's multiply-and-reject,
//! * standard normal: Box–Muller (cosine branch first, sine branch cached).

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream ids used by the crate. Distinct consumers of one seed never share a stream.
pub mod streams {
    pub const GRAPH: u64 = 1;
    pub const GAUSSIAN_NOISE: u64 = 2;
    pub const FLIP_ROWS: u64 = 3;
    pub const FLIP_TIES: u64 = 4;
    pub const ROTATION: u64 = 5;
    pub const SUITE: u64 = 6;
}

pub struct SeededStream {
    inner: ChaCha20Rng,
    spare_normal: Option<f64>,
}

impl SeededStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut inner = ChaCha20Rng::from_seed(key);
        inner.set_stream(stream);
        Self {
            inner,
            spare_normal: None,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[-1, 1)`.
    #[inline]
    pub fn symmetric(&mut self) -> f64 {
        2.0 * self.uniform() - 1.0
    }

    /// Uniform on `[lo, hi)`.
    #[inline]
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // 1 - u lies in (0, 1], so the log is finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Moves a uniform random `k`-subset of `items` (without replacement) to the
    /// front, in draw order (partial Fisher–Yates).
    pub fn choose_prefix<T>(&mut self, items: &mut [T], k: usize) {
        let n = items.len();
        for i in 0..k.min(n) {
            let j = i + self.below((n - i) as u64) as usize;
            items.swap(i, j);
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        let n = items.len();
        self.choose_prefix(items, n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = SeededStream::new(42, 3);
        let mut b = SeededStream::new(42, 3);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn streams_differ() {
        let mut a = SeededStream::new(42, 1);
        let mut b = SeededStream::new(42, 2);
        let xs: Vec<u64> = (0..4).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..4).map(|_| b.next_u64()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn uniform_in_range_and_mean() {
        let mut s = SeededStream::new(7, 0);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let u = s.uniform();
            assert!((0.0..1.0).contains(&u));
            sum += u;
        }
        assert!((sum / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn below_is_bounded_and_covers() {
        let mut s = SeededStream::new(1, 0);
        let mut seen = [false; 7];
        for _ in 0..1000 {
            let v = s.below(7) as usize;
            seen[v] = true;
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn normal_moments() {
        let mut s = SeededStream::new(99, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| s.standard_normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn choose_prefix_is_a_permutation() {
        let mut s = SeededStream::new(5, 0);
        let mut v: Vec<usize> = (0..20).collect();
        s.choose_prefix(&mut v, 8);
        let mut sorted = v.clone();
        sorted.sort();
        assert_eq!(sorted, (0..20).collect::<Vec<_>>());
    }
}
