//! Deterministic counter-based random number generation.
//!
//! The generator is SplitMix64 (Steele, Lea & Flood, 2014): the state is a
//! 64-bit counter advanced by the golden-ratio increment, and each output is
//! the finalizer hash of the counter. Being a pure function of
//! `seed + i * GOLDEN`, it is trivially seekable and two streams with
//! different seeds never share state.
//!
//! Streams for cells/replicates are derived with [`derive_stream`], so every
//! replicate's randomness is a pure function of `(master_seed, labels...)`
//! and independent of scheduling or thread count.
//!
//! Gaussian variates use Box–Muller on 53-bit uniforms; both uniforms are
//! consumed per normal variate and only the cosine branch is kept, so the
//! draw sequence is stateless and portable.

/// Golden-ratio increment of SplitMix64.
const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer: a bijective avalanche hash on 64 bits.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent stream seed from a master seed and a label path,
/// e.g. `derive_stream(master, &[cell, replicate])`. Each label is folded
/// through the finalizer, so distinct paths give unrelated streams.
pub fn derive_stream(master: u64, labels: &[u64]) -> u64 {
    let mut h = mix64(master ^ GOLDEN);
    for &l in labels {
        h = mix64(h.wrapping_add(GOLDEN).wrapping_add(l));
    }
    h
}

/// SplitMix64 generator state.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Next 64 uniform bits.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform on the open interval (0, 1): the top 53 bits offset by 1/2,
    /// scaled by 2^-53. Never returns 0 or 1, so logs are always finite.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
    }

    /// Standard normal variate via Box–Muller (cosine branch).
    #[inline]
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform integer in `0..n` by scaling the 53-bit uniform. `n` must be
    /// far below 2^53, which holds for every index-sized use in this crate.
    #[inline]
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let i = (self.next_f64() * n as f64) as usize;
        i.min(n - 1)
    }

    /// Random sign, +1.0 or -1.0 with equal probability.
    #[inline]
    pub fn next_sign(&mut self) -> f64 {
        if self.next_u64() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Draw a uniformly random size-`k` subset of `0..p`, returned sorted.
    ///
    /// Partial Fisher–Yates over an index array: positions `0..k` are
    /// exchanged with uniformly chosen tails, making every ordered k-tuple
    /// (hence every subset) equally likely.
    pub fn subset(&mut self, p: usize, k: usize) -> Vec<usize> {
        debug_assert!(k <= p);
        let mut idx: Vec<usize> = (0..p).collect();
        for i in 0..k {
            let j = i + self.next_index(p - i);
            idx.swap(i, j);
        }
        let mut out = idx[..k].to_vec();
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_streams() {
        let mut a = SplitMix64::new(derive_stream(7, &[1, 2]));
        let mut b = SplitMix64::new(derive_stream(7, &[1, 2]));
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut c = SplitMix64::new(derive_stream(7, &[2, 1]));
        assert_ne!(a.next_u64(), c.next_u64());
    }

    #[test]
    fn uniform_open_interval() {
        let mut g = SplitMix64::new(3);
        for _ in 0..10_000 {
            let u = g.next_f64();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn gaussian_moments() {
        let mut g = SplitMix64::new(42);
        let n = 200_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let z = g.next_gaussian();
            s += z;
            s2 += z * z;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn subsets_are_sorted_and_in_range() {
        let mut g = SplitMix64::new(11);
        for _ in 0..100 {
            let s = g.subset(9, 4);
            assert_eq!(s.len(), 4);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert!(s.iter().all(|&i| i < 9));
        }
    }
}
