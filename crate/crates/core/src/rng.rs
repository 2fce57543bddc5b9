//! Counter-based deterministic randomness.
//!
//! Clique sampling draws one uniform variate per candidate pair. Keying the
//! draw on `(seed, i, j)` instead of consuming a sequential stream makes the
//! result independent of enumeration order, so partitioned or reordered
//! traversals reproduce the same graph bit-for-bit.

/// SplitMix64 finalizer: a single avalanche step over a 64-bit word.
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a tag (e.g. an iteration index) into a seed, producing a new seed.
#[inline]
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ tag)
}

/// Hash `(seed, a, b)` into one well-mixed word.
#[inline]
pub fn hash3(seed: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b)
}

/// Map hash bits onto the unit interval `[0, 1)` with 53-bit resolution.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw in `[0, 1)` for the unordered pair `{i, j}`.
#[inline]
pub fn pair_uniform(seed: u64, i: u32, j: u32) -> f64 {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    unit_f64(hash3(seed, lo as u64, hi as u64))
}

/// Small sequential generator for places that want a stream (phantom lesion
/// placement). SplitMix64 in counter mode.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        unit_f64(self.next_u64())
    }

    /// Uniform in `[lo, hi)`.
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_uniform_is_order_independent() {
        for k in 0..50u32 {
            let u = pair_uniform(7, k, k + 13);
            let v = pair_uniform(7, k + 13, k);
            assert_eq!(u, v);
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn derive_seed_separates_tags() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }

    #[test]
    fn stream_is_reproducible() {
        let mut a = SplitMix64::new(99);
        let mut b = SplitMix64::new(99);
        for _ in 0..20 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }
}
