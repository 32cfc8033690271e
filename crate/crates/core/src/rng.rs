//! Seeded, portable randomness.
//!
//! All stochastic code in this crate draws from ChaCha12 streams created
//! here. Child seeds (per grid point, per trial, per run) are derived from a
//! base seed with a splitmix64 chain, so results are reproducible across
//! platforms and independent of thread scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Weyl increment of splitmix64.
const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// One splitmix64 output, advancing `state`.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `base` and an ordered list of labels
/// (grid-point index, trial index, stage tag, ...).
pub fn derive_seed(base: u64, labels: &[u64]) -> u64 {
    let mut state = base;
    let mut out = splitmix64(&mut state);
    for &label in labels {
        state ^= label.wrapping_mul(GAMMA | 1);
        out ^= splitmix64(&mut state).rotate_left(17);
    }
    out
}

/// The crate-wide generator: ChaCha12 keyed by a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derive_seed_is_stable() {
        // Frozen values: the mixing function is part of the CSV determinism
        // contract and must not drift between releases.
        assert_eq!(derive_seed(0, &[]), 16294208416658607535);
        assert_eq!(derive_seed(42, &[1, 2]), derive_seed(42, &[1, 2]));
        assert_ne!(derive_seed(42, &[1, 2]), derive_seed(42, &[2, 1]));
        assert_ne!(derive_seed(42, &[1]), derive_seed(43, &[1]));
    }

    #[test]
    fn rng_streams_reproduce() {
        let mut a = rng_from_seed(7);
        let mut b = rng_from_seed(7);
        let xa: Vec<f64> = (0..8).map(|_| a.gen::<f64>()).collect();
        let xb: Vec<f64> = (0..8).map(|_| b.gen::<f64>()).collect();
        assert_eq!(xa, xb);
    }
}
