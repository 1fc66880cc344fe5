//! Deterministic random numbers.
//!
//! Every stream is ChaCha8 keyed from a 64-bit seed through
//! `ChaCha8Rng::seed_from_u64`. ChaCha is a counter-mode generator, so the
//! stream for a given seed is fixed and platform independent. Sub-streams
//! (per image, per training step, ...) are keyed by mixing the parent seed
//! with a label and an index through SplitMix64, which keeps parallel work
//! reproducible regardless of scheduling order.

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream labels used across the crate. Keeping them in one place avoids
/// accidental reuse of the same sub-stream for two purposes.
pub mod label {
    pub const REFERENCE_INIT: u64 = 1;
    pub const SOLVER_INIT: u64 = 2;
    pub const BATCH_ORDER: u64 = 3;
    pub const TRAIN_INIT: u64 = 4;
    pub const VALIDATION_INIT: u64 = 5;
    pub const RANDOM_REFERENCE: u64 = 6;
    pub const BINARY_REFERENCE: u64 = 7;
    pub const SIMPLE_REFERENCE: u64 = 8;
    pub const GRADCHECK: u64 = 9;
}

#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the sub-stream `(label, index)` below `seed`.
pub fn derive_seed(seed: u64, label: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ label) ^ index)
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn derived(seed: u64, label: u64, index: u64) -> Self {
        Rng::new(derive_seed(seed, label, index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of 32-bit words consumed so far.
    pub fn counter(&self) -> u128 {
        self.inner.get_word_pos()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Poisson sample by Knuth's multiplication method. Intended for small
    /// rates (λ ≤ 10); the expected number of uniforms drawn is λ + 1.
    pub fn poisson(&mut self, lambda: f64) -> u32 {
        let limit = (-lambda).exp();
        let mut k = 0u32;
        let mut p = 1.0;
        loop {
            p *= self.uniform();
            if p <= limit {
                return k;
            }
            k += 1;
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
