//! Portable pseudo-random stream shared by the synthesizer and K-means.
//!
//! Algorithm: xoshiro256** (Blackman and Vigna), state seeded from a 64-bit
//! seed by four consecutive SplitMix64 outputs (increment
//! `0x9E3779B97F4A7C15`, multipliers `0xBF58476D1CE4E5B9` and
//! `0x94D049BB133111EB`, shifts 30/27/31). Output scrambler: `rotl(s1 * 5, 7) * 9`.
//!
//! Derived draws, reproducible in any language with 64-bit integers and
//! IEEE-754 doubles:
//! - `next_f64`: `(next_u64 >> 11) * 2^-53`, uniform on `[0, 1)`.
//! - `below(n)`: `floor(next_f64 * n)`.
//! - `standard_normal`: Box-Muller cosine branch from two uniforms,
//!   `u1 = 1 - next_f64()`, `u2 = next_f64()`,
//!   `sqrt(-2 ln u1) * cos(2 pi u2)`; the sine branch is discarded.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

#[derive(Debug, Clone)]
pub struct PortableRng(Xoshiro256StarStar);

impl PortableRng {
    pub fn seed_from_u64(seed: u64) -> Self {
        PortableRng(Xoshiro256StarStar::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..n`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_f64() * n as f64) as usize).min(n - 1)
    }

    pub fn standard_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}
