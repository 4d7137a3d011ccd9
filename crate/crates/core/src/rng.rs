//! Seeded random stream with a fixed, documented construction so splits and
//! synthetic data are reproducible across implementations.
//!
//! * Generator: xoshiro256** (Blackman & Vigna), state seeded from a `u64`
//!   by four successive SplitMix64 outputs (increment `0x9E3779B97F4A7C15`,
//!   mixers `0xBF58476D1CE4E5B9`, `0x94D049BB133111EB`).
//! * Uniform `[0, 1)`: `(next_u64 >> 11) · 2⁻⁵³`.
//! * Normal: Box–Muller on two uniforms `u1, u2` with `r = sqrt(−2 ln(1 − u1))`;
//!   the cosine branch is returned first and the sine branch cached for the
//!   next call.
//! * Shuffle: Fisher–Yates from the back, `j = next_u64 mod (i + 1)`.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: Xoshiro256StarStar,
    spare_normal: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Uniform index in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
