//! Deterministic counter-based random streams.
//!
//! Every consumer derives its own stream from a `(seed, stream_id)` pair
//! through a 64-bit mix, so parallel workers draw from disjoint, reproducible
//! sequences regardless of scheduling order. Gaussian variates come from a
//! branch-free Box-Muller transform of two uniform draws.

use crate::torus::TorusPoint;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function: a strong 64-bit finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A SplitMix64 stream seeded from a `(seed, stream)` pair.
#[derive(Debug, Clone)]
pub struct CounterRng {
    state: u64,
}

impl CounterRng {
    /// Derive an independent stream: distinct `(seed, stream)` pairs give
    /// statistically unrelated sequences.
    pub fn from_stream(seed: u64, stream: u64) -> Self {
        let state = mix64(seed ^ mix64(stream.wrapping_mul(GOLDEN_GAMMA).wrapping_add(1)));
        Self { state }
    }

    /// Noise stream for path `index` of a Monte Carlo run.
    pub fn path_noise(seed: u64, index: u64) -> Self {
        Self::from_stream(seed, index << 1)
    }

    /// Initial-datum stream for path `index` (separate from the noise).
    pub fn path_init(seed: u64, index: u64) -> Self {
        Self::from_stream(seed, (index << 1) | 1)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `(0, 1]`, safe as a logarithm argument.
    #[inline]
    pub fn next_open_f64(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// A pair of independent standard Gaussians (Box-Muller).
    #[inline]
    pub fn next_gaussian_pair(&mut self) -> (f64, f64) {
        let u1 = self.next_open_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        (r * theta.cos(), r * theta.sin())
    }

    /// Uniform point on the torus.
    #[inline]
    pub fn next_point(&mut self) -> TorusPoint {
        TorusPoint::new(self.next_f64(), self.next_f64())
    }
}
