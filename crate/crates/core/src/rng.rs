//! Seeded random streams with pinned sampling algorithms.
//!
//! Every stochastic component of the solver draws from a ChaCha20 stream
//! derived here. The samplers are written out by hand (rejection sampling for
//! bounded integers, the Marsaglia polar method for Gaussians) so that a
//! given seed reproduces the same trace across builds; only the ChaCha20
//! block function and IEEE-754 arithmetic are relied on.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

/// One round of the splitmix64 output function.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a list of stream labels into a single 64-bit seed.
pub fn stream_seed(parts: &[u64]) -> u64 {
    let mut state = 0x243f_6a88_85a3_08d3; // pi digits, fixed domain tag
    let mut out = 0;
    for &p in parts {
        state ^= p;
        out = splitmix64(&mut state);
    }
    out
}

/// The RNG stream owned by one leaf for one root outer round.
///
/// Deriving the stream from (run seed, leaf id, outer round) makes leaf
/// execution order irrelevant: a leaf invoked several times within one root
/// round continues its own stream, and siblings never share state.
pub fn leaf_stream(seed: u64, leaf_id: u64, round: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(stream_seed(&[seed, leaf_id, round]))
}

/// Uniform draw from `0..n` by rejection sampling on raw 64-bit words.
pub fn uniform_index(rng: &mut impl RngCore, n: usize) -> usize {
    assert!(n > 0, "uniform_index requires a nonempty range");
    let n = n as u64;
    let zone = u64::MAX - (u64::MAX % n);
    loop {
        let x = rng.next_u64();
        if x < zone {
            return (x % n) as usize;
        }
    }
}

/// Maps a raw word to [0, 1) using the top 53 bits.
fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal sampler (Marsaglia polar method, spare cached).
#[derive(Debug, Default)]
pub struct NormalSampler {
    spare: Option<f64>,
}

impl NormalSampler {
    pub fn new() -> Self {
        Self { spare: None }
    }

    pub fn sample(&mut self, rng: &mut impl RngCore) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * unit_f64(rng.next_u64()) - 1.0;
            let v = 2.0 * unit_f64(rng.next_u64()) - 1.0;
            let s = u * u + v * v;
            if s >= 1.0 || s == 0.0 {
                continue;
            }
            let f = (-2.0 * s.ln() / s).sqrt();
            self.spare = Some(v * f);
            return u * f;
        }
    }
}
