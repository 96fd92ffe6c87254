//! Deterministic, splittable random streams.
//!
//! Every stochastic quantity is drawn from a ChaCha stream keyed by
//! `(seed, realization index, entity tag)`. Realizations can therefore be
//! generated in any order or in parallel without changing the results, and
//! re-running with the same seed reproduces every draw bit-for-bit.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

/// Entity tags separating the independent streams of one scenario.
pub mod tag {
    pub const ANGLES: u64 = 1;
    pub const USER_POSITIONS: u64 = 2;
    pub const CHANNEL_H: u64 = 3;
    pub const CHANNEL_G: u64 = 4;
    pub const PHASE_NOISE: u64 = 5;
    pub const RF_PHASE: u64 = 6;
    pub const SYMBOLS: u64 = 7;
    pub const GA: u64 = 8;
    pub const PHASE_INIT: u64 = 9;
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Open a deterministic stream for one `(seed, realization, tag)` triple.
pub fn stream(seed: u64, realization: u64, tag: u64) -> ChaCha12Rng {
    let w0 = mix(seed ^ 0x243F_6A88_85A3_08D3);
    let w1 = mix(realization ^ 0x1319_8A2E_0370_7344);
    let w2 = mix(tag ^ 0xA409_3822_299F_31D0);
    let w3 = mix(w0 ^ w1.rotate_left(17) ^ w2.rotate_left(34));
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&w0.to_le_bytes());
    key[8..16].copy_from_slice(&w1.to_le_bytes());
    key[16..24].copy_from_slice(&w2.to_le_bytes());
    key[24..32].copy_from_slice(&w3.to_le_bytes());
    ChaCha12Rng::from_seed(key)
}

/// One draw of a circularly symmetric complex Gaussian with unit variance:
/// two independent real normals scaled by 1/sqrt(2).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Numerically robust sum: pairwise tree reduction, deterministic for a
/// fixed input order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
