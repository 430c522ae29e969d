//! Seeding scheme for every random draw in the crate.
//!
//! All randomness comes from ChaCha8, a counter-based generator. A run seed
//! (`u64`) is expanded into the 256-bit key with SplitMix64, and independent
//! consumers are separated by the 64-bit ChaCha stream id. Stream ids are
//! built with [`stream_id`] from a domain tag and an index (trajectory, shot
//! block, ...), so results never depend on thread scheduling.

use rand::{Rng, SeedableRng};
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;

/// Domain tags used in the high byte of a stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Domain {
    Sampling = 1,
    Trajectory = 2,
    FrozenNoise = 3,
    Experiment = 4,
}

/// Stream id for `(domain, index)`. Indices use the low 56 bits.
pub fn stream_id(domain: Domain, index: u64) -> u64 {
    ((domain as u64) << 56) | (index & 0x00ff_ffff_ffff_ffff)
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for `seed` positioned at the start of `stream`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = seed;
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Standard normal deviate (Box-Muller, one value per call).
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen();
        if u1 > f64::MIN_POSITIVE {
            return (-2.0 * u1.ln()).sqrt() * (core::f64::consts::TAU * u2).cos();
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::prelude::*;
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream_rng(7, stream_id(Domain::Trajectory, 3)).gen();
        let b: u64 = stream_rng(7, stream_id(Domain::Trajectory, 3)).gen();
        let c: u64 = stream_rng(7, stream_id(Domain::Trajectory, 4)).gen();
        let d: u64 = stream_rng(8, stream_id(Domain::Trajectory, 3)).gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn normal_moments() {
        let mut rng = stream_rng(1, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01);
        assert!((var - 1.0).abs() < 0.02);
    }
}
