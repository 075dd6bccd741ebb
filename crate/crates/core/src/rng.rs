//! Deterministic random streams.
//!
//! Every random draw in a Monte-Carlo run comes from a stream keyed by
//! `(master_seed, phase, indices)`, so results do not depend on the order in
//! which trials are scheduled or on the number of worker threads.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Which part of a trial a stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Phase {
    Channel = 1,
    PilotNoise = 2,
    DataSymbols = 3,
    DataNoise = 4,
    Oracle = 5,
}

/// Stream for `(master_seed, phase, point, trial)`. `point` typically indexes an
/// SNR grid point or a symbol vector.
pub fn stream(master_seed: u64, phase: Phase, point: u64, trial: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&(phase as u64).to_le_bytes());
    seed[16..24].copy_from_slice(&point.to_le_bytes());
    seed[24..].copy_from_slice(&trial.to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}

/// One draw of `CN(0, 1)`: independent real and imaginary parts of variance 1/2.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}
