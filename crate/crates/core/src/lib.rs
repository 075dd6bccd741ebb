//! Uplink data detection for massive MIMO receivers with 1-bit ADCs.
//!
//! The crate covers the whole link: one-ring spatial covariances and
//! correlated Rayleigh sampling ([`channel`]), Zadoff-Chu pilots
//! ([`pilots`]), 1-bit quantized pilot and data observations ([`airlink`]),
//! the Bussgang LMMSE channel estimator ([`blmmse`]), the closed-form
//! expectation of MRC soft-estimated symbols ([`expectation`]), three
//! minimum-distance detectors built on it ([`detectors`]) and a seeded
//! Monte-Carlo harness ([`harness`]).
//!
//! Complex matrices are [`nalgebra::DMatrix`] of [`Complex64`]. The SNR `rho`
//! is linear everywhere in the library; dB only appears at the CLI boundary.

pub mod airlink;
pub mod blmmse;
pub mod channel;
pub mod constellation;
pub mod detectors;
mod error;
pub mod expectation;
pub mod harness;
pub mod linalg;
pub mod oracle;
pub mod pilots;
pub mod rng;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// `rho*K + 1`, the power of every quantizer output.
#[inline]
pub fn output_power(rho: f64, users: usize) -> f64 {
    rho * users as f64 + 1.0
}

/// Converts an SNR in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_helpers() {
        assert_eq!(output_power(1.0, 2), 3.0);
        assert_eq!(db_to_linear(0.0), 1.0);
        assert!((db_to_linear(30.0) - 1000.0).abs() < 1e-9);
        assert!((db_to_linear(-10.0) - 0.1).abs() < 1e-15);
    }
}
