//! Monte-Carlo estimates of the quantities that the closed forms predict.
//!
//! Everything here simulates the link end to end (channel draw, pilot and
//! data transmissions, 1-bit quantization) and averages. Trials are grouped
//! in fixed-size chunks whose partial sums are reduced in chunk order, so
//! results are bit-identical for any thread count.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::airlink::{mrc_soft_symbols, uplink_data_block, uplink_pilot_block};
use crate::blmmse::EstimatorState;
use crate::channel::{sample_channels, CovarianceSet};
use crate::pilots::PilotMatrix;
use crate::rng::{stream, Phase};
use crate::Result;

const CHUNK: u64 = 2048;

/// Sums `per_trial` over `0..trials` with a deterministic reduction order.
fn chunked_sum<T, F>(trials: u64, zero: impl Fn() -> T + Sync, per_trial: F) -> Result<T>
where
    T: Send + std::ops::AddAssign,
    F: Fn(u64, &mut T) -> Result<()> + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    let partials: Vec<T> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = zero();
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                per_trial(t, &mut acc)?;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = zero();
    for p in partials {
        total += p;
    }
    Ok(total)
}

/// Empirical `E[r_p r_p^H]` over `trials` channel and noise draws.
pub fn empirical_crp(
    cov: &CovarianceSet,
    pilots: &PilotMatrix,
    rho: f64,
    trials: u64,
    seed: u64,
) -> Result<DMatrix<Complex64>> {
    let n = cov.antennas() * pilots.tau();
    let sum = chunked_sum(
        trials,
        || DMatrix::<Complex64>::zeros(n, n),
        |t, acc| {
            let h = sample_channels(cov, &mut stream(seed, Phase::Channel, 0, t));
            let blk = uplink_pilot_block(
                &h.h_matrix,
                pilots,
                rho,
                &mut stream(seed, Phase::PilotNoise, 0, t),
            )?;
            let r = nalgebra::DVector::from_vec(blk.rp);
            acc.gerc(Complex64::new(1.0, 0.0), &r, &r, Complex64::new(1.0, 0.0));
            Ok(())
        },
    )?;
    Ok(sum / Complex64::new(trials as f64, 0.0))
}

/// Empirical `E[r r_p^H]` for a fixed symbol vector `x`.
pub fn empirical_crrp(
    cov: &CovarianceSet,
    pilots: &PilotMatrix,
    rho: f64,
    x: &[Complex64],
    trials: u64,
    seed: u64,
) -> Result<DMatrix<Complex64>> {
    let m = cov.antennas();
    let n = m * pilots.tau();
    let sum = chunked_sum(
        trials,
        || DMatrix::<Complex64>::zeros(m, n),
        |t, acc| {
            let h = sample_channels(cov, &mut stream(seed, Phase::Channel, 0, t));
            let blk = uplink_pilot_block(
                &h.h_matrix,
                pilots,
                rho,
                &mut stream(seed, Phase::PilotNoise, 0, t),
            )?;
            let data = uplink_data_block(
                &h.h_matrix,
                x,
                rho,
                &mut stream(seed, Phase::DataNoise, 0, t),
            )?;
            acc.gerc(
                Complex64::new(1.0, 0.0),
                &nalgebra::DVector::from_vec(data.r),
                &nalgebra::DVector::from_vec(blk.rp),
                Complex64::new(1.0, 0.0),
            );
            Ok(())
        },
    )?;
    Ok(sum / Complex64::new(trials as f64, 0.0))
}

/// Sample mean of a complex quantity with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleMean {
    pub mean: Complex64,
    /// Standard error of the complex mean, `sqrt(se_re^2 + se_im^2)`.
    pub std_error: f64,
    pub count: u64,
}

impl SampleMean {
    /// Mean and standard error of a sample (at least one value).
    pub fn from_samples(values: &[Complex64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<Complex64>() / n;
        let dof = (n - 1.0).max(1.0);
        let var_re = values.iter().map(|v| (v.re - mean.re).powi(2)).sum::<f64>() / dof;
        let var_im = values.iter().map(|v| (v.im - mean.im).powi(2)).sum::<f64>() / dof;
        Self {
            mean,
            std_error: ((var_re + var_im) / n).sqrt(),
            count: values.len() as u64,
        }
    }

    /// `|mean - target| <= max(rel * |target|, sigmas * std_error)`.
    pub fn agrees_with(&self, target: Complex64, rel: f64, sigmas: f64) -> bool {
        (self.mean - target).norm() <= (rel * target.norm()).max(sigmas * self.std_error)
    }
}

#[derive(Debug, Clone, Default)]
struct Moments {
    sum: Vec<Complex64>,
    sq_re: Vec<f64>,
    sq_im: Vec<f64>,
}

impl std::ops::AddAssign for Moments {
    fn add_assign(&mut self, o: Self) {
        for (a, b) in self.sum.iter_mut().zip(o.sum) {
            *a += b;
        }
        for (a, b) in self.sq_re.iter_mut().zip(o.sq_re) {
            *a += b;
        }
        for (a, b) in self.sq_im.iter_mut().zip(o.sq_im) {
            *a += b;
        }
    }
}

/// Empirical mean of the MRC soft estimates `x_hat_k` of every UE for a fixed
/// symbol vector, averaging over channel, pilot noise and data noise.
pub fn empirical_soft_symbol_means(
    cov: &CovarianceSet,
    pilots: &PilotMatrix,
    estimator: &EstimatorState,
    x: &[Complex64],
    trials: u64,
    seed: u64,
) -> Result<Vec<SampleMean>> {
    let users = cov.users();
    let rho = estimator.rho();
    let zero = || Moments {
        sum: vec![Complex64::new(0.0, 0.0); users],
        sq_re: vec![0.0; users],
        sq_im: vec![0.0; users],
    };
    let m = chunked_sum(trials, zero, |t, acc| {
        let xh = simulate_soft_symbols(cov, pilots, estimator, x, rho, seed, 0, t)?;
        for (k, v) in xh.iter().enumerate() {
            acc.sum[k] += v;
            acc.sq_re[k] += v.re * v.re;
            acc.sq_im[k] += v.im * v.im;
        }
        Ok(())
    })?;
    let n = trials as f64;
    Ok((0..users)
        .map(|k| {
            let mean = m.sum[k] / n;
            let var_re = (m.sq_re[k] / n - mean.re * mean.re).max(0.0) * n / (n - 1.0).max(1.0);
            let var_im = (m.sq_im[k] / n - mean.im * mean.im).max(0.0) * n / (n - 1.0).max(1.0);
            SampleMean {
                mean,
                std_error: ((var_re + var_im) / n).sqrt(),
                count: trials,
            }
        })
        .collect())
}

/// One trial of the full receive chain: channel, quantized pilots, BLMMSE
/// estimate, quantized data, MRC. Streams are keyed by `(seed, point, trial)`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_soft_symbols(
    cov: &CovarianceSet,
    pilots: &PilotMatrix,
    estimator: &EstimatorState,
    x: &[Complex64],
    rho: f64,
    seed: u64,
    point: u64,
    trial: u64,
) -> Result<Vec<Complex64>> {
    let h = sample_channels(cov, &mut stream(seed, Phase::Channel, point, trial));
    let blk = uplink_pilot_block(
        &h.h_matrix,
        pilots,
        rho,
        &mut stream(seed, Phase::PilotNoise, point, trial),
    )?;
    let h_hat = estimator.estimate(&blk.rp)?;
    let data = uplink_data_block(
        &h.h_matrix,
        x,
        rho,
        &mut stream(seed, Phase::DataNoise, point, trial),
    )?;
    mrc_soft_symbols(&h_hat, &data.r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_sum_is_deterministic() {
        let f = |t: u64, acc: &mut f64| {
            *acc += (t as f64).sin();
            Ok(())
        };
        let a = chunked_sum(10_000, || 0.0, f).unwrap();
        let b = chunked_sum(10_000, || 0.0, f).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        let direct: f64 = (0..10_000).map(|t| (t as f64).sin()).sum();
        assert!((a - direct).abs() < 1e-9);
    }

    #[test]
    fn sample_mean_of_known_values() {
        let v = [Complex64::new(1.0, 0.0), Complex64::new(3.0, 2.0)];
        let s = SampleMean::from_samples(&v);
        assert_eq!(s.mean, Complex64::new(2.0, 1.0));
        // var_re = 2, var_im = 2 with n - 1 = 1
        assert!((s.std_error - 2.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.count, 2);
    }

    #[test]
    fn agreement_rule() {
        let s = SampleMean {
            mean: Complex64::new(1.0, 0.0),
            std_error: 0.1,
            count: 10,
        };
        assert!(s.agrees_with(Complex64::new(1.25, 0.0), 0.02, 3.0));
        assert!(!s.agrees_with(Complex64::new(1.35, 0.0), 0.02, 3.0));
        assert!(s.agrees_with(Complex64::new(100.0, 0.0), 0.99, 3.0));
    }
}
