//! Received signals: unquantized and 1-bit quantized observations for the
//! pilot and data phases, and MRC soft-estimated symbols.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::pilots::PilotMatrix;
use crate::rng::complex_normal;
use crate::{output_power, Error, Result};

#[inline]
fn sign(v: f64) -> f64 {
    // sgn(0) = +1
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// 1-bit quantization of a single sample.
#[inline]
pub fn quantize_sample(v: Complex64, scale: f64) -> Complex64 {
    Complex64::new(scale * sign(v.re), scale * sign(v.im))
}

/// Output amplitude per real dimension, `sqrt((rho K + 1) / 2)`.
#[inline]
pub fn quantizer_scale(rho: f64, users: usize) -> f64 {
    (output_power(rho, users) / 2.0).sqrt()
}

/// Elementwise `sqrt((rho K + 1) / 2) (sgn(Re x) + j sgn(Im x))`.
///
/// Every output has squared modulus `rho K + 1`, the per-antenna power of the
/// unquantized signal.
pub fn quantize(values: &[Complex64], rho: f64, users: usize) -> Vec<Complex64> {
    let scale = quantizer_scale(rho, users);
    values.iter().map(|&v| quantize_sample(v, scale)).collect()
}

/// Data-phase observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedBlock {
    /// `y = sqrt(rho) H x + z`.
    pub y: Vec<Complex64>,
    /// `r = Q(y)`.
    pub r: Vec<Complex64>,
    /// Transmitted symbol vector.
    pub x: Vec<Complex64>,
}

/// Pilot-phase observation.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBlock {
    /// `Y_p = sqrt(rho) H P^H + Z_p`, `M x tau`.
    pub yp_matrix: DMatrix<Complex64>,
    /// `y_p = vec(Y_p)`; entry `u M + m` is antenna `m` at pilot slot `u`.
    pub yp: Vec<Complex64>,
    /// `r_p = Q(y_p)`.
    pub rp: Vec<Complex64>,
}

/// `y = sqrt(rho) H x + z` with `z ~ CN(0, I_M)`, then `r = Q(y)`.
pub fn uplink_data_block<R: Rng + ?Sized>(
    h: &DMatrix<Complex64>,
    x: &[Complex64],
    rho: f64,
    rng: &mut R,
) -> Result<ReceivedBlock> {
    let z: Vec<Complex64> = (0..h.nrows()).map(|_| complex_normal(rng)).collect();
    uplink_data_block_with_noise(h, x, rho, &z)
}

/// [`uplink_data_block`] with an explicit noise vector.
pub fn uplink_data_block_with_noise(
    h: &DMatrix<Complex64>,
    x: &[Complex64],
    rho: f64,
    z: &[Complex64],
) -> Result<ReceivedBlock> {
    let (m, k) = h.shape();
    if x.len() != k {
        return Err(Error::dim("data block symbols", k, x.len()));
    }
    if z.len() != m {
        return Err(Error::dim("data block noise", m, z.len()));
    }
    let amp = rho.sqrt();
    let y: Vec<Complex64> = (0..m)
        .map(|i| {
            let hx: Complex64 = (0..k).map(|j| h[(i, j)] * x[j]).sum();
            hx * amp + z[i]
        })
        .collect();
    let r = quantize(&y, rho, k);
    Ok(ReceivedBlock {
        y,
        r,
        x: x.to_vec(),
    })
}

/// `Y_p = sqrt(rho) H P^H + Z_p` with i.i.d. `CN(0, 1)` noise, vectorized and
/// quantized.
pub fn uplink_pilot_block<R: Rng + ?Sized>(
    h: &DMatrix<Complex64>,
    pilots: &PilotMatrix,
    rho: f64,
    rng: &mut R,
) -> Result<PilotBlock> {
    let zp = DMatrix::from_fn(h.nrows(), pilots.tau(), |_, _| complex_normal(rng));
    uplink_pilot_block_with_noise(h, pilots, rho, &zp)
}

/// [`uplink_pilot_block`] with an explicit `M x tau` noise matrix.
pub fn uplink_pilot_block_with_noise(
    h: &DMatrix<Complex64>,
    pilots: &PilotMatrix,
    rho: f64,
    zp: &DMatrix<Complex64>,
) -> Result<PilotBlock> {
    let (m, k) = h.shape();
    if pilots.users() != k {
        return Err(Error::dim("pilot block users", k, pilots.users()));
    }
    if zp.shape() != (m, pilots.tau()) {
        return Err(Error::dim(
            "pilot block noise",
            format!("{m}x{}", pilots.tau()),
            format!("{}x{}", zp.nrows(), zp.ncols()),
        ));
    }
    let yp_matrix = h * pilots.matrix().adjoint() * Complex64::new(rho.sqrt(), 0.0) + zp;
    let yp = yp_matrix.as_slice().to_vec();
    let rp = quantize(&yp, rho, k);
    Ok(PilotBlock { yp_matrix, yp, rp })
}

/// MRC combining with `V = H_hat`: `x_hat_k = h_hat_k^H r`.
pub fn mrc_soft_symbols(h_hat: &DMatrix<Complex64>, r: &[Complex64]) -> Result<Vec<Complex64>> {
    if r.len() != h_hat.nrows() {
        return Err(Error::dim("MRC observation", h_hat.nrows(), r.len()));
    }
    Ok(h_hat
        .column_iter()
        .map(|col| col.iter().zip(r).map(|(h, v)| h.conj() * v).sum())
        .collect())
}
