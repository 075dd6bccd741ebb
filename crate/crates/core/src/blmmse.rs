//! Bussgang LMMSE channel estimation from 1-bit quantized pilots.
//!
//! The pilot observation is `r_p = Q(y_p)` with `y_p = vec(Y_p)`, indexed
//! `u M + m` for antenna `m` and pilot slot `u`. The estimate of UE `k` is
//!
//! ```text
//! h_hat_k = sqrt(rho) C_{h_k} p_bar_k^T A_p C_rp^{-1} r_p
//! ```
//!
//! where `A_p` is the diagonal Bussgang gain and `C_rp = E[r_p r_p^H]` follows
//! from the arcsine law. `C_rp^{-1}` is never formed: the state keeps a
//! Cholesky factor and, per UE, `T_k = C_rp^{-1} A_p p_bar_k^* C_{h_k}`
//! (`M tau x M`), so that `W_k = sqrt(rho) T_k^H`.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::channel::CovarianceSet;
use crate::expectation::{alpha, omega, ArcsineKernel};
use crate::linalg::HermitianCholesky;
use crate::pilots::PilotMatrix;
use crate::{output_power, Error, Result};

/// Relative diagonal load used when the first factorization attempt fails.
pub const JITTER: f64 = 1e-9;

/// Tolerance on correlation coefficients leaving `[-1, 1]`.
pub(crate) const CORRELATION_TOL: f64 = 1e-9;

fn check_dims(cov: &CovarianceSet, pilots: &PilotMatrix) -> Result<()> {
    if cov.users() != pilots.users() {
        return Err(Error::dim(
            "covariances vs pilots (K)",
            cov.users(),
            pilots.users(),
        ));
    }
    Ok(())
}

/// Diagonal of `C_yp = rho P_bar^* C_h P_bar^T + I`, length `M tau`.
pub fn cyp_diag(cov: &CovarianceSet, pilots: &PilotMatrix, rho: f64) -> Result<Vec<f64>> {
    check_dims(cov, pilots)?;
    let m = cov.antennas();
    let mut out = Vec::with_capacity(m * pilots.tau());
    for u in 0..pilots.tau() {
        for i in 0..m {
            let s: f64 = cov
                .iter()
                .enumerate()
                .map(|(k, c)| c[(i, i)].re * pilots.entry(u, k).norm_sqr())
                .sum();
            out.push(rho * s + 1.0);
        }
    }
    Ok(out)
}

/// Bussgang gain `A_p = sqrt((2/pi)(rho K + 1)) Diag(C_yp)^{-1/2}`, as a vector.
pub fn bussgang_gain(cov: &CovarianceSet, pilots: &PilotMatrix, rho: f64) -> Result<Vec<f64>> {
    let c = (2.0 / PI * output_power(rho, cov.users())).sqrt();
    Ok(cyp_diag(cov, pilots, rho)?
        .into_iter()
        .map(|d| c / d.sqrt())
        .collect())
}

/// Closed-form `C_rp = E[r_p r_p^H]` from the arcsine law.
pub fn crp_closed_form(
    cov: &CovarianceSet,
    pilots: &PilotMatrix,
    rho: f64,
) -> Result<DMatrix<Complex64>> {
    crp_closed_form_with(cov, pilots, rho, omega)
}

/// [`crp_closed_form`] with a substitute arcsine kernel.
pub fn crp_closed_form_with(
    cov: &CovarianceSet,
    pilots: &PilotMatrix,
    rho: f64,
    kernel: ArcsineKernel,
) -> Result<DMatrix<Complex64>> {
    check_dims(cov, pilots)?;
    let m = cov.antennas();
    let tau = pilots.tau();
    let users = cov.users();
    let n = m * tau;
    let power = output_power(rho, users);
    let inv_sqrt_alpha: Vec<f64> = alpha(cov, rho).iter().map(|a| a.sqrt().recip()).collect();

    let mut out = DMatrix::<Complex64>::zeros(n, n);
    // column (v, nn) holds rows (u, mm) with u*M + mm >= v*M + nn
    out.as_mut_slice()
        .par_chunks_mut(n)
        .enumerate()
        .try_for_each(|(col, column)| -> Result<()> {
            let (v, nn) = (col / m, col % m);
            for u in v..tau {
                let weights: Vec<Complex64> = (0..users)
                    .map(|k| pilots.entry(u, k) * pilots.entry(v, k).conj())
                    .collect();
                let first = if u == v { nn } else { 0 };
                for mm in first..m {
                    let row = u * m + mm;
                    if mm == nn && u == v {
                        column[row] = Complex64::new(power, 0.0);
                        continue;
                    }
                    // [C_k^T]_{mm,nn} = [C_k]_{nn,mm}
                    let s: Complex64 = cov.iter().zip(&weights).map(|(c, w)| c[(nn, mm)] * w).sum();
                    let zeta = s * (rho * inv_sqrt_alpha[mm] * inv_sqrt_alpha[nn]);
                    if zeta.re.abs() > 1.0 + CORRELATION_TOL
                        || zeta.im.abs() > 1.0 + CORRELATION_TOL
                    {
                        return Err(Error::Consistency(format!(
                            "zeta[{mm},{nn},{u},{v}] = {zeta} outside the unit square"
                        )));
                    }
                    column[row] = Complex64::new(kernel(zeta.re)?, -kernel(zeta.im)?) * power;
                }
            }
            Ok(())
        })?;
    for j in 0..n {
        for i in 0..j {
            out[(i, j)] = out[(j, i)].conj();
        }
    }
    Ok(out)
}

/// Precomputed BLMMSE estimator for one `(covariances, pilots, rho)` triple.
#[derive(Debug, Clone)]
pub struct EstimatorState {
    antennas: usize,
    tau: usize,
    users: usize,
    rho: f64,
    a_p: Vec<f64>,
    crp: DMatrix<Complex64>,
    factor: HermitianCholesky,
    transfer: Vec<DMatrix<Complex64>>,
}

/// Assembles `A_p`, `C_rp`, its factorization and the per-UE maps.
pub fn build_estimator(
    cov: &CovarianceSet,
    pilots: &PilotMatrix,
    rho: f64,
) -> Result<EstimatorState> {
    build_estimator_with(cov, pilots, rho, omega)
}

/// [`build_estimator`] with a substitute arcsine kernel.
pub fn build_estimator_with(
    cov: &CovarianceSet,
    pilots: &PilotMatrix,
    rho: f64,
    kernel: ArcsineKernel,
) -> Result<EstimatorState> {
    if !rho.is_finite() || rho <= 0.0 {
        return Err(Error::Usage(format!(
            "SNR must be positive and finite, got {rho}"
        )));
    }
    let a_p = bussgang_gain(cov, pilots, rho)?;
    let crp = crp_closed_form_with(cov, pilots, rho, kernel)?;
    let power = output_power(rho, cov.users());
    let factor = HermitianCholesky::with_jitter(&crp, JITTER * power)?;
    let transfer = transfer_maps(cov, pilots, &a_p, &factor);
    Ok(EstimatorState {
        antennas: cov.antennas(),
        tau: pilots.tau(),
        users: cov.users(),
        rho,
        a_p,
        crp,
        factor,
        transfer,
    })
}

/// `T_k = C_rp^{-1} A_p p_bar_k^* C_{h_k}` for every UE.
fn transfer_maps(
    cov: &CovarianceSet,
    pilots: &PilotMatrix,
    a_p: &[f64],
    factor: &HermitianCholesky,
) -> Vec<DMatrix<Complex64>> {
    let m = cov.antennas();
    cov.iter()
        .enumerate()
        .map(|(k, c)| {
            // block u of p_bar_k^* is conj(P_{u,k}) I_M
            let rhs = DMatrix::from_fn(m * pilots.tau(), m, |row, col| {
                let (u, i) = (row / m, row % m);
                c[(i, col)] * pilots.entry(u, k).conj() * a_p[row]
            });
            factor.solve(&rhs)
        })
        .collect()
}

impl EstimatorState {
    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Diagonal of `A_p`.
    pub fn bussgang_gain(&self) -> &[f64] {
        &self.a_p
    }

    pub fn crp(&self) -> &DMatrix<Complex64> {
        &self.crp
    }

    pub fn factor(&self) -> &HermitianCholesky {
        &self.factor
    }

    /// `C_rp^{-1} v` through the factorization.
    pub fn solve_crp(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.factor.solve_vec(v)
    }

    /// `T_k`, `M tau x M`.
    pub fn transfer(&self, k: usize) -> &DMatrix<Complex64> {
        &self.transfer[k]
    }

    /// Dense estimator map `W_k = sqrt(rho) T_k^H`, `M x M tau`.
    pub fn estimator_map(&self, k: usize) -> DMatrix<Complex64> {
        self.transfer[k].adjoint() * Complex64::new(self.rho.sqrt(), 0.0)
    }

    /// `H_hat` (`M x K`) from a quantized pilot observation.
    pub fn estimate(&self, rp: &[Complex64]) -> Result<DMatrix<Complex64>> {
        let n = self.antennas * self.tau;
        if rp.len() != n {
            return Err(Error::dim("estimate r_p", n, rp.len()));
        }
        let amp = self.rho.sqrt();
        let mut h_hat = DMatrix::zeros(self.antennas, self.users);
        for (k, t) in self.transfer.iter().enumerate() {
            for (m, col) in t.column_iter().enumerate() {
                let s: Complex64 = col.iter().zip(rp).map(|(a, b)| a.conj() * b).sum();
                h_hat[(m, k)] = s * amp;
            }
        }
        Ok(h_hat)
    }

    /// Writes the factorization and per-UE maps. `C_rp` is not stored; it is
    /// recomputed on [`load`](Self::load).
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
        put(MAGIC)?;
        for v in [self.antennas, self.tau, self.users] {
            put(&(v as u64).to_le_bytes())?;
        }
        put(&self.rho.to_le_bytes())?;
        for v in &self.a_p {
            put(&v.to_le_bytes())?;
        }
        for z in self
            .factor
            .lower_row_major()
            .iter()
            .chain(self.transfer.iter().flat_map(|t| t.iter()))
        {
            put(&z.re.to_le_bytes())?;
            put(&z.im.to_le_bytes())?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a state written by [`save`](Self::save) for the same inputs.
    pub fn load(path: &Path, cov: &CovarianceSet, pilots: &PilotMatrix, rho: f64) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
        if &magic != MAGIC {
            return Err(Error::Config(format!(
                "{}: not an estimator state file",
                path.display()
            )));
        }
        let mut word = || -> Result<[u8; 8]> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b).map_err(|e| Error::io(path, e))?;
            Ok(b)
        };
        let antennas = u64::from_le_bytes(word()?) as usize;
        let tau = u64::from_le_bytes(word()?) as usize;
        let users = u64::from_le_bytes(word()?) as usize;
        let stored_rho = f64::from_le_bytes(word()?);
        if (antennas, tau, users) != (cov.antennas(), pilots.tau(), cov.users())
            || stored_rho.to_bits() != rho.to_bits()
        {
            return Err(Error::Config(format!(
                "{}: state was built for a different configuration",
                path.display()
            )));
        }
        check_dims(cov, pilots)?;
        let n = antennas * tau;
        let mut a_p = Vec::with_capacity(n);
        for _ in 0..n {
            a_p.push(f64::from_le_bytes(word()?));
        }
        let mut complex = |count: usize| -> Result<Vec<Complex64>> {
            let mut v = Vec::with_capacity(count);
            for _ in 0..count {
                let re = f64::from_le_bytes(word()?);
                let im = f64::from_le_bytes(word()?);
                v.push(Complex64::new(re, im));
            }
            Ok(v)
        };
        let factor = HermitianCholesky::from_lower(n, complex(n * n)?)?;
        let transfer = (0..users)
            .map(|_| complex(n * antennas).map(|v| DMatrix::from_vec(n, antennas, v)))
            .collect::<Result<Vec<_>>>()?;
        let crp = crp_closed_form(cov, pilots, rho)?;
        Ok(Self {
            antennas,
            tau,
            users,
            rho,
            a_p,
            crp,
            factor,
            transfer,
        })
    }
}

const MAGIC: &[u8; 8] = b"OBEST001";

/// Hex SHA-256 over the covariances, pilot matrix and `rho`, used to name
/// cached estimator states.
pub fn cache_key(cov: &CovarianceSet, pilots: &PilotMatrix, rho: f64) -> String {
    let mut h = Sha256::new();
    h.update((cov.antennas() as u64).to_le_bytes());
    h.update((cov.users() as u64).to_le_bytes());
    for z in cov
        .iter()
        .flat_map(|c| c.iter())
        .chain(pilots.matrix().iter())
    {
        h.update(z.re.to_le_bytes());
        h.update(z.im.to_le_bytes());
    }
    h.update(rho.to_le_bytes());
    hex::encode(h.finalize())
}

/// Loads the state for these inputs from `dir` if present, otherwise builds
/// and stores it.
pub fn cached_estimator(
    dir: &Path,
    cov: &CovarianceSet,
    pilots: &PilotMatrix,
    rho: f64,
) -> Result<EstimatorState> {
    let path = dir.join(format!("{}.est", cache_key(cov, pilots, rho)));
    if path.exists() {
        match EstimatorState::load(&path, cov, pilots, rho) {
            Ok(state) => return Ok(state),
            Err(e) => log::warn!("ignoring cached estimator: {e}"),
        }
    }
    let state = build_estimator(cov, pilots, rho)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    state.save(&path)?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airlink::{quantize, uplink_pilot_block};
    use crate::channel::{sample_channels, scenario_covariances, Scenario};
    use crate::linalg::hermitian_defect;
    use crate::rng::{complex_normal, stream, Phase};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn diag_set(diags: &[&[f64]]) -> CovarianceSet {
        CovarianceSet::new(
            diags
                .iter()
                .map(|d| {
                    DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                        d.len(),
                        d.iter().map(|&v| c(v, 0.0)),
                    ))
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn cyp_examples() {
        let eye = CovarianceSet::uncorrelated(4, 1).unwrap();
        let pm = PilotMatrix::zadoff_chu(5, 1, 1).unwrap();
        assert!(cyp_diag(&eye, &pm, 1.0).unwrap().iter().all(|&v| v == 2.0));

        let set = scenario_covariances(6, 2, Scenario::TwoUe).unwrap();
        let pm = PilotMatrix::zadoff_chu(5, 2, 1).unwrap();
        for v in cyp_diag(&set, &pm, 3.0).unwrap() {
            assert!((v - 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cyp_matches_dense_definition() {
        let set = diag_set(&[&[0.5, 1.0, 1.5], &[1.0, 1.0, 1.0]]);
        let pm = PilotMatrix::zadoff_chu(5, 2, 1).unwrap();
        let rho = 2.0;
        let pbar = pm.expanded(3);
        let dense = pbar.map(|v| v.conj()) * set.block_diagonal() * pbar.transpose() * c(rho, 0.0)
            + DMatrix::identity(15, 15);
        let got = cyp_diag(&set, &pm, rho).unwrap();
        for (i, g) in got.iter().enumerate() {
            assert!((dense[(i, i)] - c(*g, 0.0)).norm() < 1e-12);
        }
        // entry (u-1)M+m = rho * sum_k C_k[m,m] + 1
        assert!((got[0] - (rho * 1.5 + 1.0)).abs() < 1e-12);
        assert!((got[5] - (rho * 2.5 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn crp_structure() {
        let set = scenario_covariances(4, 2, Scenario::TwoUe).unwrap();
        let pm = PilotMatrix::zadoff_chu(5, 2, 1).unwrap();
        let rho = 1.0;
        let crp = crp_closed_form(&set, &pm, rho).unwrap();
        assert_eq!(crp.shape(), (20, 20));
        assert_eq!(hermitian_defect(&crp), 0.0);
        for i in 0..20 {
            assert_eq!(crp[(i, i)], c(3.0, 0.0));
        }
        for v in crp.iter() {
            assert!(v.re.abs() <= 3.0 && v.im.abs() <= 3.0);
            assert!(v.norm() <= 2f64.sqrt() * 3.0);
        }
    }

    #[test]
    fn crp_identity_covariance_decouples_antennas() {
        let eye = CovarianceSet::uncorrelated(3, 1).unwrap();
        let pm = PilotMatrix::zadoff_chu(5, 1, 1).unwrap();
        let crp = crp_closed_form(&eye, &pm, 2.0).unwrap();
        for u in 0..5 {
            for v in 0..5 {
                for m in 0..3 {
                    for n in 0..3 {
                        if m != n {
                            assert_eq!(crp[(u * 3 + m, v * 3 + n)], c(0.0, 0.0));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn crp_rejects_inconsistent_inputs() {
        // rho > 0 with unit diagonals cannot produce |zeta| > 1, so feed a
        // kernel that flags the argument instead
        fn strict(x: f64) -> Result<f64> {
            if x.abs() > 0.5 {
                Err(Error::Domain(x))
            } else {
                omega(x)
            }
        }
        let set = scenario_covariances(3, 2, Scenario::TwoUe).unwrap();
        let pm = PilotMatrix::zadoff_chu(5, 2, 1).unwrap();
        assert!(matches!(
            crp_closed_form_with(&set, &pm, 5.0, strict),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn crp_matches_monte_carlo_small() {
        let set = scenario_covariances(2, 2, Scenario::TwoUe).unwrap();
        let pm = PilotMatrix::zadoff_chu(5, 2, 1).unwrap();
        let rho = 1.0;
        let crp = crp_closed_form(&set, &pm, rho).unwrap();
        let n = 50_000;
        let mut acc = DMatrix::<Complex64>::zeros(10, 10);
        for t in 0..n {
            let h = sample_channels(&set, &mut stream(1, Phase::Channel, 0, t));
            let blk = uplink_pilot_block(
                &h.h_matrix,
                &pm,
                rho,
                &mut stream(1, Phase::PilotNoise, 0, t),
            )
            .unwrap();
            let r = nalgebra::DVector::from_vec(blk.rp);
            acc += &r * r.adjoint();
        }
        let err = (acc / c(n as f64, 0.0) - crp).map(|v| v.norm()).max();
        assert!(err < 0.06, "{err}");
    }

    #[test]
    fn gain_is_forced_by_unit_modulus_pilots() {
        let set = scenario_covariances(8, 2, Scenario::TwoUe).unwrap();
        let pm = PilotMatrix::zadoff_chu(5, 2, 1).unwrap();
        let rho = 1.0;
        let st = build_estimator(&set, &pm, rho).unwrap();
        let al = alpha(&set, rho);
        let cyp = cyp_diag(&set, &pm, rho).unwrap();
        for (i, g) in st.bussgang_gain().iter().enumerate() {
            let want = (2.0 / PI * 3.0 / al[i % 8]).sqrt();
            assert!((g - want).abs() < 1e-12);
            assert!((cyp[i] - al[i % 8]).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_covariance_estimator_decouples_antennas() {
        let m = 3;
        let eye = CovarianceSet::uncorrelated(m, 2).unwrap();
        let pm = PilotMatrix::zadoff_chu(5, 2, 1).unwrap();
        let st = build_estimator(&eye, &pm, 1.3).unwrap();
        for k in 0..2 {
            let w = st.estimator_map(k);
            for a in 0..m {
                for u in 0..5 {
                    for b in 0..m {
                        let v = w[(a, u * m + b)];
                        if a != b {
                            assert!(v.norm() < 1e-12);
                        } else {
                            assert!((v - w[(0, u * m)]).norm() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn solver_residual() {
        let set = scenario_covariances(6, 2, Scenario::TwoUe).unwrap();
        let pm = PilotMatrix::zadoff_chu(7, 2, 1).unwrap();
        let st = build_estimator(&set, &pm, 1.0).unwrap();
        let mut rng = stream(3, Phase::Oracle, 0, 0);
        let v: Vec<Complex64> = (0..42).map(|_| complex_normal(&mut rng)).collect();
        let x = nalgebra::DVector::from_vec(st.solve_crp(&v));
        let back = st.crp() * x;
        let v = nalgebra::DVector::from_vec(v);
        assert!((back - &v).norm() <= 1e-8 * v.norm());
    }

    #[test]
    fn estimate_is_linear_and_deterministic() {
        let set = scenario_covariances(4, 2, Scenario::TwoUe).unwrap();
        let pm = PilotMatrix::zadoff_chu(5, 2, 1).unwrap();
        let st = build_estimator(&set, &pm, 1.0).unwrap();
        assert_eq!(
            st.estimate(&[c(0.0, 0.0); 20]).unwrap(),
            DMatrix::zeros(4, 2)
        );
        let mut rng = stream(4, Phase::Oracle, 0, 0);
        let r1: Vec<Complex64> = quantize(
            &(0..20)
                .map(|_| complex_normal(&mut rng))
                .collect::<Vec<_>>(),
            1.0,
            2,
        );
        let r2: Vec<Complex64> = (0..20).map(|_| complex_normal(&mut rng)).collect();
        let (a, b) = (c(0.3, -1.0), c(2.0, 0.5));
        let mix: Vec<Complex64> = r1.iter().zip(&r2).map(|(x, y)| a * x + b * y).collect();
        let lhs = st.estimate(&mix).unwrap();
        let rhs = st.estimate(&r1).unwrap() * a + st.estimate(&r2).unwrap() * b;
        assert!((lhs - rhs).map(|v| v.norm()).max() < 1e-12);
        assert_eq!(st.estimate(&r1).unwrap(), st.estimate(&r1).unwrap());
        // W_k r_p agrees with the map form
        let h = st.estimate(&r1).unwrap();
        let w0 = st.estimator_map(0) * nalgebra::DVector::from_vec(r1.clone());
        assert!((h.column(0) - w0).map(|v| v.norm()).max() < 1e-12);
        assert!(st.estimate(&r1[..3]).is_err());
    }

    #[test]
    fn estimate_is_zero_mean() {
        let set = scenario_covariances(8, 2, Scenario::TwoUe).unwrap();
        let pm = PilotMatrix::zadoff_chu(13, 2, 1).unwrap();
        let rho = 1.0;
        let st = build_estimator(&set, &pm, rho).unwrap();
        let n = 10_000;
        let mut sum = DMatrix::<Complex64>::zeros(8, 2);
        let mut sq = DMatrix::<f64>::zeros(8, 2);
        for t in 0..n {
            let h = sample_channels(&set, &mut stream(2, Phase::Channel, 0, t));
            let blk = uplink_pilot_block(
                &h.h_matrix,
                &pm,
                rho,
                &mut stream(2, Phase::PilotNoise, 0, t),
            )
            .unwrap();
            let e = st.estimate(&blk.rp).unwrap();
            sum += &e;
            sq += e.map(|v| v.norm_sqr());
        }
        let nf = n as f64;
        for i in 0..8 {
            for k in 0..2 {
                let mean = sum[(i, k)] / nf;
                // per-component standard error
                let se = ((sq[(i, k)] / nf - mean.norm_sqr()) / 2.0 / nf).sqrt();
                assert!(
                    mean.re.abs() <= 3.0 * se && mean.im.abs() <= 3.0 * se,
                    "{mean} se={se}"
                );
            }
        }
    }

    #[test]
    fn save_load_round_trip() {
        let set = scenario_covariances(4, 2, Scenario::TwoUe).unwrap();
        let pm = PilotMatrix::zadoff_chu(5, 2, 1).unwrap();
        let st = build_estimator(&set, &pm, 2.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.est");
        st.save(&path).unwrap();
        let back = EstimatorState::load(&path, &set, &pm, 2.0).unwrap();
        assert_eq!(back.factor(), st.factor());
        assert_eq!(back.transfer(1), st.transfer(1));
        assert_eq!(back.crp(), st.crp());
        assert!(EstimatorState::load(&path, &set, &pm, 3.0).is_err());

        let a = cached_estimator(dir.path(), &set, &pm, 2.0).unwrap();
        let b = cached_estimator(dir.path(), &set, &pm, 2.0).unwrap();
        assert_eq!(a.transfer(0), b.transfer(0));
        assert_ne!(cache_key(&set, &pm, 2.0), cache_key(&set, &pm, 2.5));
    }
}
