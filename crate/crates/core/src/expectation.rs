//! Closed-form expectation of MRC soft-estimated symbols under 1-bit
//! quantization, and expectation tables over all data-symbol vectors.
//!
//! With `h_hat_k = W_k r_p` and `x_hat_k = h_hat_k^H r`, the expectation over
//! channel and noise for a fixed symbol vector `x` is
//!
//! ```text
//! E_k = sqrt(rho) tr(C_rp^{-1} A_p p_bar_k^* C_{h_k} C_rrp(x))
//! ```
//!
//! where `C_rrp = E[r r_p^H]` comes from the arcsine law applied to the joint
//! Gaussian `(y, y_p)`. The normalized correlations are
//!
//! ```text
//! alpha_m = [rho sum_k C_k + I]_{mm}
//! beta_m  = [rho sum_k C_k |x_k|^2 + I]_{mm}
//! zeta_{m,n,u,v} = rho / sqrt(alpha_m alpha_n) [sum_k C_k^T P_{u,k} P_{v,k}^*]_{mn}
//! eta_{m,n,u}    = rho / sqrt(alpha_n beta_m)  [sum_k C_k x_k P_{u,k}]_{mn}
//! ```
//!
//! and `C_rrp[m, uM + n] = (rho K + 1)(Omega(Re eta) + j Omega(Im eta))` with
//! `Omega(x) = (2/pi) asin(x)`.

use std::f64::consts::FRAC_2_PI;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::blmmse::{build_estimator, build_estimator_with, EstimatorState, CORRELATION_TOL};
use crate::channel::CovarianceSet;
use crate::constellation::Constellation;
use crate::pilots::PilotMatrix;
use crate::{output_power, Error, Result};

/// Arcsine-law kernel applied to one real correlation coefficient.
pub type ArcsineKernel = fn(f64) -> Result<f64>;

/// Default cap on `L^K` for expectation tables.
pub const DEFAULT_TABLE_BUDGET: usize = 1_000_000;

/// `Omega(x) = (2/pi) asin(x)`, clamping arguments within `1e-9` of `[-1, 1]`.
pub fn omega(x: f64) -> Result<f64> {
    if x.is_nan() || x.abs() > 1.0 + CORRELATION_TOL {
        return Err(Error::Domain(x));
    }
    Ok(FRAC_2_PI * x.clamp(-1.0, 1.0).asin())
}

/// `alpha_m = [rho sum_k C_{h_k} + I]_{mm}`.
pub fn alpha(cov: &CovarianceSet, rho: f64) -> Vec<f64> {
    (0..cov.antennas())
        .map(|m| rho * cov.iter().map(|c| c[(m, m)].re).sum::<f64>() + 1.0)
        .collect()
}

/// `beta_m = [rho sum_k C_{h_k} |x_k|^2 + I]_{mm}`.
pub fn beta(cov: &CovarianceSet, rho: f64, x: &[Complex64]) -> Vec<f64> {
    (0..cov.antennas())
        .map(|m| {
            rho * cov
                .iter()
                .zip(x)
                .map(|(c, xk)| c[(m, m)].re * xk.norm_sqr())
                .sum::<f64>()
                + 1.0
        })
        .collect()
}

/// Normalized pilot-pilot correlation `zeta_{m,n,u,v}` (0-based indices).
pub fn zeta(
    cov: &CovarianceSet,
    pilots: &PilotMatrix,
    rho: f64,
    (m, n, u, v): (usize, usize, usize, usize),
) -> Complex64 {
    let al = alpha(cov, rho);
    let s: Complex64 = cov
        .iter()
        .enumerate()
        .map(|(k, c)| c.transpose()[(m, n)] * pilots.entry(u, k) * pilots.entry(v, k).conj())
        .sum();
    s * (rho / (al[m] * al[n]).sqrt())
}

/// Normalized data-pilot correlation `eta_{m,n,u}` (0-based indices).
pub fn eta(
    cov: &CovarianceSet,
    pilots: &PilotMatrix,
    rho: f64,
    x: &[Complex64],
    (m, n, u): (usize, usize, usize),
) -> Complex64 {
    let al = alpha(cov, rho);
    let be = beta(cov, rho, x);
    let s: Complex64 = cov
        .iter()
        .zip(x)
        .enumerate()
        .map(|(k, (c, xk))| c[(m, n)] * xk * pilots.entry(u, k))
        .sum();
    s * (rho / (al[n] * be[m]).sqrt())
}

/// Per-slot mixing matrices `G_u = sum_k x_k P_{u,k} C_{h_k}`.
fn mixing(cov: &CovarianceSet, pilots: &PilotMatrix, x: &[Complex64]) -> Vec<DMatrix<Complex64>> {
    let m = cov.antennas();
    (0..pilots.tau())
        .map(|u| {
            let mut g = DMatrix::zeros(m, m);
            for (k, (c, xk)) in cov.iter().zip(x).enumerate() {
                g += c * (xk * pilots.entry(u, k));
            }
            g
        })
        .collect()
}

fn check_inputs(cov: &CovarianceSet, pilots: &PilotMatrix, x: &[Complex64]) -> Result<()> {
    if cov.users() != pilots.users() {
        return Err(Error::dim(
            "covariances vs pilots (K)",
            cov.users(),
            pilots.users(),
        ));
    }
    if x.len() != cov.users() {
        return Err(Error::dim("symbol vector", cov.users(), x.len()));
    }
    Ok(())
}

#[inline]
fn checked_eta(eta: Complex64, idx: (usize, usize, usize)) -> Result<Complex64> {
    if eta.re.abs() > 1.0 + CORRELATION_TOL || eta.im.abs() > 1.0 + CORRELATION_TOL {
        return Err(Error::Consistency(format!(
            "eta{idx:?} = {eta} outside the unit square"
        )));
    }
    Ok(eta)
}

/// Dense `C_rrp = E[r r_p^H]` (`M x M tau`) for symbol vector `x`.
pub fn crrp_closed_form(
    cov: &CovarianceSet,
    pilots: &PilotMatrix,
    rho: f64,
    x: &[Complex64],
) -> Result<DMatrix<Complex64>> {
    crrp_closed_form_with(cov, pilots, rho, x, omega)
}

/// [`crrp_closed_form`] with a substitute arcsine kernel.
pub fn crrp_closed_form_with(
    cov: &CovarianceSet,
    pilots: &PilotMatrix,
    rho: f64,
    x: &[Complex64],
    kernel: ArcsineKernel,
) -> Result<DMatrix<Complex64>> {
    check_inputs(cov, pilots, x)?;
    let m = cov.antennas();
    let power = output_power(rho, cov.users());
    let inv_a: Vec<f64> = alpha(cov, rho).iter().map(|a| a.sqrt().recip()).collect();
    let inv_b: Vec<f64> = beta(cov, rho, x).iter().map(|b| b.sqrt().recip()).collect();
    let g = mixing(cov, pilots, x);
    let mut out = DMatrix::zeros(m, m * pilots.tau());
    for (u, gu) in g.iter().enumerate() {
        for n in 0..m {
            for i in 0..m {
                let e = checked_eta(gu[(i, n)] * (rho * inv_b[i] * inv_a[n]), (i, n, u))?;
                out[(i, u * m + n)] = Complex64::new(kernel(e.re)?, kernel(e.im)?) * power;
            }
        }
    }
    Ok(out)
}

/// Everything needed to evaluate expectations for one scenario and SNR.
#[derive(Debug, Clone)]
pub struct SoftSymbolModel {
    cov: CovarianceSet,
    pilots: PilotMatrix,
    rho: f64,
    estimator: EstimatorState,
    kernel: ArcsineKernel,
}

impl SoftSymbolModel {
    /// Builds the BLMMSE state for `(cov, pilots, rho)`.
    pub fn new(cov: CovarianceSet, pilots: PilotMatrix, rho: f64) -> Result<Self> {
        let estimator = build_estimator(&cov, &pilots, rho)?;
        Self::from_estimator(cov, pilots, estimator)
    }

    /// Wraps an existing estimator state (e.g. loaded from disk).
    pub fn from_estimator(
        cov: CovarianceSet,
        pilots: PilotMatrix,
        estimator: EstimatorState,
    ) -> Result<Self> {
        if (estimator.antennas(), estimator.tau(), estimator.users())
            != (cov.antennas(), pilots.tau(), cov.users())
        {
            return Err(Error::Usage(
                "estimator state does not match covariances/pilots".into(),
            ));
        }
        let rho = estimator.rho();
        Ok(Self {
            cov,
            pilots,
            rho,
            estimator,
            kernel: omega,
        })
    }

    /// Like [`new`](Self::new) but with a substitute arcsine kernel for both
    /// `C_rp` and `C_rrp`.
    pub fn with_kernel(
        cov: CovarianceSet,
        pilots: PilotMatrix,
        rho: f64,
        kernel: ArcsineKernel,
    ) -> Result<Self> {
        let estimator = build_estimator_with(&cov, &pilots, rho, kernel)?;
        let mut model = Self::from_estimator(cov, pilots, estimator)?;
        model.kernel = kernel;
        Ok(model)
    }

    pub fn covariances(&self) -> &CovarianceSet {
        &self.cov
    }

    pub fn pilots(&self) -> &PilotMatrix {
        &self.pilots
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn users(&self) -> usize {
        self.cov.users()
    }

    pub fn estimator(&self) -> &EstimatorState {
        &self.estimator
    }

    /// `E_k` for UE `k` (0-based).
    pub fn expected_soft_symbol(&self, k: usize, x: &[Complex64]) -> Result<Complex64> {
        if k >= self.users() {
            return Err(Error::Usage(format!(
                "UE index {k} out of range for K = {}",
                self.users()
            )));
        }
        Ok(self.expected_soft_symbols(x)?[k])
    }

    /// `E_k` for every UE, sharing one pass over `C_rrp`.
    ///
    /// `C_rrp` is never stored: each entry is consumed by the trace
    /// `sum_{i,j} T_k[i, j] C_rrp[j, i]` as soon as it is produced.
    pub fn expected_soft_symbols(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        check_inputs(&self.cov, &self.pilots, x)?;
        let m = self.cov.antennas();
        let rho = self.rho;
        let users = self.users();
        let power = output_power(rho, users);
        let inv_a: Vec<f64> = alpha(&self.cov, rho)
            .iter()
            .map(|a| a.sqrt().recip())
            .collect();
        let inv_b: Vec<f64> = beta(&self.cov, rho, x)
            .iter()
            .map(|b| b.sqrt().recip())
            .collect();
        let g = mixing(&self.cov, &self.pilots, x);
        let transfer: Vec<&[Complex64]> = (0..users)
            .map(|k| self.estimator.transfer(k).as_slice())
            .collect();
        let rows = m * self.pilots.tau();

        let mut acc = vec![Complex64::new(0.0, 0.0); users];
        let mut entry_row = vec![Complex64::new(0.0, 0.0); m];
        for (u, gu) in g.iter().enumerate() {
            for i in 0..m {
                // C_rrp[i, u M + n] for n = 0..M
                for (n, slot) in entry_row.iter_mut().enumerate() {
                    let e = checked_eta(gu[(i, n)] * (rho * inv_b[i] * inv_a[n]), (i, n, u))?;
                    *slot = Complex64::new((self.kernel)(e.re)?, (self.kernel)(e.im)?);
                }
                // T_k[u M + n, i], contiguous over n in column-major storage
                let base = i * rows + u * m;
                for (a, t) in acc.iter_mut().zip(&transfer) {
                    let s: Complex64 = t[base..base + m]
                        .iter()
                        .zip(&entry_row)
                        .map(|(tv, cv)| tv * cv)
                        .sum();
                    *a += s;
                }
            }
        }
        let scale = rho.sqrt() * power;
        Ok(acc.into_iter().map(|a| a * scale).collect())
    }
}

/// `E_k` over every `x` in `S^K` for one UE, grouped by that UE's symbol.
///
/// Symbol vectors are encoded in radix `L` with UE 0 as the most significant
/// digit: `x_encoding = sum_j l_j L^(K-1-j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationTable {
    ue: usize,
    users: usize,
    constellation: Constellation,
    entries: Vec<Complex64>,
    class_means: Vec<Complex64>,
}

fn table_size(levels: usize, users: usize, budget: usize) -> Result<usize> {
    let entries = (levels as u128)
        .checked_pow(users as u32)
        .unwrap_or(u128::MAX);
    if entries > budget as u128 {
        return Err(Error::TableBudget {
            entries,
            levels,
            users,
            budget,
        });
    }
    Ok(entries as usize)
}

impl ExpectationTable {
    /// Assembles a table from raw entries and computes the class means.
    pub fn from_entries(
        ue: usize,
        users: usize,
        constellation: Constellation,
        entries: Vec<Complex64>,
    ) -> Result<Self> {
        let levels = constellation.len();
        let size = table_size(levels, users, usize::MAX)?;
        if entries.len() != size {
            return Err(Error::dim("expectation table entries", size, entries.len()));
        }
        if ue >= users {
            return Err(Error::Usage(format!(
                "UE index {ue} out of range for K = {users}"
            )));
        }
        let mut table = Self {
            ue,
            users,
            constellation,
            entries,
            class_means: Vec::new(),
        };
        let per_class = (size / levels) as f64;
        let mut sums = vec![Complex64::new(0.0, 0.0); levels];
        for (enc, e) in table.entries.iter().enumerate() {
            sums[table.digit(enc, ue)] += e;
        }
        table.class_means = sums.into_iter().map(|s| s / per_class).collect();
        Ok(table)
    }

    pub fn ue(&self) -> usize {
        self.ue
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn levels(&self) -> usize {
        self.constellation.len()
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    /// `E_k` indexed by `x_encoding`.
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Mean of the class with `x_k = s_l`, indexed by `l`.
    pub fn class_means(&self) -> &[Complex64] {
        &self.class_means
    }

    /// Symbol index of UE `j` in encoding `enc`.
    #[inline]
    pub fn digit(&self, enc: usize, j: usize) -> usize {
        let l = self.levels();
        enc / l.pow((self.users - 1 - j) as u32) % l
    }

    /// Encoding of a vector of symbol indices (UE 0 first).
    pub fn encode(&self, digits: &[usize]) -> usize {
        let l = self.levels();
        digits.iter().fold(0, |acc, d| acc * l + d)
    }

    pub fn decode(&self, enc: usize) -> Vec<usize> {
        (0..self.users).map(|j| self.digit(enc, j)).collect()
    }

    /// Encodings whose own-UE digit is `l` (`L^(K-1)` of them).
    pub fn class_members(&self, l: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&enc| self.digit(enc, self.ue) == l)
    }

    /// Encodings sharing the interferer digits `others` (all UEs but this
    /// one, in UE order), ordered by own symbol index.
    pub fn slice_for(&self, others: &[usize]) -> Result<Vec<usize>> {
        if others.len() + 1 != self.users {
            return Err(Error::dim(
                "interferer symbols",
                self.users - 1,
                others.len(),
            ));
        }
        if let Some(bad) = others.iter().find(|&&d| d >= self.levels()) {
            return Err(Error::Usage(format!(
                "interferer symbol index {bad} out of range"
            )));
        }
        let mut digits = Vec::with_capacity(self.users);
        digits.extend_from_slice(&others[..self.ue]);
        digits.push(0);
        digits.extend_from_slice(&others[self.ue..]);
        Ok((0..self.levels())
            .map(|l| {
                digits[self.ue] = l;
                self.encode(&digits)
            })
            .collect())
    }
}

/// Expectation table of UE `k` over all of `S^K`.
pub fn build_expectation_table(
    k: usize,
    constellation: &Constellation,
    model: &SoftSymbolModel,
    budget: usize,
) -> Result<ExpectationTable> {
    if k >= model.users() {
        return Err(Error::Usage(format!(
            "UE index {k} out of range for K = {}",
            model.users()
        )));
    }
    let mut all = build_expectation_tables(constellation, model, budget)?;
    Ok(all.swap_remove(k))
}

/// Expectation tables of every UE, evaluated in one sweep over `S^K`.
///
/// Entries are computed in parallel and stored by encoding, so the result does
/// not depend on scheduling.
pub fn build_expectation_tables(
    constellation: &Constellation,
    model: &SoftSymbolModel,
    budget: usize,
) -> Result<Vec<ExpectationTable>> {
    let users = model.users();
    let levels = constellation.len();
    let size = table_size(levels, users, budget)?;
    let symbols = constellation.symbols();
    let per_x: Vec<Vec<Complex64>> = (0..size)
        .into_par_iter()
        .map(|enc| {
            let x: Vec<Complex64> = (0..users)
                .map(|j| symbols[enc / levels.pow((users - 1 - j) as u32) % levels])
                .collect();
            model.expected_soft_symbols(&x)
        })
        .collect::<Result<_>>()?;
    (0..users)
        .map(|k| {
            let entries = per_x.iter().map(|e| e[k]).collect();
            ExpectationTable::from_entries(k, users, constellation.clone(), entries)
        })
        .collect()
}

/// CSV with columns `x_encoding, re_E, im_E`, one row per entry.
pub fn write_expectations_csv<W: Write>(table: &ExpectationTable, writer: W) -> Result<()> {
    write_expectation_rows(table.entries().iter().copied().enumerate(), writer)
}

/// Same schema as [`write_expectations_csv`] for an arbitrary subset of
/// `(x_encoding, E_k)` pairs.
pub fn write_expectation_rows<W: Write>(
    rows: impl IntoIterator<Item = (usize, Complex64)>,
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x_encoding", "re_E", "im_E"])?;
    for (enc, e) in rows {
        w.write_record(&[enc.to_string(), e.re.to_string(), e.im.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// CSV with columns `l, re_Ebar, im_Ebar`, one row per symbol index.
pub fn write_class_means_csv<W: Write>(table: &ExpectationTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["l", "re_Ebar", "im_Ebar"])?;
    for (l, e) in table.class_means().iter().enumerate() {
        w.write_record(&[l.to_string(), e.re.to_string(), e.im.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
