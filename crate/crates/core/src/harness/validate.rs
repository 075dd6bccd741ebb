//! Fast consistency suite: closed forms against Monte-Carlo oracles at small
//! array sizes, plus exact structural identities.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;

use super::ExperimentConfig;
use crate::airlink::quantize;
use crate::blmmse::crp_closed_form_with;
use crate::channel::{scenario_covariances, CovarianceSet};
use crate::constellation::make_qpsk;
use crate::expectation::{
    alpha, beta, build_expectation_tables, crrp_closed_form_with, omega, ArcsineKernel,
    SoftSymbolModel,
};
use crate::oracle::{empirical_crp, empirical_crrp, empirical_soft_symbol_means};
use crate::pilots::PilotMatrix;
use crate::rng::{complex_normal, stream, Phase};
use crate::{output_power, Error, Result};

const COVARIANCE_ANTENNAS: usize = 4;
const COVARIANCE_TRIALS: u64 = 200_000;
const COVARIANCE_TOL: f64 = 0.02;
const MEAN_ANTENNAS: usize = 8;
const MEAN_TRIALS: u64 = 100_000;
const MEAN_VECTORS: usize = 3;
const MEAN_REL_TOL: f64 = 0.02;
const MEAN_SIGMAS: f64 = 3.0;
const ORACLE_RHO: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn record(&mut self, name: &'static str, outcome: Result<(bool, String)>) {
        let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        self.checks.push(Check {
            name,
            passed,
            detail,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            )?;
        }
        Ok(())
    }
}

fn smallest_pilot_len(users: usize) -> usize {
    (users.max(5)..)
        .find(|&t| crate::pilots::zadoff_chu(t, 1).is_ok())
        .expect("primes are unbounded")
}

fn random_symbols(cfg: &ExperimentConfig, point: u64) -> Vec<Complex64> {
    let s = cfg.alphabet.build();
    let mut rng = stream(cfg.seed, Phase::Oracle, point, 0);
    (0..cfg.users)
        .map(|_| s.symbol(rng.random_range(0..s.len())))
        .collect()
}

fn max_entry_gap(a: &nalgebra::DMatrix<Complex64>, b: &nalgebra::DMatrix<Complex64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Runs the suite with the production arcsine kernel.
pub fn validate(cfg: &ExperimentConfig) -> ValidationReport {
    validate_with_kernel(cfg, omega)
}

/// Runs the suite with `kernel` substituted in every closed form; the
/// Monte-Carlo side is unaffected. Never fails: errors become failed checks.
pub fn validate_with_kernel(cfg: &ExperimentConfig, kernel: ArcsineKernel) -> ValidationReport {
    let mut report = ValidationReport::default();
    if let Err(e) = cfg.validate() {
        report.record("configuration", Ok((false, e.to_string())));
        return report;
    }
    let users = cfg.users;
    let power = output_power(ORACLE_RHO, users);
    let tau = smallest_pilot_len(users);
    let small = (|| -> Result<(CovarianceSet, PilotMatrix, CovarianceSet)> {
        Ok((
            scenario_covariances(COVARIANCE_ANTENNAS, users, cfg.scenario)?,
            PilotMatrix::zadoff_chu(tau, users, cfg.root)?,
            scenario_covariances(MEAN_ANTENNAS, users, cfg.scenario)?,
        ))
    })();
    let (cov4, pilots, cov8) = match small {
        Ok(v) => v,
        Err(e) => {
            report.record("oracle scenario", Err(e));
            return report;
        }
    };

    report.record("quantizer codomain", {
        let mut rng = stream(cfg.seed, Phase::Oracle, 100, 0);
        let rho = crate::db_to_linear(cfg.snr_db[0]);
        let v: Vec<Complex64> = (0..10_000)
            .map(|_| complex_normal(&mut rng) * 3.0)
            .collect();
        let p = output_power(rho, users);
        let a = (p / 2.0).sqrt();
        let bad = quantize(&v, rho, users)
            .iter()
            .filter(|q| q.re.abs() != a || q.im.abs() != a || (q.norm_sqr() - p).abs() > 1e-12 * p)
            .count();
        Ok((bad == 0, format!("{bad} of 10000 outputs off the grid")))
    });

    report.record(
        "pilot orthogonality",
        (|| {
            let pm = PilotMatrix::zadoff_chu(cfg.tau, users, cfg.root)?;
            let gram = pm.matrix().adjoint() * pm.matrix();
            let eye = nalgebra::DMatrix::<Complex64>::identity(users, users)
                * Complex64::new(cfg.tau as f64, 0.0);
            let gap = max_entry_gap(&gram, &eye);
            Ok((gap <= 1e-9, format!("max |P^H P - tau I| = {gap:.2e}")))
        })(),
    );

    let crp = crp_closed_form_with(&cov4, &pilots, ORACLE_RHO, kernel).map_err(|e| e.to_string());
    let crp_ref = || crp.as_ref().map_err(|e| Error::Consistency(e.clone()));

    report.record(
        "C_rp diagonal",
        crp_ref().map(|c| {
            let gap = c
                .diagonal()
                .iter()
                .map(|d| (d - Complex64::new(power, 0.0)).norm())
                .fold(0.0, f64::max);
            (
                gap <= 1e-12 * power,
                format!("max |diag - (rho K + 1)| = {gap:.2e}"),
            )
        }),
    );

    report.record("C_rp vs Monte-Carlo", (|| {
        let c = crp_ref()?;
        let emp = empirical_crp(&cov4, &pilots, ORACLE_RHO, COVARIANCE_TRIALS, cfg.seed)?;
        let gap = max_entry_gap(c, &emp);
        Ok((
            gap <= COVARIANCE_TOL,
            format!("M={COVARIANCE_ANTENNAS} tau={tau} trials={COVARIANCE_TRIALS}: max gap {gap:.4} (tol {COVARIANCE_TOL})"),
        ))
    })());

    report.record("C_rrp vs Monte-Carlo", (|| {
        let x = random_symbols(cfg, 0);
        let c = crrp_closed_form_with(&cov4, &pilots, ORACLE_RHO, &x, kernel)?;
        let emp = empirical_crrp(&cov4, &pilots, ORACLE_RHO, &x, COVARIANCE_TRIALS, cfg.seed)?;
        let gap = max_entry_gap(&c, &emp);
        Ok((
            gap <= COVARIANCE_TOL,
            format!("M={COVARIANCE_ANTENNAS} tau={tau} trials={COVARIANCE_TRIALS}: max gap {gap:.4} (tol {COVARIANCE_TOL})"),
        ))
    })());

    report.record("beta equals alpha for unit-modulus symbols", {
        let q = make_qpsk();
        let x: Vec<Complex64> = (0..users).map(|k| q.symbol(k % q.len())).collect();
        let gap = alpha(&cov4, ORACLE_RHO)
            .iter()
            .zip(beta(&cov4, ORACLE_RHO, &x))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok((gap <= 1e-12, format!("max |beta - alpha| = {gap:.2e}")))
    });

    report.record(
        "class means and table size",
        (|| {
            let model =
                SoftSymbolModel::with_kernel(cov4.clone(), pilots.clone(), ORACLE_RHO, kernel)?;
            let s = cfg.alphabet.build();
            let tables = build_expectation_tables(&s, &model, cfg.table_budget)?;
            let want_len = s.len().pow(users as u32);
            let mut gap = 0.0f64;
            for t in &tables {
                for l in 0..s.len() {
                    let members: Vec<usize> = t.class_members(l).collect();
                    let mean = members.iter().map(|&e| t.entries()[e]).sum::<Complex64>()
                        / members.len() as f64;
                    gap = gap.max((mean - t.class_means()[l]).norm());
                }
            }
            let sizes_ok = tables.iter().all(|t| t.len() == want_len);
            Ok((
                sizes_ok && gap <= 1e-12,
                format!(
                    "{} tables of {want_len} entries, max class-mean gap {gap:.2e}",
                    tables.len()
                ),
            ))
        })(),
    );

    report.record("E_k vs Monte-Carlo", (|| {
        let model = SoftSymbolModel::with_kernel(cov8.clone(), pilots.clone(), ORACLE_RHO, kernel)?;
        let mut worst = 0.0f64;
        let mut ok = true;
        for v in 0..MEAN_VECTORS {
            let x = random_symbols(cfg, 1 + v as u64);
            let want = model.expected_soft_symbols(&x)?;
            let got = empirical_soft_symbol_means(&cov8, &pilots, model.estimator(), &x, MEAN_TRIALS, cfg.seed.wrapping_add(v as u64))?;
            for (g, w) in got.iter().zip(&want) {
                ok &= g.agrees_with(*w, MEAN_REL_TOL, MEAN_SIGMAS);
                let allowed = (MEAN_REL_TOL * w.norm()).max(MEAN_SIGMAS * g.std_error);
                worst = worst.max((g.mean - w).norm() / allowed);
            }
        }
        Ok((
            ok,
            format!(
                "M={MEAN_ANTENNAS} tau={tau} trials={MEAN_TRIALS}, {MEAN_VECTORS} symbol vectors: worst gap {worst:.2} of allowance"
            ),
        ))
    })());

    report
}
