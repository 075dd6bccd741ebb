//! Symbol error rate versus SNR for every detection strategy.

use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::{ExperimentConfig, Setup};
use crate::detectors::{detect, Strategy};
use crate::expectation::build_expectation_tables;
use crate::oracle::simulate_soft_symbols;
use crate::rng::{stream, Phase};
use crate::{db_to_linear, Error, Result};

/// Error counts of one strategy at one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct SerPoint {
    pub strategy: Strategy,
    pub snr_db: f64,
    /// Symbol errors summed over all UEs.
    pub errors: u64,
    /// Detected symbols, `trials * K`.
    pub count: u64,
    /// Errors per UE; sums to `errors`.
    pub per_ue_errors: Vec<u64>,
    /// Detected symbols per UE (`trials`).
    pub per_ue_count: u64,
}

fn binomial_stderr(errors: u64, count: u64) -> f64 {
    let p = errors as f64 / count as f64;
    (p * (1.0 - p) / count as f64).sqrt()
}

impl SerPoint {
    pub fn ser(&self) -> f64 {
        self.errors as f64 / self.count as f64
    }

    /// Binomial standard error `sqrt(p (1 - p) / count)`.
    pub fn stderr(&self) -> f64 {
        binomial_stderr(self.errors, self.count)
    }

    pub fn ue_ser(&self, k: usize) -> f64 {
        self.per_ue_errors[k] as f64 / self.per_ue_count as f64
    }

    pub fn ue_stderr(&self, k: usize) -> f64 {
        binomial_stderr(self.per_ue_errors[k], self.per_ue_count)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SerResult {
    /// Ordered by SNR point, then by strategy in configuration order.
    pub points: Vec<SerPoint>,
}

impl SerResult {
    /// Points of one strategy in SNR-grid order.
    pub fn curve(&self, strategy: Strategy) -> Vec<&SerPoint> {
        self.points
            .iter()
            .filter(|p| p.strategy == strategy)
            .collect()
    }

    pub fn get(&self, strategy: Strategy, snr_db: f64) -> Option<&SerPoint> {
        self.points
            .iter()
            .find(|p| p.strategy == strategy && p.snr_db == snr_db)
    }
}

/// Runs the SER sweep: per SNR point the estimator and expectation tables are
/// rebuilt, then every trial draws uniform symbols for all UEs, passes them
/// through the link and detects each UE with each strategy.
pub fn run_ser(cfg: &ExperimentConfig) -> Result<SerResult> {
    let setup = Setup::new(cfg)?;
    let users = cfg.users;
    let levels = setup.constellation.len();
    let symbols = setup.constellation.symbols();
    let strategies = &cfg.strategies;
    let mut out = SerResult::default();

    for &snr_db in &cfg.snr_db {
        let rho = db_to_linear(snr_db);
        let model = setup.model(rho, cfg.cache_dir.as_deref())?;
        let tables = build_expectation_tables(&setup.constellation, &model, cfg.table_budget)?;
        log::info!(
            "SNR {snr_db} dB: tables ready, running {} trials",
            cfg.trials
        );

        // errors[s * K + k]
        let zero = || vec![0u64; strategies.len() * users];
        let errors = (0..cfg.trials)
            .into_par_iter()
            .map(|t| -> Result<Vec<u64>> {
                let mut rng = stream(cfg.seed, Phase::DataSymbols, 0, t);
                let digits: Vec<usize> = (0..users).map(|_| rng.random_range(0..levels)).collect();
                let x: Vec<Complex64> = digits.iter().map(|&d| symbols[d]).collect();
                let xhat = simulate_soft_symbols(
                    &setup.covariances,
                    &setup.pilots,
                    model.estimator(),
                    &x,
                    rho,
                    cfg.seed,
                    0,
                    t,
                )?;
                let mut e = zero();
                let mut others = Vec::with_capacity(users.saturating_sub(1));
                for k in 0..users {
                    others.clear();
                    others.extend(
                        digits
                            .iter()
                            .enumerate()
                            .filter(|&(j, _)| j != k)
                            .map(|(_, &d)| d),
                    );
                    for (s, &strategy) in strategies.iter().enumerate() {
                        let det = detect(strategy, xhat[k], &others, &tables[k])?;
                        if det.symbol_index != digits[k] {
                            e[s * users + k] += 1;
                        }
                    }
                }
                Ok(e)
            })
            .try_reduce(zero, |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            })?;

        for (s, &strategy) in strategies.iter().enumerate() {
            let per_ue_errors = errors[s * users..(s + 1) * users].to_vec();
            out.points.push(SerPoint {
                strategy,
                snr_db,
                errors: per_ue_errors.iter().sum(),
                count: cfg.trials * users as u64,
                per_ue_errors,
                per_ue_count: cfg.trials,
            });
        }
    }
    Ok(out)
}

/// CSV with columns `strategy, snr_db, errors, count, ser, stderr`.
pub fn write_ser_csv<W: Write>(result: &SerResult, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["strategy", "snr_db", "errors", "count", "ser", "stderr"])?;
    for p in &result.points {
        w.write_record(&[
            p.strategy.to_string(),
            p.snr_db.to_string(),
            p.errors.to_string(),
            p.count.to_string(),
            p.ser().to_string(),
            p.stderr().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// CSV with columns `strategy, snr_db, ue, errors, count, ser, stderr`.
pub fn write_ser_per_ue_csv<W: Write>(result: &SerResult, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "strategy", "snr_db", "ue", "errors", "count", "ser", "stderr",
    ])?;
    for p in &result.points {
        for (k, e) in p.per_ue_errors.iter().enumerate() {
            w.write_record(&[
                p.strategy.to_string(),
                p.snr_db.to_string(),
                k.to_string(),
                e.to_string(),
                p.per_ue_count.to_string(),
                p.ue_ser(k).to_string(),
                p.ue_stderr(k).to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Scenario;
    use crate::constellation::Alphabet;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            antennas: 4,
            users: 2,
            tau: 5,
            alphabet: Alphabet::Qpsk,
            scenario: Scenario::TwoUe,
            snr_db: vec![0.0, 10.0],
            trials: 300,
            seed: 9,
            ..Default::default()
        }
    }

    #[test]
    fn counts_are_consistent() {
        let r = run_ser(&small()).unwrap();
        assert_eq!(r.points.len(), 2 * 3);
        for p in &r.points {
            assert_eq!(p.count, 600);
            assert_eq!(p.per_ue_count, 300);
            assert_eq!(p.per_ue_errors.iter().sum::<u64>(), p.errors);
            assert!((0.0..=1.0).contains(&p.ser()));
            assert!(p.stderr() >= 0.0);
        }
        assert_eq!(r.curve(Strategy::Genie).len(), 2);
        assert!(r.get(Strategy::Heuristic, 10.0).is_some());
    }

    #[test]
    fn deterministic_for_a_seed() {
        let a = run_ser(&small()).unwrap();
        let b = run_ser(&small()).unwrap();
        assert_eq!(a, b);
        let c = run_ser(&ExperimentConfig {
            seed: 10,
            ..small()
        })
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_ue_strategies_coincide() {
        let cfg = ExperimentConfig {
            users: 1,
            scenario: Scenario::Uncorrelated,
            ..small()
        };
        let r = run_ser(&cfg).unwrap();
        for snr in [0.0, 10.0] {
            let e: Vec<u64> = Strategy::ALL
                .iter()
                .map(|&s| r.get(s, snr).unwrap().errors)
                .collect();
            assert!(e.iter().all(|&v| v == e[0]), "{e:?}");
        }
    }

    #[test]
    fn csv_schema() {
        let r = run_ser(&ExperimentConfig {
            snr_db: vec![5.0],
            trials: 20,
            ..small()
        })
        .unwrap();
        let mut buf = Vec::new();
        write_ser_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "strategy,snr_db,errors,count,ser,stderr"
        );
        assert_eq!(text.lines().count(), 4);
        let mut buf = Vec::new();
        write_ser_per_ue_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "strategy,snr_db,ue,errors,count,ser,stderr"
        );
        assert_eq!(text.lines().count(), 7);
    }

    #[test]
    fn rejects_invalid_config() {
        let e = run_ser(&ExperimentConfig {
            trials: 0,
            ..small()
        })
        .unwrap_err();
        assert!(e.to_string().contains("trials"));
    }
}
