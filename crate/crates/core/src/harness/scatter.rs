//! Soft-symbol scatter data and the expectations it should centre on.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{ExperimentConfig, Setup};
use crate::expectation::{build_expectation_tables, ExpectationTable};
use crate::oracle::{simulate_soft_symbols, SampleMean};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ScatterMode {
    /// Interferers hold the given symbol indices (UE order, target skipped)
    /// while the target UE cycles through every symbol.
    FixedInterferers(Vec<usize>),
    /// No simulation: the full expectation table of the target UE.
    AllCombinations,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterRow {
    /// Trial index within the transmitted symbol's batch.
    pub trial: u64,
    pub xhat: Complex64,
    pub true_symbol_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterResult {
    pub ue: usize,
    pub rho: f64,
    /// Simulated soft symbols, grouped by transmitted symbol (fixed mode only).
    pub rows: Vec<ScatterRow>,
    /// `(x_encoding, E_k)` for every symbol vector covered by the run.
    pub expected: Vec<(usize, Complex64)>,
    /// Empirical mean of `x_hat_k` per own symbol index (fixed mode only).
    pub sample_means: Vec<SampleMean>,
    /// Full table of the target UE (all-combinations mode only).
    pub table: Option<ExpectationTable>,
}

/// Runs one scatter experiment for UE `ue` at linear SNR `rho`.
///
/// In fixed-interferer mode every own symbol `l` gets `cfg.trials` trials on
/// streams keyed by point `l`.
pub fn run_scatter(
    cfg: &ExperimentConfig,
    ue: usize,
    mode: &ScatterMode,
    rho: f64,
) -> Result<ScatterResult> {
    let setup = Setup::new(cfg)?;
    if ue >= cfg.users {
        return Err(Error::Config(format!(
            "ue: {ue} out of range for users = {}",
            cfg.users
        )));
    }
    let model = setup.model(rho, cfg.cache_dir.as_deref())?;
    let levels = setup.constellation.len();
    let symbols = setup.constellation.symbols();

    match mode {
        ScatterMode::AllCombinations => {
            let mut tables =
                build_expectation_tables(&setup.constellation, &model, cfg.table_budget)?;
            let table = tables.swap_remove(ue);
            Ok(ScatterResult {
                ue,
                rho,
                rows: Vec::new(),
                expected: table.entries().iter().copied().enumerate().collect(),
                sample_means: Vec::new(),
                table: Some(table),
            })
        }
        ScatterMode::FixedInterferers(others) => {
            let probe = ExpectationTable::from_entries(
                ue,
                cfg.users,
                setup.constellation.clone(),
                vec![Complex64::new(0.0, 0.0); levels.pow(cfg.users as u32)],
            )?;
            let encodings = probe
                .slice_for(others)
                .map_err(|e| Error::Config(format!("interferers: {e}")))?;
            let vectors: Vec<Vec<Complex64>> = encodings
                .iter()
                .map(|&enc| probe.decode(enc).iter().map(|&d| symbols[d]).collect())
                .collect();

            let expected = encodings
                .iter()
                .zip(&vectors)
                .map(|(&enc, x)| Ok((enc, model.expected_soft_symbol(ue, x)?)))
                .collect::<Result<Vec<_>>>()?;

            let trials = cfg.trials;
            let xhat: Vec<Complex64> = (0..levels as u64 * trials)
                .into_par_iter()
                .map(|i| {
                    let (l, t) = (i / trials, i % trials);
                    let v = simulate_soft_symbols(
                        &setup.covariances,
                        &setup.pilots,
                        model.estimator(),
                        &vectors[l as usize],
                        rho,
                        cfg.seed,
                        l,
                        t,
                    )?;
                    Ok(v[ue])
                })
                .collect::<Result<_>>()?;

            let sample_means = xhat
                .chunks(trials as usize)
                .map(SampleMean::from_samples)
                .collect();
            let rows = xhat
                .iter()
                .enumerate()
                .map(|(i, &v)| ScatterRow {
                    trial: i as u64 % trials,
                    xhat: v,
                    true_symbol_index: i / trials as usize,
                })
                .collect();
            Ok(ScatterResult {
                ue,
                rho,
                rows,
                expected,
                sample_means,
                table: None,
            })
        }
    }
}

/// CSV with columns `trial, re_xhat, im_xhat, true_symbol_index`.
pub fn write_scatter_csv<W: Write>(rows: &[ScatterRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["trial", "re_xhat", "im_xhat", "true_symbol_index"])?;
    for r in rows {
        w.write_record(&[
            r.trial.to_string(),
            r.xhat.re.to_string(),
            r.xhat.im.to_string(),
            r.true_symbol_index.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
