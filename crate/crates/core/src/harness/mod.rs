//! Seeded Monte-Carlo experiments: soft-symbol scatter data, expectation
//! tables, SER-versus-SNR curves and the closed-form consistency report.
//!
//! Every random draw comes from a stream keyed by the master seed, a phase
//! tag, a point index and the trial index, so results do not depend on worker
//! count or execution order. Trials reuse the same channel and noise streams
//! across SNR points.

mod config;
mod scatter;
mod ser;
mod validate;

use std::path::Path;

pub use config::{ExperimentConfig, LARGE_PROBLEM};
pub use scatter::{run_scatter, write_scatter_csv, ScatterMode, ScatterResult, ScatterRow};
pub use ser::{run_ser, write_ser_csv, write_ser_per_ue_csv, SerPoint, SerResult};
pub use validate::{validate, validate_with_kernel, Check, ValidationReport};

use crate::blmmse::{build_estimator, cached_estimator};
use crate::channel::{scenario_covariances, CovarianceSet};
use crate::constellation::Constellation;
use crate::expectation::SoftSymbolModel;
use crate::pilots::PilotMatrix;
use crate::{Error, Result};

/// Scenario objects shared by all SNR points of one experiment.
#[derive(Debug, Clone)]
pub struct Setup {
    pub covariances: CovarianceSet,
    pub pilots: PilotMatrix,
    pub constellation: Constellation,
}

impl Setup {
    /// Validates `cfg` and builds covariances, pilots and the alphabet.
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            covariances: scenario_covariances(cfg.antennas, cfg.users, cfg.scenario)?,
            pilots: PilotMatrix::zadoff_chu(cfg.tau, cfg.users, cfg.root)?,
            constellation: cfg.alphabet.build(),
        })
    }

    /// Estimator and expectation model at linear SNR `rho`, read from or
    /// stored into `cache_dir` when given.
    pub fn model(&self, rho: f64, cache_dir: Option<&Path>) -> Result<SoftSymbolModel> {
        let estimator = match cache_dir {
            Some(dir) => cached_estimator(dir, &self.covariances, &self.pilots, rho)?,
            None => build_estimator(&self.covariances, &self.pilots, rho)?,
        };
        SoftSymbolModel::from_estimator(self.covariances.clone(), self.pilots.clone(), estimator)
    }
}

/// Opens `path` for writing, creating parent directories.
pub fn create_output(path: &Path) -> Result<std::fs::File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::File::create(path).map_err(|e| Error::io(path, e))
}
