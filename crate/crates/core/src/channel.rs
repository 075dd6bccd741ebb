//! One-ring spatial covariances and correlated Rayleigh channel sampling.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::linalg::{hermitian_defect, hermitian_eigenvalues, hermitian_sqrt};
use crate::rng::complex_normal;
use crate::{Error, Result};

/// Midpoint-rule nodes used for the angular integral.
pub const QUADRATURE_POINTS: usize = 2048;

/// Angular spread (degrees) used by both reference scenarios.
pub const SCENARIO_SPREAD_DEG: f64 = 30.0;

/// Half-wavelength ULA.
pub const HALF_WAVELENGTH: f64 = 0.5;

/// Covariance of a uniform linear array under the one-ring model.
///
/// Paths arrive uniformly over `[center - spread, center + spread]` (degrees,
/// measured from broadside). Entry `(m, n)` is the average of
/// `exp(j 2 pi spacing (m - n) sin(phi))` over that interval, evaluated with a
/// [`QUADRATURE_POINTS`]-node midpoint rule and rescaled to trace `M`.
pub fn one_ring_covariance(
    antennas: usize,
    center_deg: f64,
    spread_deg: f64,
    spacing: f64,
) -> Result<DMatrix<Complex64>> {
    if antennas == 0 {
        return Err(Error::Usage(
            "one-ring covariance needs at least one antenna".into(),
        ));
    }
    if !(spread_deg > 0.0 && spread_deg <= 180.0) {
        return Err(Error::Usage(format!(
            "angular spread must be in (0, 180] degrees, got {spread_deg}"
        )));
    }
    if spacing.is_nan() || spacing <= 0.0 {
        return Err(Error::Usage(format!(
            "antenna spacing must be positive, got {spacing}"
        )));
    }

    let center = center_deg.to_radians();
    let spread = spread_deg.to_radians();
    let step = 2.0 * spread / QUADRATURE_POINTS as f64;
    let sines: Vec<f64> = (0..QUADRATURE_POINTS)
        .map(|i| (center - spread + (i as f64 + 0.5) * step).sin())
        .collect();

    // Toeplitz: only the lag matters
    let lags: Vec<Complex64> = (0..antennas)
        .map(|lag| {
            let w = 2.0 * PI * spacing * lag as f64;
            let sum = sines.iter().fold(Complex64::new(0.0, 0.0), |acc, s| {
                acc + Complex64::from_polar(1.0, w * s)
            });
            sum / QUADRATURE_POINTS as f64
        })
        .collect();

    let mut cov = DMatrix::from_fn(antennas, antennas, |m, n| {
        if m >= n {
            lags[m - n]
        } else {
            lags[n - m].conj()
        }
    });
    let trace: f64 = cov.diagonal().iter().map(|v| v.re).sum();
    cov *= Complex64::new(antennas as f64 / trace, 0.0);
    Ok(cov)
}

/// UE placement used to build [`CovarianceSet`]s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scenario {
    /// Two UEs at -60 and +60 degrees (120 degree separation).
    #[default]
    TwoUe,
    /// Three UEs at -60, 0 and +60 degrees (60 degree separation).
    ThreeUe,
    /// Any number of UEs with `C_{h_k} = I_M`.
    Uncorrelated,
}

impl Scenario {
    /// Center angles in degrees, or `None` for the uncorrelated case.
    pub fn center_angles(self) -> Option<&'static [f64]> {
        match self {
            Scenario::TwoUe => Some(&[-60.0, 60.0]),
            Scenario::ThreeUe => Some(&[-60.0, 0.0, 60.0]),
            Scenario::Uncorrelated => None,
        }
    }

    /// Number of UEs the scenario requires, if fixed.
    pub fn users(self) -> Option<usize> {
        self.center_angles().map(<[f64]>::len)
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "two_ue" => Ok(Scenario::TwoUe),
            "three_ue" => Ok(Scenario::ThreeUe),
            "uncorrelated" => Ok(Scenario::Uncorrelated),
            other => Err(Error::Config(format!(
                "unknown scenario '{other}' (expected two_ue, three_ue or uncorrelated)"
            ))),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::TwoUe => "two_ue",
            Scenario::ThreeUe => "three_ue",
            Scenario::Uncorrelated => "uncorrelated",
        })
    }
}

/// Per-UE spatial covariance matrices `C_{h_k}`.
#[derive(Debug)]
pub struct CovarianceSet {
    antennas: usize,
    per_ue: Vec<DMatrix<Complex64>>,
    sqrt: OnceLock<Vec<DMatrix<Complex64>>>,
}

impl Clone for CovarianceSet {
    fn clone(&self) -> Self {
        Self {
            antennas: self.antennas,
            per_ue: self.per_ue.clone(),
            sqrt: self.sqrt.clone(),
        }
    }
}

impl CovarianceSet {
    /// Validates and wraps per-UE covariances: square `M x M`, Hermitian,
    /// positive semidefinite and of trace `M`.
    pub fn new(per_ue: Vec<DMatrix<Complex64>>) -> Result<Self> {
        let first = per_ue
            .first()
            .ok_or_else(|| Error::Usage("covariance set needs at least one UE".into()))?;
        let antennas = first.nrows();
        for (k, c) in per_ue.iter().enumerate() {
            if c.shape() != (antennas, antennas) {
                return Err(Error::dim(
                    "covariance set",
                    format!("{antennas}x{antennas}"),
                    format!("{}x{} for UE {k}", c.nrows(), c.ncols()),
                ));
            }
            let defect = hermitian_defect(c);
            if defect > 1e-12 * antennas as f64 {
                return Err(Error::Usage(format!(
                    "covariance of UE {k} not Hermitian ({defect:e})"
                )));
            }
            let trace: f64 = c.diagonal().iter().map(|v| v.re).sum();
            if (trace - antennas as f64).abs() > 1e-9 * antennas as f64 {
                return Err(Error::Usage(format!(
                    "covariance of UE {k} has trace {trace}, expected {antennas}"
                )));
            }
            let ev = hermitian_eigenvalues(c);
            let (lo, hi) = (ev[0], ev[ev.len() - 1]);
            if lo < -1e-9 * hi.max(1.0) {
                return Err(Error::Usage(format!(
                    "covariance of UE {k} is not PSD (min eigenvalue {lo:e})"
                )));
            }
        }
        Ok(Self {
            antennas,
            per_ue,
            sqrt: OnceLock::new(),
        })
    }

    /// `K` copies of `I_M`.
    pub fn uncorrelated(antennas: usize, users: usize) -> Result<Self> {
        if users == 0 || antennas == 0 {
            return Err(Error::Usage("need M >= 1 and K >= 1".into()));
        }
        Self::new(vec![DMatrix::identity(antennas, antennas); users])
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn users(&self) -> usize {
        self.per_ue.len()
    }

    pub fn get(&self, k: usize) -> &DMatrix<Complex64> {
        &self.per_ue[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &DMatrix<Complex64>> {
        self.per_ue.iter()
    }

    /// `C_h = blkdiag(C_{h_1}, ..., C_{h_K})`.
    pub fn block_diagonal(&self) -> DMatrix<Complex64> {
        let m = self.antennas;
        let mut out = DMatrix::zeros(m * self.users(), m * self.users());
        for (k, c) in self.per_ue.iter().enumerate() {
            out.view_mut((k * m, k * m), (m, m)).copy_from(c);
        }
        out
    }

    /// `C_{h_k}^{1/2}` for every UE, computed on first use.
    pub fn sqrt_factors(&self) -> &[DMatrix<Complex64>] {
        self.sqrt
            .get_or_init(|| self.per_ue.iter().map(hermitian_sqrt).collect())
    }

    /// Writes every matrix as CSV, one row per matrix row with real and
    /// imaginary parts interleaved; UE blocks are stacked in order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(writer);
        for c in &self.per_ue {
            write_matrix_rows(&mut w, c)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

fn write_matrix_rows<W: Write>(w: &mut csv::Writer<W>, c: &DMatrix<Complex64>) -> Result<()> {
    for row in c.row_iter() {
        let fields: Vec<String> = row
            .iter()
            .flat_map(|v| [format!("{:e}", v.re), format!("{:e}", v.im)])
            .collect();
        w.write_record(&fields)?;
    }
    Ok(())
}

/// Covariances of the reference scenarios: 30 degree one-ring spread per UE,
/// half-wavelength ULA.
pub fn scenario_covariances(
    antennas: usize,
    users: usize,
    scenario: Scenario,
) -> Result<CovarianceSet> {
    match scenario.center_angles() {
        None => CovarianceSet::uncorrelated(antennas, users),
        Some(angles) => {
            if angles.len() != users {
                return Err(Error::Usage(format!(
                    "scenario {scenario} needs K = {}, got K = {users}",
                    angles.len()
                )));
            }
            let per_ue = angles
                .iter()
                .map(|&a| one_ring_covariance(antennas, a, SCENARIO_SPREAD_DEG, HALF_WAVELENGTH))
                .collect::<Result<Vec<_>>>()?;
            CovarianceSet::new(per_ue)
        }
    }
}

/// One channel draw: `H` (`M x K`) and `h = vec(H)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h_matrix: DMatrix<Complex64>,
}

impl ChannelRealization {
    /// Column-stacked `h = vec(H)`.
    pub fn stacked(&self) -> Vec<Complex64> {
        // nalgebra storage is column-major
        self.h_matrix.as_slice().to_vec()
    }

    pub fn column(&self, k: usize) -> Vec<Complex64> {
        self.h_matrix.column(k).iter().copied().collect()
    }
}

/// Draws `h_k = C_{h_k}^{1/2} g_k` with `g_k ~ CN(0, I)` for every UE.
pub fn sample_channels<R: Rng + ?Sized>(cov: &CovarianceSet, rng: &mut R) -> ChannelRealization {
    let m = cov.antennas();
    let mut h = DMatrix::zeros(m, cov.users());
    let mut g = vec![Complex64::new(0.0, 0.0); m];
    for (k, s) in cov.sqrt_factors().iter().enumerate() {
        g.iter_mut().for_each(|v| *v = complex_normal(rng));
        for j in 0..m {
            let gj = g[j];
            for i in 0..m {
                h[(i, k)] += s[(i, j)] * gj;
            }
        }
    }
    ChannelRealization { h_matrix: h }
}
