//! Minimum-distance detection of soft-estimated symbols against expectation
//! tables.
//!
//! * [`detect_exhaustive`] searches all `L^K` expectations of the target UE.
//! * [`detect_heuristic`] searches the `L` class means (interferers averaged out).
//! * [`detect_genie`] searches the `L` expectations consistent with the true
//!   interferer symbols.
//!
//! Ties resolve to the lowest encoding or symbol index.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::constellation::nearest_with_distance;
use crate::expectation::ExpectationTable;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Exhaustive,
    Heuristic,
    Genie,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Exhaustive, Strategy::Heuristic, Strategy::Genie];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Exhaustive => "exhaustive",
            Strategy::Heuristic => "heuristic",
            Strategy::Genie => "genie",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exhaustive" => Ok(Strategy::Exhaustive),
            "heuristic" => Ok(Strategy::Heuristic),
            "genie" => Ok(Strategy::Genie),
            other => Err(Error::Config(format!(
                "unknown strategy '{other}' (expected exhaustive, heuristic or genie)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionResult {
    pub ue: usize,
    /// Detected symbol index `l*`.
    pub symbol_index: usize,
    pub symbol: Complex64,
    pub strategy: Strategy,
    /// `|x_hat_k - E*|` at the selected candidate.
    pub distance: f64,
}

fn result(
    table: &ExpectationTable,
    strategy: Strategy,
    symbol_index: usize,
    dist_sq: f64,
) -> DetectionResult {
    DetectionResult {
        ue: table.ue(),
        symbol_index,
        symbol: table.constellation().symbol(symbol_index),
        strategy,
        distance: dist_sq.sqrt(),
    }
}

/// Nearest of all `L^K` expectations; reports the target UE's digit of the
/// winning encoding.
pub fn detect_exhaustive(xhat: Complex64, table: &ExpectationTable) -> Result<DetectionResult> {
    let (enc, d) = nearest_with_distance(xhat, table.entries())
        .map_err(|_| Error::Usage("exhaustive detection on an empty table".into()))?;
    Ok(result(
        table,
        Strategy::Exhaustive,
        table.digit(enc, table.ue()),
        d,
    ))
}

/// Nearest class mean.
pub fn detect_heuristic(xhat: Complex64, table: &ExpectationTable) -> Result<DetectionResult> {
    let (l, d) = nearest_with_distance(xhat, table.class_means())?;
    Ok(result(table, Strategy::Heuristic, l, d))
}

/// Nearest expectation among the `L` entries matching the known interferer
/// symbol indices (all UEs but the target, in UE order).
pub fn detect_genie_indices(
    xhat: Complex64,
    interferers: &[usize],
    table: &ExpectationTable,
) -> Result<DetectionResult> {
    let slice = table.slice_for(interferers)?;
    let entries = table.entries();
    let mut best = (0, f64::INFINITY);
    for (l, &enc) in slice.iter().enumerate() {
        let d = (xhat - entries[enc]).norm_sqr();
        if d < best.1 {
            best = (l, d);
        }
    }
    Ok(result(table, Strategy::Genie, best.0, best.1))
}

/// [`detect_genie_indices`] taking the interferer symbols themselves; each
/// must belong to the table's alphabet.
pub fn detect_genie(
    xhat: Complex64,
    interferers: &[Complex64],
    table: &ExpectationTable,
) -> Result<DetectionResult> {
    let digits = interferers
        .iter()
        .map(|&s| {
            table.constellation().index_of(s).ok_or_else(|| {
                Error::Usage(format!("interferer symbol {s} is not in the alphabet"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    detect_genie_indices(xhat, &digits, table)
}

/// Runs `strategy`; `interferers` is only read by the genie.
pub fn detect(
    strategy: Strategy,
    xhat: Complex64,
    interferers: &[usize],
    table: &ExpectationTable,
) -> Result<DetectionResult> {
    match strategy {
        Strategy::Exhaustive => detect_exhaustive(xhat, table),
        Strategy::Heuristic => detect_heuristic(xhat, table),
        Strategy::Genie => detect_genie_indices(xhat, interferers, table),
    }
}
