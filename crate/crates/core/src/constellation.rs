//! Finite data-symbol alphabets and minimum-distance mapping.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::{Error, Result};

/// Ordered set of unit-average-power data symbols.
///
/// The order is part of the contract: expectation tables and CSV dumps index
/// symbols by their position here.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    symbols: Vec<Complex64>,
    label: String,
}

impl Constellation {
    /// Builds an alphabet from raw points, checking distinctness, `L >= 2`
    /// and unit average power.
    pub fn new(label: impl Into<String>, symbols: Vec<Complex64>) -> Result<Self> {
        if symbols.len() < 2 {
            return Err(Error::Usage(format!(
                "constellation needs at least 2 symbols, got {}",
                symbols.len()
            )));
        }
        for (i, a) in symbols.iter().enumerate() {
            if symbols[..i].iter().any(|b| (a - b).norm() < 1e-12) {
                return Err(Error::Usage(format!("duplicate symbol {a} at index {i}")));
            }
        }
        let power = symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / symbols.len() as f64;
        if (power - 1.0).abs() > 1e-12 {
            return Err(Error::Usage(format!(
                "constellation average power is {power}, expected 1"
            )));
        }
        Ok(Self {
            symbols,
            label: label.into(),
        })
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn symbol(&self, index: usize) -> Complex64 {
        self.symbols[index]
    }

    /// Index of `symbol` in the alphabet, matched to within `1e-9`.
    pub fn index_of(&self, symbol: Complex64) -> Option<usize> {
        self.symbols
            .iter()
            .position(|s| (s - symbol).norm() <= 1e-9)
    }

    /// Hard decision on `point` against the alphabet itself.
    pub fn nearest(&self, point: Complex64) -> usize {
        // non-empty by construction
        nearest(point, &self.symbols).unwrap()
    }
}

/// Normalized 16-QAM, `(1/sqrt(10)) * {+-1 +-j, +-1 +-3j, +-3 +-j, +-3 +-3j}`.
///
/// Ordered row-major over the unscaled real part in `{-3, -1, 1, 3}`, then the
/// unscaled imaginary part in `{-3, -1, 1, 3}`: index `4*i_re + i_im`.
pub fn make_qam16() -> Constellation {
    const LEVELS: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];
    let scale = 10f64.sqrt().recip();
    let symbols = LEVELS
        .iter()
        .flat_map(|&re| LEVELS.iter().map(move |&im| Complex64::new(re, im) * scale))
        .collect();
    Constellation::new("qam16", symbols).expect("16-QAM is a valid alphabet")
}

/// Normalized QPSK, `(1/sqrt(2)) * {+-1 +-j}`, ordered `-1-j, -1+j, 1-j, 1+j`.
pub fn make_qpsk() -> Constellation {
    const LEVELS: [f64; 2] = [-1.0, 1.0];
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let symbols = LEVELS
        .iter()
        .flat_map(|&re| LEVELS.iter().map(move |&im| Complex64::new(re, im) * scale))
        .collect();
    Constellation::new("qpsk", symbols).expect("QPSK is a valid alphabet")
}

/// Alphabets selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Alphabet {
    #[default]
    Qam16,
    Qpsk,
}

impl Alphabet {
    pub fn build(self) -> Constellation {
        match self {
            Alphabet::Qam16 => make_qam16(),
            Alphabet::Qpsk => make_qpsk(),
        }
    }
}

impl FromStr for Alphabet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "qam16" | "16qam" => Ok(Alphabet::Qam16),
            "qpsk" => Ok(Alphabet::Qpsk),
            other => Err(Error::Config(format!(
                "unknown constellation '{other}' (expected qam16 or qpsk)"
            ))),
        }
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Alphabet::Qam16 => "qam16",
            Alphabet::Qpsk => "qpsk",
        })
    }
}

/// Index of the candidate closest to `point`; ties go to the lowest index.
pub fn nearest(point: Complex64, candidates: &[Complex64]) -> Result<usize> {
    nearest_with_distance(point, candidates).map(|(i, _)| i)
}

/// Like [`nearest`], also returning the squared distance achieved.
pub(crate) fn nearest_with_distance(
    point: Complex64,
    candidates: &[Complex64],
) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in candidates.iter().enumerate() {
        let d = (point - c).norm_sqr();
        // strict comparison keeps the first minimizer
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.ok_or_else(|| Error::Usage("nearest: empty candidate list".into()))
}
