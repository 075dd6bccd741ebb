//! Experiment configuration and the flat `key = value` config file format.
//!
//! Recognized keys (case-insensitive; `#` starts a comment):
//!
//! | key            | alias | example                   |
//! |----------------|-------|---------------------------|
//! | `antennas`     | `m`   | `32`                      |
//! | `users`        | `k`   | `2`                       |
//! | `tau`          |       | `31`                      |
//! | `root`         |       | `1`                       |
//! | `constellation`|       | `qam16`                   |
//! | `scenario`     |       | `two_ue`                  |
//! | `snr_db`       |       | `-10, 0, 10`              |
//! | `trials`       |       | `2000`                    |
//! | `seed`         |       | `1`                       |
//! | `strategies`   |       | `exhaustive,heuristic,genie` |
//! | `ue`           |       | `0`                       |
//! | `interferers`  |       | `3,2`                     |
//! | `table_budget` |       | `1000000`                 |
//! | `allow_large`  |       | `false`                   |
//! | `cache_dir`    |       | `cache`                   |
//! | `out_dir`      |       | `out`                     |

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::channel::Scenario;
use crate::constellation::Alphabet;
use crate::detectors::Strategy;
use crate::expectation::DEFAULT_TABLE_BUDGET;
use crate::{Error, Result};

/// `M tau` above which a run must be explicitly allowed.
pub const LARGE_PROBLEM: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub antennas: usize,
    pub users: usize,
    pub tau: usize,
    pub root: usize,
    pub alphabet: Alphabet,
    pub scenario: Scenario,
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub strategies: Vec<Strategy>,
    /// Target UE for scatter runs (0-based).
    pub ue: usize,
    /// Interferer symbol indices for fixed-interferer scatter runs, in UE
    /// order with the target skipped.
    pub interferers: Option<Vec<usize>>,
    pub table_budget: usize,
    pub allow_large: bool,
    pub cache_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            antennas: 32,
            users: 2,
            tau: 31,
            root: 1,
            alphabet: Alphabet::Qam16,
            scenario: Scenario::TwoUe,
            snr_db: vec![-10.0, 0.0, 10.0, 20.0, 30.0, 40.0],
            trials: 2000,
            seed: 1,
            strategies: Strategy::ALL.to_vec(),
            ue: 0,
            interferers: None,
            table_budget: DEFAULT_TABLE_BUDGET,
            allow_large: false,
            cache_dir: None,
            out_dir: PathBuf::from("."),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{}'", value.trim())))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        other => Err(Error::Config(format!(
            "{key}: expected a boolean, got '{other}'"
        ))),
    }
}

impl ExperimentConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let k = key.trim().to_ascii_lowercase();
        match k.as_str() {
            "antennas" | "m" => self.antennas = parse(&k, value)?,
            "users" | "k" => self.users = parse(&k, value)?,
            "tau" => self.tau = parse(&k, value)?,
            "root" => self.root = parse(&k, value)?,
            "constellation" => {
                self.alphabet = value
                    .parse()
                    .map_err(|e| Error::Config(format!("{k}: {e}")))?
            }
            "scenario" => {
                self.scenario = value
                    .parse()
                    .map_err(|e| Error::Config(format!("{k}: {e}")))?
            }
            "snr_db" => self.snr_db = parse_list(&k, value)?,
            "trials" => self.trials = parse(&k, value)?,
            "seed" => self.seed = parse(&k, value)?,
            "strategies" => {
                self.strategies = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse().map_err(|e| Error::Config(format!("{k}: {e}"))))
                    .collect::<Result<_>>()?
            }
            "ue" => self.ue = parse(&k, value)?,
            "interferers" => self.interferers = Some(parse_list(&k, value)?),
            "table_budget" => self.table_budget = parse(&k, value)?,
            "allow_large" => self.allow_large = parse_bool(&k, value)?,
            "cache_dir" => self.cache_dir = Some(PathBuf::from(value.trim())),
            "out_dir" => self.out_dir = PathBuf::from(value.trim()),
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Checks the invariants every experiment relies on. Errors name the
    /// offending key.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.antennas == 0 {
            return bad("antennas: must be at least 1".into());
        }
        if self.users == 0 {
            return bad("users: must be at least 1".into());
        }
        if self.trials == 0 {
            return bad("trials: must be at least 1".into());
        }
        if self.snr_db.is_empty() {
            return bad("snr_db: grid is empty".into());
        }
        if let Some(v) = self.snr_db.iter().find(|v| !v.is_finite()) {
            return bad(format!("snr_db: {v} is not finite"));
        }
        if self.tau < self.users {
            return bad(format!("tau: must be at least K = {}", self.users));
        }
        if crate::pilots::zadoff_chu(self.tau, self.root).is_err() {
            return bad(format!(
                "tau/root: tau = {} must be an odd prime and root = {} coprime with it",
                self.tau, self.root
            ));
        }
        if let Some(k) = self.scenario.users() {
            if k != self.users {
                return bad(format!("scenario: {} requires users = {k}", self.scenario));
            }
        }
        if self.strategies.is_empty() {
            return bad("strategies: at least one strategy is required".into());
        }
        if self.ue >= self.users {
            return bad(format!(
                "ue: {} out of range for users = {}",
                self.ue, self.users
            ));
        }
        let levels = self.alphabet.build().len();
        if let Some(i) = &self.interferers {
            if i.len() + 1 != self.users {
                return bad(format!(
                    "interferers: expected {} entries, got {}",
                    self.users - 1,
                    i.len()
                ));
            }
            if let Some(d) = i.iter().find(|&&d| d >= levels) {
                return bad(format!(
                    "interferers: symbol index {d} out of range for L = {levels}"
                ));
            }
        }
        let size = self.antennas * self.tau;
        if size > LARGE_PROBLEM {
            if !self.allow_large {
                return bad(format!(
                    "antennas/tau: M tau = {size} exceeds {LARGE_PROBLEM}; the dense C_rp needs {:.2} GB, set allow_large to proceed",
                    (size * size * 16) as f64 / 1e9
                ));
            }
            log::warn!(
                "M tau = {size}: dense C_rp needs {:.2} GB and its factorization takes a while",
                (size * size * 16) as f64 / 1e9
            );
        }
        Ok(())
    }

    /// Interferer symbol indices for fixed-interferer runs. Defaults to
    /// `(-3 + 3j)/sqrt(10)` then `(-3 + j)/sqrt(10)` for 16-QAM.
    pub fn interferer_digits(&self) -> Vec<usize> {
        if let Some(i) = &self.interferers {
            return i.clone();
        }
        let defaults: &[usize] = match self.alphabet {
            Alphabet::Qam16 => &[3, 2],
            Alphabet::Qpsk => &[1, 0],
        };
        (0..self.users - 1)
            .map(|j| defaults[j % defaults.len()])
            .collect()
    }
}
