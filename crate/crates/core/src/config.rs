//! Flat `key = value` run configuration with `#` comments.
//!
//! ```text
//! # desk-scale rate check
//! beta = 1
//! b = 2
//! c = 2
//! ell_grid = 64, 128, 256
//! repetitions = 20
//! ```

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiments::{Aggregate, SweepConfig, DEFAULT_BURN_IN};

/// Environment variable that overrides the configured master seed.
pub const SEED_ENV: &str = "EFFDIM_SEED";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sweep: SweepConfig,
    pub aggregate: Aggregate,
    pub burn_in: usize,
    pub records_path: PathBuf,
    pub report_path: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sweep: SweepConfig::default(),
            aggregate: Aggregate::Median,
            burn_in: DEFAULT_BURN_IN,
            records_path: PathBuf::from("records.jsonl"),
            report_path: PathBuf::from("report.csv"),
        }
    }
}

fn field_error(key: &str, line: usize, reason: impl std::fmt::Display) -> Error {
    Error::InvalidParameter {
        name: "config",
        reason: format!("line {line}: `{key}`: {reason}"),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, line: usize, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| field_error(key, line, e))
}

impl RunConfig {
    /// Parses configuration text; unknown keys are rejected. Values are
    /// validated with [`RunConfig::validate`] before returning.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| field_error(content, line, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            let s = &mut cfg.sweep;
            match key {
                "beta" => s.beta = parse_num(key, line, value)?,
                "b" => s.b = parse_num(key, line, value)?,
                "c" => s.c = parse_num(key, line, value)?,
                "R" | "r" => s.r = parse_num(key, line, value)?,
                "sigma" => s.sigma = parse_num(key, line, value)?,
                "n_modes" => s.n_modes = parse_num(key, line, value)?,
                "delta" => s.delta = parse_num(key, line, value)?,
                "repetitions" => s.repetitions = parse_num(key, line, value)?,
                "seed" => s.seed = parse_num(key, line, value)?,
                "ell_grid" => {
                    s.ell_grid = value
                        .split(',')
                        .map(|v| parse_num(key, line, v.trim()))
                        .collect::<Result<_>>()?
                }
                "aggregate" => cfg.aggregate = value.parse().map_err(|e| field_error(key, line, e))?,
                "burn_in" => cfg.burn_in = parse_num(key, line, value)?,
                "records_path" => cfg.records_path = PathBuf::from(value),
                "report_path" => cfg.report_path = PathBuf::from(value),
                other => return Err(field_error(other, line, "unknown key")),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidParameter {
            name: "config",
            reason: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    /// Applies `EFFDIM_SEED` if set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.sweep.seed = v
                .trim()
                .parse()
                .map_err(|e| Error::invalid("EFFDIM_SEED", format!("not an unsigned integer: {e}")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.sweep.validate()?;
        let mut distinct = self.sweep.ell_grid.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() < self.burn_in + 2 {
            return Err(Error::invalid(
                "ell_grid",
                format!(
                    "{} distinct sample sizes; need at least burn_in + 2 = {} for a slope fit",
                    distinct.len(),
                    self.burn_in + 2
                ),
            ));
        }
        Ok(())
    }
}
