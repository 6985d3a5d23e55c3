//! Run configuration and its flat `key=value` file format.
//!
//! Keys are exactly the field names of [`RunConfig`]. Blank lines and lines
//! starting with `#` are ignored. Floats are written with Rust's shortest
//! round-trip formatting, so `from_text(to_text(c)) == c` bit for bit.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signature::SignatureParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub sigma: f64,
    pub r_max: f64,
    pub grid_len: usize,
    pub feature_len: usize,
    pub binarize_threshold: u8,
    pub svm_c: f64,
    pub folds: usize,
    pub runs: usize,
    pub seed: u64,
    /// `None` means one worker per core.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            r_max: 10.0,
            grid_len: 512,
            feature_len: 128,
            binarize_threshold: 128,
            svm_c: 1.0,
            folds: 10,
            runs: 10,
            seed: 0,
            threads: None,
        }
    }
}

pub const KEYS: [&str; 10] = [
    "sigma",
    "r_max",
    "grid_len",
    "feature_len",
    "binarize_threshold",
    "svm_c",
    "folds",
    "runs",
    "seed",
    "threads",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::ConfigError(format!("bad value {value:?} for {key}")))
}

impl RunConfig {
    /// Named parameter presets: `mocap` (r_max 10, sigma 1) and
    /// `weizmann` (r_max 110, sigma 2).
    pub fn preset(name: &str) -> Result<Self> {
        let base = Self::default();
        match name {
            "mocap" => Ok(Self {
                r_max: 10.0,
                sigma: 1.0,
                ..base
            }),
            "weizmann" => Ok(Self {
                r_max: 110.0,
                sigma: 2.0,
                ..base
            }),
            other => Err(Error::ConfigError(format!("unknown preset {other:?}"))),
        }
    }

    /// Sets one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "sigma" => self.sigma = parse(key, value)?,
            "r_max" => self.r_max = parse(key, value)?,
            "grid_len" => self.grid_len = parse(key, value)?,
            "feature_len" => self.feature_len = parse(key, value)?,
            "binarize_threshold" => self.binarize_threshold = parse(key, value)?,
            "svm_c" => self.svm_c = parse(key, value)?,
            "folds" => self.folds = parse(key, value)?,
            "runs" => self.runs = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "threads" => {
                self.threads = if value == "auto" {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            other => return Err(Error::ConfigError(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Overlays every key present in `text` onto `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::ConfigError(format!("line {}: expected key=value", n + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "sigma={}", self.sigma);
        let _ = writeln!(s, "r_max={}", self.r_max);
        let _ = writeln!(s, "grid_len={}", self.grid_len);
        let _ = writeln!(s, "feature_len={}", self.feature_len);
        let _ = writeln!(s, "binarize_threshold={}", self.binarize_threshold);
        let _ = writeln!(s, "svm_c={}", self.svm_c);
        let _ = writeln!(s, "folds={}", self.folds);
        let _ = writeln!(s, "runs={}", self.runs);
        let _ = writeln!(s, "seed={}", self.seed);
        match self.threads {
            Some(t) => {
                let _ = writeln!(s, "threads={t}");
            }
            None => s.push_str("threads=auto\n"),
        }
        s
    }

    pub fn signature_params(&self) -> SignatureParams {
        SignatureParams {
            sigma: self.sigma,
            r_max: self.r_max,
            grid_len: self.grid_len,
            feature_len: self.feature_len,
            ..SignatureParams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.signature_params().validate()?;
        if !(self.svm_c > 0.0) || !self.svm_c.is_finite() {
            return Err(Error::ConfigError(format!(
                "svm_c must be positive, got {}",
                self.svm_c
            )));
        }
        if self.folds < 2 || self.runs < 1 {
            return Err(Error::ConfigError("need folds >= 2 and runs >= 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::ConfigError(
                "threads must be positive or auto".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_is_bit_exact() {
        let c = RunConfig {
            sigma: 0.1 + 0.2,
            r_max: 110.0,
            svm_c: 1.0 / 3.0,
            threads: Some(3),
            seed: u64::MAX,
            ..RunConfig::default()
        };
        let back = RunConfig::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.sigma.to_bits(), c.sigma.to_bits());
        assert_eq!(
            RunConfig::from_text(&RunConfig::default().to_text()).unwrap(),
            RunConfig::default()
        );
    }

    #[test]
    fn unknown_keys_and_bad_values() {
        assert!(matches!(
            RunConfig::from_text("colour=blue"),
            Err(Error::ConfigError(_))
        ));
        assert!(RunConfig::from_text("folds=ten").is_err());
        assert!(RunConfig::from_text("folds").is_err());
        let c = RunConfig::from_text("# comment\n\n runs = 3 \n").unwrap();
        assert_eq!(c.runs, 3);
    }

    #[test]
    fn presets() {
        let w = RunConfig::preset("weizmann").unwrap();
        assert_eq!((w.r_max, w.sigma), (110.0, 2.0));
        let m = RunConfig::preset("mocap").unwrap();
        assert_eq!((m.r_max, m.sigma), (10.0, 1.0));
        assert!(RunConfig::preset("kth").is_err());
    }

    #[test]
    fn keys_match_serialized_fields() {
        let text = RunConfig::default().to_text();
        let keys: Vec<&str> = text.lines().map(|l| l.split('=').next().unwrap()).collect();
        assert_eq!(keys, KEYS);
    }
}
