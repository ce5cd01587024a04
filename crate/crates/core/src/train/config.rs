//! Training hyperparameters and their `key = value` file form.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const SEED_ENV: &str = "CUBE3D_SEED";

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub plateau_patience_epochs: usize,
    pub plateau_factor: f64,
    /// Minimum absolute loss decrease that counts as improvement.
    pub plateau_threshold: f64,
    pub max_epochs: usize,
    pub seed: u64,
    pub dropout_rate: f64,
    /// Standard deviation of the normal weight initialization.
    pub init_std: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            learning_rate: 1e-4,
            momentum: 0.09,
            plateau_patience_epochs: 3,
            plateau_factor: 0.1,
            plateau_threshold: 1e-4,
            max_epochs: 30,
            seed: 0,
            dropout_rate: 0.6,
            init_std: 0.01,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.batch_size < 1 {
            return fail("batch_size must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return fail(format!("momentum must be in [0, 1), got {}", self.momentum));
        }
        if !(self.plateau_factor > 0.0 && self.plateau_factor < 1.0) {
            return fail(format!("plateau_factor must be in (0, 1), got {}", self.plateau_factor));
        }
        if self.plateau_threshold.is_nan() || self.plateau_threshold < 0.0 {
            return fail(format!("plateau_threshold must be non-negative, got {}", self.plateau_threshold));
        }
        if self.plateau_patience_epochs < 1 {
            return fail("plateau_patience_epochs must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return fail(format!("dropout_rate must be in [0, 1), got {}", self.dropout_rate));
        }
        if !(self.init_std > 0.0 && self.init_std.is_finite()) {
            return fail(format!("init_std must be positive, got {}", self.init_std));
        }
        Ok(())
    }

    /// Sets one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("cannot parse `{value}` for {key}")))
        }
        match key {
            "batch_size" => self.batch_size = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "momentum" => self.momentum = parse(key, value)?,
            "plateau_patience_epochs" => self.plateau_patience_epochs = parse(key, value)?,
            "plateau_factor" => self.plateau_factor = parse(key, value)?,
            "plateau_threshold" => self.plateau_threshold = parse(key, value)?,
            "max_epochs" => self.max_epochs = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "dropout_rate" => self.dropout_rate = parse(key, value)?,
            "init_std" => self.init_std = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, got `{raw}`", i + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(&std::fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    /// Overrides the seed from `CUBE3D_SEED` when set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.set("seed", v.trim())?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "batch_size = {}", self.batch_size);
        let _ = writeln!(s, "learning_rate = {}", self.learning_rate);
        let _ = writeln!(s, "momentum = {}", self.momentum);
        let _ = writeln!(s, "plateau_patience_epochs = {}", self.plateau_patience_epochs);
        let _ = writeln!(s, "plateau_factor = {}", self.plateau_factor);
        let _ = writeln!(s, "plateau_threshold = {}", self.plateau_threshold);
        let _ = writeln!(s, "max_epochs = {}", self.max_epochs);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "dropout_rate = {}", self.dropout_rate);
        let _ = writeln!(s, "init_std = {}", self.init_std);
        s
    }
}
