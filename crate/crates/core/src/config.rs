//! Flat `key=value` configuration files and the settings-resolution chain:
//! built-in defaults ← config file ← command-line flags, with the
//! `QSER_SEED` environment variable as a seed fallback when neither a flag
//! nor the config file names one.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::feature::FeatureConfig;
use crate::model::ModelSpec;
use crate::train::TrainConfig;

/// Architecture knobs the config file may override; the class count always
/// comes from the manifest's label table.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOverrides {
    pub conv1_kernels: usize,
    pub conv2_kernels: usize,
    pub kernel_size: usize,
    pub pool_window: usize,
}

impl Default for ModelOverrides {
    fn default() -> Self {
        let spec = ModelSpec::default();
        Self {
            conv1_kernels: spec.conv1_kernels,
            conv2_kernels: spec.conv2_kernels,
            kernel_size: spec.kernel_size,
            pool_window: spec.pool_window,
        }
    }
}

impl ModelOverrides {
    pub fn to_spec(&self, num_classes: usize) -> ModelSpec {
        ModelSpec {
            conv1_kernels: self.conv1_kernels,
            conv2_kernels: self.conv2_kernels,
            kernel_size: self.kernel_size,
            pool_window: self.pool_window,
            ..ModelSpec::with_classes(num_classes)
        }
    }
}

/// Every effective setting of a run. Printed at startup so any run can be
/// reproduced from its log.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResolvedConfig {
    pub feature: FeatureConfig,
    pub model: ModelOverrides,
    pub train: TrainConfig,
}

impl ResolvedConfig {
    /// Applies a parsed config file. Unknown keys fail fast.
    pub fn apply_file(&mut self, entries: &BTreeMap<String, String>) -> Result<()> {
        for (key, value) in entries {
            let parse_usize = || -> Result<usize> {
                value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad integer for {key}: '{value}'")))
            };
            let parse_f64 = || -> Result<f64> {
                value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad number for {key}: '{value}'")))
            };
            let parse_u64 = || -> Result<u64> {
                value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad integer for {key}: '{value}'")))
            };
            match key.as_str() {
                "feature.fft_size" => self.feature.fft_size = parse_usize()?,
                "feature.hop" => self.feature.hop = parse_usize()?,
                "feature.n_mels" => self.feature.n_mels = parse_usize()?,
                "feature.floor_db" => self.feature.floor_db = parse_f64()?,
                "model.conv1_kernels" => self.model.conv1_kernels = parse_usize()?,
                "model.conv2_kernels" => self.model.conv2_kernels = parse_usize()?,
                "model.kernel_size" => self.model.kernel_size = parse_usize()?,
                "model.pool_window" => self.model.pool_window = parse_usize()?,
                "train.epochs" => self.train.epochs = parse_usize()?,
                "train.batch_size" => self.train.batch_size = parse_usize()?,
                "train.learning_rate" => self.train.learning_rate = parse_f64()?,
                "train.beta1" => self.train.beta1 = parse_f64()?,
                "train.beta2" => self.train.beta2 = parse_f64()?,
                "train.epsilon" => self.train.epsilon = parse_f64()?,
                "train.dropout_p" => self.train.dropout_p = parse_f64()?,
                "train.seed" => self.train.seed = parse_u64()?,
                "train.validation_steps" => self.train.validation_steps = parse_usize()?,
                other => {
                    return Err(Error::Config(format!("unknown config key '{other}'")));
                }
            }
        }
        Ok(())
    }

    /// One line naming every effective hyperparameter.
    pub fn echo_line(&self) -> String {
        format!(
            "config: feature.fft_size={} feature.hop={} feature.n_mels={} feature.floor_db={} \
             model.conv1_kernels={} model.conv2_kernels={} model.kernel_size={} model.pool_window={} \
             train.epochs={} train.batch_size={} train.learning_rate={} train.beta1={} train.beta2={} \
             train.epsilon={} train.dropout_p={} train.validation_steps={} train.seed={}",
            self.feature.fft_size,
            self.feature.hop,
            self.feature.n_mels,
            self.feature.floor_db,
            self.model.conv1_kernels,
            self.model.conv2_kernels,
            self.model.kernel_size,
            self.model.pool_window,
            self.train.epochs,
            self.train.batch_size,
            self.train.learning_rate,
            self.train.beta1,
            self.train.beta2,
            self.train.epsilon,
            self.train.dropout_p,
            self.train.validation_steps,
            self.train.seed,
        )
    }
}

/// Parses a `key=value` file; `#` lines and blanks are ignored.
pub fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected key=value, got '{line}'", lineno + 1))
        })?;
        out.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(out)
}

/// Seed resolution: flag beats config file beats `QSER_SEED` beats the
/// built-in default. A set-but-unparsable environment value is an error
/// rather than a silent fallback.
pub fn resolve_seed(flag: Option<u64>, config_seed: Option<u64>, default: u64) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Some(s) = config_seed {
        return Ok(s);
    }
    match std::env::var("QSER_SEED") {
        Ok(raw) => raw
            .parse()
            .map_err(|_| Error::Config(format!("QSER_SEED is not an integer: '{raw}'"))),
        Err(_) => Ok(default),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_blanks_and_values() {
        let text = "# a comment\n\nfeature.fft_size = 512\ntrain.epochs=3\n";
        let map = parse_config_text(text).unwrap();
        assert_eq!(map["feature.fft_size"], "512");
        assert_eq!(map["train.epochs"], "3");
        assert_eq!(map.len(), 2);
    }

    #[test]
    fn rejects_malformed_lines_and_unknown_keys() {
        assert!(parse_config_text("no equals sign").is_err());
        let mut cfg = ResolvedConfig::default();
        let map = parse_config_text("bogus.key=1").unwrap();
        assert!(matches!(cfg.apply_file(&map), Err(Error::Config(_))));
        let map = parse_config_text("train.epochs=abc").unwrap();
        assert!(matches!(cfg.apply_file(&map), Err(Error::Config(_))));
    }

    #[test]
    fn file_overrides_defaults() {
        let mut cfg = ResolvedConfig::default();
        let map =
            parse_config_text("train.epochs=7\nfeature.n_mels=64\nmodel.conv1_kernels=8").unwrap();
        cfg.apply_file(&map).unwrap();
        assert_eq!(cfg.train.epochs, 7);
        assert_eq!(cfg.feature.n_mels, 64);
        assert_eq!(cfg.model.conv1_kernels, 8);
        // untouched values keep their defaults
        assert_eq!(cfg.train.batch_size, 32);
    }

    #[test]
    fn echo_line_mentions_every_hyperparameter() {
        let line = ResolvedConfig::default().echo_line();
        for key in [
            "feature.fft_size",
            "feature.hop",
            "feature.n_mels",
            "feature.floor_db",
            "model.conv1_kernels",
            "model.conv2_kernels",
            "model.kernel_size",
            "model.pool_window",
            "train.epochs",
            "train.batch_size",
            "train.learning_rate",
            "train.beta1",
            "train.beta2",
            "train.epsilon",
            "train.dropout_p",
            "train.validation_steps",
            "train.seed",
        ] {
            assert!(line.contains(key), "echo line missing {key}: {line}");
        }
    }

    #[test]
    fn seed_precedence() {
        // flag > config; env interactions are exercised in the CLI tests
        assert_eq!(resolve_seed(Some(1), Some(2), 3).unwrap(), 1);
        assert_eq!(resolve_seed(None, Some(2), 3).unwrap(), 2);
    }
}
