//! Run configuration: an optional JSON file with flat keys, overridden by
//! command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use psc_core::dataset::BuildConfig;
use psc_core::nn::{AdadeltaConfig, ModelConfig};
use psc_core::train::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable consulted for the seed when neither a flag nor the
/// config file sets one.
pub const SEED_ENV: &str = "PSC_SEED";

/// Every tunable, all optional. Keys mirror the fields of the core config
/// types; unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    // dataset
    pub max_len: Option<usize>,
    pub augment_reverse: Option<bool>,
    pub mutation_frac_lo: Option<f64>,
    pub mutation_frac_hi: Option<f64>,
    pub train_ratio: Option<f64>,
    // model
    pub embed_dim: Option<usize>,
    pub conv1_filters: Option<usize>,
    pub conv2_filters: Option<usize>,
    pub pool1_window: Option<usize>,
    pub conv3_filters: Option<usize>,
    pub pool2_window: Option<usize>,
    // training
    pub batch_size: Option<usize>,
    pub epochs: Option<usize>,
    pub threshold: Option<f64>,
    pub lr: Option<f64>,
    pub rho: Option<f64>,
    pub epsilon: Option<f64>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($field:ident),* $(,)?) => {
        $( if $src.$field.is_some() { $dst.$field = $src.$field; } )*
    };
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Input {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::Input {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Loads `file` (if any), then applies every field set in `flags`.
    pub fn resolve(file: Option<&PathBuf>, flags: &RunConfig) -> Result<Self, CliError> {
        let mut cfg = match file {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        cfg.apply(flags);
        if cfg.seed.is_none() {
            if let Ok(raw) = std::env::var(SEED_ENV) {
                let seed = raw
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("{SEED_ENV}={raw:?} is not an unsigned integer")))?;
                cfg.seed = Some(seed);
            }
        }
        Ok(cfg)
    }

    fn apply(&mut self, o: &RunConfig) {
        overlay!(self, o;
            seed, jobs, max_len, augment_reverse, mutation_frac_lo, mutation_frac_hi,
            train_ratio, embed_dim, conv1_filters, conv2_filters, pool1_window,
            conv3_filters, pool2_window, batch_size, epochs, threshold, lr, rho, epsilon,
        );
    }

    pub fn build_config(&self) -> BuildConfig {
        let d = BuildConfig::default();
        BuildConfig {
            max_len: self.max_len.unwrap_or(d.max_len),
            augment_reverse: self.augment_reverse.unwrap_or(d.augment_reverse),
            mutation_frac_lo: self.mutation_frac_lo.unwrap_or(d.mutation_frac_lo),
            mutation_frac_hi: self.mutation_frac_hi.unwrap_or(d.mutation_frac_hi),
            train_ratio: self.train_ratio.unwrap_or(d.train_ratio),
            seed: self.seed.unwrap_or(d.seed),
        }
    }

    /// Model widths; vocabulary size and input length come from the data.
    pub fn model_config(&self, vocab_size: usize, input_len: usize) -> ModelConfig {
        let d = ModelConfig::default();
        ModelConfig {
            vocab_size,
            input_len,
            embed_dim: self.embed_dim.unwrap_or(d.embed_dim),
            conv1_filters: self.conv1_filters.unwrap_or(d.conv1_filters),
            conv2_filters: self.conv2_filters.unwrap_or(d.conv2_filters),
            pool1_window: self.pool1_window.unwrap_or(d.pool1_window),
            conv3_filters: self.conv3_filters.unwrap_or(d.conv3_filters),
            pool2_window: self.pool2_window.unwrap_or(d.pool2_window),
        }
    }

    pub fn train_config(&self, checkpoint: PathBuf) -> TrainConfig {
        let d = TrainConfig::default();
        let o = AdadeltaConfig::default();
        TrainConfig {
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            epochs: self.epochs.unwrap_or(d.epochs),
            seed: self.seed.unwrap_or(d.seed),
            threshold: self.threshold.unwrap_or(d.threshold),
            optimizer: AdadeltaConfig {
                lr: self.lr.unwrap_or(o.lr),
                rho: self.rho.unwrap_or(o.rho),
                epsilon: self.epsilon.unwrap_or(o.epsilon),
            },
            checkpoint_path: Some(checkpoint),
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold.unwrap_or(TrainConfig::default().threshold)
    }
}
