//! Run configuration: a flat TOML file mirroring the training knobs plus
//! file paths and evaluation settings. Command-line flags override file
//! values; unknown keys in the file are rejected.

use std::path::{Path, PathBuf};

use ddsh::featnet::GradReduction;
use ddsh::supervision::WeightPolicy;
use ddsh::trainer::{TargetScale, TrainConfig, Variant};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub features: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub codes: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub bits: Option<usize>,
    pub omega: Option<usize>,
    pub tout: Option<usize>,
    pub tin: Option<usize>,
    pub batch: Option<usize>,
    pub lr: Option<f64>,
    pub weight_decay: Option<f64>,
    pub seed: Option<u64>,
    pub target_scale: Option<TargetScale>,
    pub variant: Option<Variant>,
    pub hidden: Option<Vec<usize>>,
    pub weight_policy: Option<WeightPolicy>,
    pub grad_reduction: Option<GradReduction>,
    pub radius: Option<Vec<u32>>,
    pub k: Option<Vec<usize>>,
    pub map_at: Option<usize>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    /// Overlay another configuration; set fields in `over` win.
    pub fn merged(mut self, over: RunConfig) -> Self {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if over.$field.is_some() { self.$field = over.$field; })*
            };
        }
        take!(
            features, labels, model, codes, out, bits, omega, tout, tin, batch, lr,
            weight_decay, seed, target_scale, variant, hidden, weight_policy,
            grad_reduction, radius, k, map_at
        );
        self
    }

    /// Training knobs with defaults filled in for anything unset.
    pub fn train_config(&self) -> TrainConfig {
        let d = TrainConfig::default();
        TrainConfig {
            bits: self.bits.unwrap_or(d.bits),
            omega_size: self.omega.unwrap_or(d.omega_size),
            outer_iters: self.tout.unwrap_or(d.outer_iters),
            inner_epochs: self.tin.unwrap_or(d.inner_epochs),
            batch_size: self.batch.unwrap_or(d.batch_size),
            learning_rate: self.lr.unwrap_or(d.learning_rate),
            weight_decay: self.weight_decay.unwrap_or(d.weight_decay),
            seed: self.seed.unwrap_or(d.seed),
            target_scale: self.target_scale.unwrap_or(d.target_scale),
            variant: self.variant.unwrap_or(d.variant),
            hidden_layers: self.hidden.clone().unwrap_or(d.hidden_layers),
            weight_policy: self.weight_policy.unwrap_or(d.weight_policy),
            grad_reduction: self.grad_reduction.unwrap_or(d.grad_reduction),
        }
    }

    pub fn require(&self, key: &str) -> Result<&Path, CliError> {
        let value = match key {
            "features" => &self.features,
            "labels" => &self.labels,
            "model" => &self.model,
            "codes" => &self.codes,
            "out" => &self.out,
            _ => unreachable!("unknown required key {key}"),
        };
        value
            .as_deref()
            .ok_or_else(|| CliError::Config(format!("missing required config key: {key}")))
    }
}
