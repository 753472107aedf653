//! Training orchestration: outer column-sampling iterations alternating
//! discrete code sweeps with feature-network epochs, plus the
//! frozen-feature variant and the random-projection baseline.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coder::{optimize_codes, sampled_loss, CodeMatrix, CoderError, CoderOptions};
use crate::dataset::Dataset;
use crate::featnet::{
    encode_all, train_epoch, DenseLayer, FeatnetError, FeatureNet, GradReduction, OptimizerState,
};
use crate::supervision::{SampleSplit, SimilarityOracle, SupervisionError, WeightPolicy};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Coder(#[from] CoderError),
    #[error(transparent)]
    Featnet(#[from] FeatnetError),
    #[error(transparent)]
    Supervision(#[from] SupervisionError),
}

/// Which training procedure to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[default]
    Ddsh,
    /// Hidden layers frozen after initialization; only the output
    /// projection learns.
    Ddsh0,
    /// Random projection, no training at all.
    Lsh,
}

/// Inner-product target scale: the similarity sign is multiplied either
/// by 1 or by the code length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TargetScale {
    #[serde(rename = "1")]
    Unit,
    #[default]
    #[serde(rename = "c")]
    CodeLength,
}

impl TargetScale {
    pub fn resolve(&self, c: usize) -> f64 {
        match self {
            TargetScale::Unit => 1.0,
            TargetScale::CodeLength => c as f64,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Code length in bits.
    pub bits: usize,
    pub omega_size: usize,
    pub outer_iters: usize,
    pub inner_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub target_scale: TargetScale,
    pub variant: Variant,
    /// Hidden layer widths between input and code output.
    pub hidden_layers: Vec<usize>,
    pub weight_policy: WeightPolicy,
    pub grad_reduction: GradReduction,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            bits: 16,
            omega_size: crate::supervision::DEFAULT_OMEGA_SIZE,
            outer_iters: 3,
            inner_epochs: 50,
            batch_size: 128,
            learning_rate: 1e-2,
            weight_decay: 5e-4,
            seed: 0,
            target_scale: TargetScale::default(),
            variant: Variant::default(),
            hidden_layers: vec![64, 64],
            weight_policy: WeightPolicy::default(),
            grad_reduction: GradReduction::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, n: usize) -> Result<(), TrainError> {
        if self.bits == 0 {
            return Err(TrainError::InvalidConfig("bits must be >= 1".into()));
        }
        if self.outer_iters == 0 || self.inner_epochs == 0 {
            return Err(TrainError::InvalidConfig(
                "iteration counts must be >= 1".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(TrainError::InvalidConfig("batch size must be >= 1".into()));
        }
        if self.omega_size == 0 || self.omega_size >= n {
            return Err(TrainError::InvalidConfig(format!(
                "omega size {} must satisfy 1 <= omega < n = {n}",
                self.omega_size
            )));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(TrainError::InvalidConfig(
                "learning rate must be finite and non-negative".into(),
            ));
        }
        if self.hidden_layers.contains(&0) {
            return Err(TrainError::InvalidConfig(
                "hidden layer sizes must be >= 1".into(),
            ));
        }
        Ok(())
    }

    fn layer_sizes(&self, d: usize) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden_layers.len() + 2);
        sizes.push(d);
        sizes.extend_from_slice(&self.hidden_layers);
        sizes.push(self.bits);
        sizes
    }
}

/// Which phase produced a loss record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Coder,
    Feature,
}

/// Sampled loss measured after one optimization phase.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LossRecord {
    pub outer_iter: usize,
    pub epoch: usize,
    pub phase: Phase,
    pub loss: f64,
}

/// Everything a finished run produces.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub net: FeatureNet,
    pub codes: CodeMatrix,
    pub config: TrainConfig,
    pub trace: Vec<LossRecord>,
}

/// Ordered loss records, one per coder sweep and one per feature epoch.
pub fn loss_trace(model: &TrainedModel) -> &[LossRecord] {
    &model.trace
}

/// Run the configured variant.
pub fn train(
    dataset: &Dataset,
    sim: &SimilarityOracle,
    cfg: &TrainConfig,
) -> Result<TrainedModel, TrainError> {
    match cfg.variant {
        Variant::Ddsh => train_alternating(dataset, sim, cfg, false),
        Variant::Ddsh0 => train_alternating(dataset, sim, cfg, true),
        Variant::Lsh => train_lsh(dataset, cfg),
    }
}

/// Frozen-feature variant: identical to the full procedure except that
/// every layer below the output projection keeps its initial parameters.
pub fn train_ddsh0(
    dataset: &Dataset,
    sim: &SimilarityOracle,
    cfg: &TrainConfig,
) -> Result<TrainedModel, TrainError> {
    train_alternating(dataset, sim, cfg, true)
}

fn train_alternating(
    dataset: &Dataset,
    sim: &SimilarityOracle,
    cfg: &TrainConfig,
    freeze_hidden: bool,
) -> Result<TrainedModel, TrainError> {
    let n = dataset.n();
    cfg.validate(n)?;
    if sim.n() != n {
        return Err(TrainError::InvalidConfig(format!(
            "similarity oracle covers {} points, dataset has {n}",
            sim.n()
        )));
    }
    let d = dataset.features.d();
    let c = cfg.bits;
    let target = cfg.target_scale.resolve(c);

    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut net = FeatureNet::glorot(&cfg.layer_sizes(d), &mut rng)?;
    let frozen_layers = if freeze_hidden {
        net.num_layers() - 1
    } else {
        0
    };
    let mut codes = CodeMatrix::random(n, c, &mut rng);
    let opt = OptimizerState {
        learning_rate: cfg.learning_rate,
        weight_decay: cfg.weight_decay,
        batch_size: cfg.batch_size,
        seed: cfg.seed,
        grad_reduction: cfg.grad_reduction,
    };

    let mut trace = Vec::with_capacity(cfg.outer_iters * cfg.inner_epochs * 2);
    let mut last_split: Option<SampleSplit> = None;
    for outer in 1..=cfg.outer_iters {
        let split = SampleSplit::with_rng(n, cfg.omega_size, &mut rng)?;
        for epoch in 1..=cfg.inner_epochs {
            let coder_opts = CoderOptions {
                seed: rng.random(),
                ..CoderOptions::new(target)
            };
            optimize_codes(&mut codes, sim, &split, &coder_opts)?;
            trace.push(LossRecord {
                outer_iter: outer,
                epoch,
                phase: Phase::Coder,
                loss: sampled_loss(&codes, sim, &split, target, None)?,
            });

            train_epoch(
                &mut net,
                &mut codes,
                &split,
                &dataset.features,
                sim,
                &opt,
                target,
                frozen_layers,
                &mut rng,
            )?;
            trace.push(LossRecord {
                outer_iter: outer,
                epoch,
                phase: Phase::Feature,
                loss: sampled_loss(&codes, sim, &split, target, None)?,
            });
        }
        last_split = Some(split);
    }

    // The complement rows must match the final parameters exactly, not the
    // parameters as of each row's last minibatch.
    if let Some(split) = &last_split {
        for &j in split.gamma() {
            let row = net.encode(dataset.features.row_f64(j).view())?;
            codes.set_row(j, &row);
        }
    }

    Ok(TrainedModel {
        net,
        codes,
        config: cfg.clone(),
        trace,
    })
}

/// Random-projection baseline: a single linear layer with standard normal
/// weights and zero bias; codes are sign(Wx) with no training.
pub fn train_lsh(dataset: &Dataset, cfg: &TrainConfig) -> Result<TrainedModel, TrainError> {
    if cfg.bits == 0 {
        return Err(TrainError::InvalidConfig("bits must be >= 1".into()));
    }
    let d = dataset.features.d();
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let weights = Array2::from_shape_fn((cfg.bits, d), |_| rng.sample::<f64, _>(StandardNormal));
    let net = FeatureNet::from_layers(vec![DenseLayer {
        weights,
        bias: ndarray::Array1::zeros(cfg.bits),
    }])?;
    let codes = encode_all(&net, &dataset.features)?;
    Ok(TrainedModel {
        net,
        codes,
        config: cfg.clone(),
        trace: Vec::new(),
    })
}
