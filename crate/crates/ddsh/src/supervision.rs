//! Pairwise similarity supervision and column sampling.
//!
//! The similarity matrix S is never materialized: entries are computed
//! lazily from label sets, since the optimizer only ever reads the sampled
//! columns.

use rand::seq::index;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::dataset::LabelSet;

#[derive(Debug, Error)]
pub enum SupervisionError {
    #[error("index {index} out of range for {n} points")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("omega size {omega_size} must satisfy 1 <= omega_size < n = {n}")]
    BadOmegaSize { omega_size: usize, n: usize },
    #[error("index lists do not partition 0..n: {0}")]
    NotAPartition(String),
}

/// How pair weights are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightPolicy {
    /// Every pair weighs 1.
    #[default]
    Uniform,
    /// Pairs touching a multi-label point weigh 1/|union of labels|.
    #[serde(rename = "reduce")]
    ReduceMultiLabel,
}

/// Lazy provider of S_ij in {-1,+1} and the per-pair weight.
#[derive(Debug, Clone)]
pub struct SimilarityOracle {
    labels: LabelSet,
    policy: WeightPolicy,
}

impl SimilarityOracle {
    pub fn new(labels: LabelSet, policy: WeightPolicy) -> Self {
        Self { labels, policy }
    }

    pub fn n(&self) -> usize {
        self.labels.n()
    }

    pub fn policy(&self) -> WeightPolicy {
        self.policy
    }

    /// +1 iff the points share at least one label, -1 otherwise.
    pub fn similarity(&self, i: usize, j: usize) -> Result<f64, SupervisionError> {
        self.check(i)?;
        self.check(j)?;
        Ok(self.sim_unchecked(i, j))
    }

    /// Pair weight in (0, 1].
    pub fn weight(&self, i: usize, j: usize) -> Result<f64, SupervisionError> {
        self.check(i)?;
        self.check(j)?;
        Ok(self.weight_unchecked(i, j))
    }

    /// (similarity, weight) for hot loops; indices must be in range.
    pub(crate) fn pair(&self, i: usize, j: usize) -> (f64, f64) {
        (self.sim_unchecked(i, j), self.weight_unchecked(i, j))
    }

    fn sim_unchecked(&self, i: usize, j: usize) -> f64 {
        if i == j || self.labels.shares_label(i, j) {
            1.0
        } else {
            -1.0
        }
    }

    fn weight_unchecked(&self, i: usize, j: usize) -> f64 {
        match self.policy {
            WeightPolicy::Uniform => 1.0,
            WeightPolicy::ReduceMultiLabel => {
                if self.labels.is_multi(i) || self.labels.is_multi(j) {
                    1.0 / self.labels.union_size(i, j) as f64
                } else {
                    1.0
                }
            }
        }
    }

    fn check(&self, i: usize) -> Result<(), SupervisionError> {
        if i >= self.labels.n() {
            return Err(SupervisionError::IndexOutOfRange {
                index: i,
                n: self.labels.n(),
            });
        }
        Ok(())
    }
}

/// Partition of {0..n-1} into the sampled set omega and its complement
/// gamma. Both lists are kept sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSplit {
    omega: Vec<usize>,
    gamma: Vec<usize>,
    n: usize,
}

impl SampleSplit {
    pub fn omega(&self) -> &[usize] {
        &self.omega
    }

    pub fn gamma(&self) -> &[usize] {
        &self.gamma
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Build a split from explicit index lists. The lists must be disjoint
    /// and together cover 0..n exactly; omega must be non-empty. Unlike
    /// sampling, an empty gamma is permitted.
    pub fn from_parts(omega: Vec<usize>, gamma: Vec<usize>) -> Result<Self, SupervisionError> {
        let n = omega.len() + gamma.len();
        if omega.is_empty() {
            return Err(SupervisionError::NotAPartition("omega is empty".into()));
        }
        let mut seen = vec![false; n];
        for &i in omega.iter().chain(&gamma) {
            if i >= n {
                return Err(SupervisionError::NotAPartition(format!(
                    "index {i} out of range for n = {n}"
                )));
            }
            if seen[i] {
                return Err(SupervisionError::NotAPartition(format!(
                    "index {i} appears twice"
                )));
            }
            seen[i] = true;
        }
        let mut omega = omega;
        let mut gamma = gamma;
        omega.sort_unstable();
        gamma.sort_unstable();
        if gamma.len() < omega.len() {
            log::warn!(
                "sampled set ({}) larger than its complement ({})",
                omega.len(),
                gamma.len()
            );
        }
        Ok(Self { omega, gamma, n })
    }

    /// Sample omega without replacement using the caller's RNG.
    pub fn with_rng<R: Rng>(
        n: usize,
        omega_size: usize,
        rng: &mut R,
    ) -> Result<Self, SupervisionError> {
        if omega_size == 0 || omega_size >= n {
            return Err(SupervisionError::BadOmegaSize { omega_size, n });
        }
        let mut omega: Vec<usize> = index::sample(rng, n, omega_size).into_iter().collect();
        omega.sort_unstable();
        let mut in_omega = vec![false; n];
        for &i in &omega {
            in_omega[i] = true;
        }
        let gamma: Vec<usize> = (0..n).filter(|&i| !in_omega[i]).collect();
        if gamma.len() < omega.len() {
            log::warn!(
                "sampled set ({}) larger than its complement ({}); the \
                 column-sampling approximation expects the opposite",
                omega.len(),
                gamma.len()
            );
        }
        Ok(Self { omega, gamma, n })
    }
}

/// Uniform random split, deterministic in the seed.
pub fn sample_split(n: usize, omega_size: usize, seed: u64) -> Result<SampleSplit, SupervisionError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    SampleSplit::with_rng(n, omega_size, &mut rng)
}

/// Default sampled-column count used when nothing else is configured.
pub const DEFAULT_OMEGA_SIZE: usize = 100;
