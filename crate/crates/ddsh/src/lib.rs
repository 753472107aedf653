//! Deep discrete supervised hashing.
//!
//! Learns compact binary codes under pairwise label supervision by
//! alternating two procedures that both read the supervision directly:
//!
//! - **Discrete coding** ([`coder`]): per-bit binary quadratic programs
//!   over a sampled subset of points rebuild their codes exactly, with no
//!   continuous relaxation.
//! - **Feature learning** ([`featnet`]): a feed-forward network with a
//!   tanh-relaxed hash head fits the remaining points to the discrete
//!   codes by minibatch gradient descent.
//!
//! [`trainer`] orchestrates the alternation, [`retrieval`] serves
//! Hamming-space queries over bit-packed codes, and [`metrics`] scores
//! them (MAP, top-k precision, precision-recall, lookup success rate).
//! [`dataset`] and [`supervision`] provide inputs: feature/label files or
//! synthetic blobs, and the lazy pairwise similarity oracle.

pub mod coder;
pub mod dataset;
pub mod featnet;
pub mod metrics;
pub mod retrieval;
pub mod supervision;
pub mod trainer;

pub use coder::{CodeMatrix, CoderOptions};
pub use dataset::{Dataset, FeatureMatrix, LabelSet};
pub use featnet::{FeatureNet, OptimizerState};
pub use metrics::{EvalKnobs, RelevanceJudge, RetrievalReport};
pub use retrieval::PackedCodes;
pub use supervision::{SampleSplit, SimilarityOracle, WeightPolicy};
pub use trainer::{TrainConfig, TrainedModel, Variant};
