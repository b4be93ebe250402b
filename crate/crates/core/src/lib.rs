//! Ranking-based word embedding toolkit.
//!
//! The pipeline runs corpus -> vocabulary -> windowed co-occurrence matrix
//! -> two-stage stochastic training of word/context vectors under a
//! weighted concave ranking objective -> similarity/analogy evaluation.
//!
//! Modules map onto the pipeline stages:
//! - [`tokenize`], [`vocab`], [`cooccur`]: corpus ingestion and the sparse
//!   co-occurrence matrix with its durable formats.
//! - [`model`], [`ranking`]: embedding state plus the pure math kernels
//!   (ranking losses, surrogate losses, weights, rank bounds).
//! - [`train`]: the two-stage optimizer (SGD over sampled context pairs,
//!   exact auxiliary-variable updates) and its stratified parallel form.
//! - [`eval`]: Spearman word-similarity, 3CosAdd/3CosMul analogy accuracy,
//!   nearest neighbors.

pub mod binio;
pub mod cooccur;
pub mod error;
pub mod eval;
pub mod matmul;
pub mod model;
pub mod ranking;
pub mod tokenize;
pub mod train;
pub mod vocab;

pub use cooccur::{build_cooccurrence, CooccurConfig, CooccurrenceMatrix, CooccurrenceRecord};
pub use error::{Error, Result};
pub use eval::{AnalogyDataset, EvalReport, SimilarityDataset, VectorMode};
pub use model::EmbeddingModel;
pub use ranking::{LossKind, LossSpec, RhoKind, RhoSpec, WeightConfig};
pub use tokenize::{TokenEvent, Tokenizer};
pub use train::{AuxVariables, TrainConfig, TrainState};
pub use vocab::{build_vocabulary, Vocabulary};
