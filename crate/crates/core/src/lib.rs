//! Feature-space multimodal data augmentation for text-video retrieval.
//!
//! The crate covers the whole pipeline on pre-extracted features:
//!
//! - [`corpus`]: annotated video/caption pairs, a synthetic generator and
//!   the on-disk formats;
//! - [`semantics`]: caption → verb/noun class extraction;
//! - [`selection`]: same-class candidate lookup used to pick mixing partners;
//! - [`augment`]: stochastic convex mixing of video and caption features,
//!   plus noise-injection and synonym-replacement baselines;
//! - [`trainer`]: a linear dual encoder trained with a max-margin loss and
//!   relevance-aware mining;
//! - [`metrics`]: semantic relevance, mAP, nDCG, recall@K and Rsum.

pub mod augment;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod rng;
pub mod selection;
pub mod semantics;
pub mod trainer;

pub use augment::{AugmentConfig, AugmentedPair, Augmenter, Baseline, LambdaMode, MixRecord, Target};
pub use corpus::{Annotation, ClassSet, Corpus, GenConfig, PairedSample, SemanticClassTable, Split};
pub use error::{Error, Result};
pub use metrics::{EvalConfig, MetricReport};
pub use selection::{CandidateIndex, Criterion};
pub use semantics::Lexicon;
pub use trainer::{DualEncoder, Featurizer, Mining, TrainConfig};
