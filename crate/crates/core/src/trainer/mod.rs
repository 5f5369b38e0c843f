//! Dual-encoder retrieval model trained with a bidirectional max-margin loss.

mod checkpoint;
mod encoder;
mod featurizer;
mod loss;
mod train;

pub use checkpoint::{Checkpoint, CheckpointHeader, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use encoder::{similarity, DualEncoder, Projection};
pub use featurizer::{Featurizer, FeaturizerConfig};
pub use loss::{contrastive_loss, BatchItem, Direction, LossOutput, Mining, Selection};
pub use train::{
    corpus_scores, encode_corpus, evaluate_model, score_matrix, train, Embeddings, EpochLog, TrainConfig, TrainedModel,
};
