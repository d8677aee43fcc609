//! Zero-shot text categorization by sentence–tag relatedness.
//!
//! A [`RelatednessModel`] predicts whether a sentence is related to a tag
//! from the tag's word embedding. Because tags are only ever seen through
//! their embeddings, the same model scores tags it never met during
//! training, and a [`CategoryTree`] turns those per-tag scores into class
//! decisions for any label set.

pub mod checkpoint;
pub mod datasets;
pub mod embedding;
pub mod error;
pub mod inference;
pub mod model;
pub mod numeric;
pub mod synthetic;
pub mod text;
pub mod training;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use datasets::{
    parse_category_tree, parse_corpus, parse_labeled_dataset, split_corpus, DatasetFormat,
    LabeledDataset,
};
pub use embedding::{EmbeddingFormat, EmbeddingStore, OovPolicy, SentenceMatrix, TagEmbedding};
pub use error::{Error, Result};
pub use inference::{
    class_scores, classify_multilabel, classify_single, evaluate_dataset, relatedness,
    CategoryTree, ClassScores, EvalMode, EvalReport,
};
pub use model::{Architecture, RelatednessModel};
pub use numeric::{AdamConfig, AdamState};
pub use text::{normalize_length, tokenize, TokenSequence, DEFAULT_TARGET_LENGTH};
pub use training::{
    evaluate_binary, sample_pairs, sample_pairs_against, train, Corpus, Record, TrainConfig,
    TrainingPair,
};
