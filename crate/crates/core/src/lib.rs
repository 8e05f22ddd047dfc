//! Recurrent neural network language models over word sequences and over
//! dependency parse trees.
//!
//! A sentence is either read left to right (sequential mode) or as the set of
//! root-to-leaf paths of its dependency tree (dependency modes), with the
//! hidden state reset at the start of each path. Output probabilities use a
//! frequency-class factorized softmax with hashed n-gram direct connections,
//! and in the labelled mode one-hot dependency-label features feed both the
//! hidden and output layers.

pub mod corpus;
pub mod deptree;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod rnn;
pub mod scoring;
pub mod sequence;
pub mod training;

mod textio;

pub use corpus::{
    assign_classes, build_vocabulary, collect_labels, emit_conll, parse_conll, parse_conll_str,
    ClassAssignment, LabelInventory, RawSentence, RawToken, Vocabulary,
};
pub use deptree::{validate_tree, DependencyTree, NodeStats, Unroll};
pub use error::{Error, Result, TreeError};
pub use evaluation::{
    evaluate, load_completion_set, split_dev_test, write_completion_set, CompletionProblem, EvalReport,
};
pub use model::{Mode, Model, ModelShape};
pub use rnn::{HyperParams, Parameters};
pub use scoring::{perplexity, score_dependency, score_sequential, SentenceScore};
pub use training::{anneal, train, TrainConfig, TrainOutcome, TrainState};
