//! Legal question answering over statute corpora.
//!
//! Retrieval ranks articles against a question with mixed-size lemmatized
//! n-gram sets and an IDF-sum relevance score normalized by weighted set
//! sizes. Entailment turns a (question, evidence) pair into fifteen lexical
//! and distributional features and classifies it with AdaBoost over decision
//! stumps.

pub mod boost;
pub mod cli;
pub mod corpus;
pub mod embed;
pub mod engine;
pub mod entail;
pub mod error;
pub mod eval;
pub mod ranker;
pub mod strsim;
pub mod textpipe;
pub mod tuner;

pub use boost::{BoostConfig, BoostModel, Label, Stump};
pub use corpus::{Article, ArticleId, Corpus, TrainingPair};
pub use embed::EmbeddingTable;
pub use engine::Engine;
pub use entail::{FeatureVector, PreparedPair, FEATURE_NAMES, NUM_FEATURES};
pub use error::{Error, Result};
pub use ranker::{NGramModel, RankedList, RankerParams, TermDictionary};
pub use textpipe::{NGramSet, TextPipeline};
