//! Conceptor-aided continual learning for linear sentence encoders.
//!
//! The crate is organised bottom-up:
//!
//! * [`conceptor`]: conceptor matrices and their Boolean algebra.
//! * [`embeddings`]: word vectors, unigram frequencies, stop words and SIF weights.
//! * [`corpus`]: tokenization and STS dataset ingestion.
//! * [`encoders`]: SIF, conceptor-aided (CA), zero-shot CA and incremental-deletion SIF.
//! * [`eval`]: cosine similarity, Pearson correlation and STS scoring.
//! * [`harness`]: the sequential-corpus protocol and result emission.

pub mod conceptor;
pub mod corpus;
pub mod embeddings;
pub mod encoders;
mod error;
pub mod eval;
pub mod harness;
mod linalg;
pub mod state_io;

pub use conceptor::{Conceptor, CorrelationAccumulator};
pub use corpus::{Corpus, Genre, Sentence, StsDataset, StsPair};
pub use embeddings::{FrequencyTable, StopWordList, WordVectorTable};
pub use encoders::{CaState, DeletionListState, EncoderState, Lexicon, SentenceEncoder, SifState};
pub use error::{Error, Result};
pub use eval::PccResult;

/// Default SIF smoothing parameter `a`.
pub const DEFAULT_A: f64 = 1e-3;

/// Default conceptor aperture `alpha`.
pub const DEFAULT_ALPHA: f64 = 1.0;
