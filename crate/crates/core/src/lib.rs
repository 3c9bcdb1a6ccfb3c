//! Dynamic joint sentiment-topic modelling of session transcripts.
//!
//! A corpus is a sequence of epochs (one per session). Each epoch is fitted
//! with a collapsed Gibbs sampler whose word priors are seeded from a
//! sentiment lexicon and then evolved from the word distributions of recent
//! epochs. [`report`] turns the fitted epochs into a sentiment trend.

pub mod corpus;
pub mod inference;
pub mod lexicon;
pub mod metrics;
pub mod report;

pub use corpus::{Corpus, Document, Epoch, EpochStream, Vocabulary};
pub use inference::{DjstModel, EpochFit, Hyperparams, InferenceError, Posterior};
pub use lexicon::{LambdaMatrix, Lexicon, Sentiment};
