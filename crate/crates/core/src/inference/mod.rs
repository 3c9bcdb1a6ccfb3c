//! The evolving joint sentiment-topic model: epoch priors, the collapsed
//! Gibbs sampler, posterior estimates, chain snapshots and a forward sampler.

use std::io;

use thiserror::Error;

mod hyper;
mod model;
mod posterior;
mod prior;
mod sampler;
mod snapshot;
pub mod synthetic;

pub use hyper::{default_alpha, AlphaEvolution, Estimator, Hyperparams, MuScheme};
pub use model::{DjstModel, EpochFit};
pub use posterior::{estimate_posterior, Posterior, PosteriorMean};
pub use prior::{compute_mu, evolve_beta, seed_beta, PriorState};
pub use sampler::{Assignment, CountTables, SamplerState};
pub use snapshot::{ModelSnapshot, FORMAT_HEADER};

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("dimension mismatch ({what}): expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("prior evolution needs at least one past epoch")]
    EmptyHistory,
    #[error("document {0} has no tokens")]
    EmptyDocument(String),
    #[error("model snapshot line {line}: {msg}")]
    Snapshot { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}
