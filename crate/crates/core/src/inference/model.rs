use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::hyper::{Estimator, Hyperparams};
use super::posterior::{estimate_posterior, Posterior, PosteriorMean};
use super::prior::PriorState;
use super::sampler::{Assignment, SamplerState};
use super::InferenceError;
use crate::corpus::{Document, EpochStream};
use crate::lexicon::LambdaMatrix;

/// Result of sampling one epoch.
#[derive(Debug, Clone)]
pub struct EpochFit {
    pub epoch: usize,
    /// `None` when the epoch had no documents.
    pub posterior: Option<Posterior>,
    /// Final token assignments, per document.
    pub assignments: Vec<Vec<Assignment>>,
    /// Priors the epoch was sampled under.
    pub priors: PriorState,
}

/// One sampler chain over an epoch stream. Epochs must be fed in order; the
/// chain carries the evolving priors and the random state between them.
#[derive(Debug, Clone)]
pub struct DjstModel {
    hyper: Hyperparams,
    priors: PriorState,
    rng: ChaCha8Rng,
    next_epoch: usize,
}

impl DjstModel {
    pub fn new(hyper: Hyperparams, lambda: LambdaMatrix, vocab_size: usize) -> Result<Self, InferenceError> {
        hyper.validate()?;
        let priors = PriorState::initial(lambda, vocab_size, &hyper)?;
        let rng = ChaCha8Rng::seed_from_u64(hyper.seed);
        Ok(Self {
            hyper,
            priors,
            rng,
            next_epoch: 0,
        })
    }

    pub(crate) fn from_state(
        hyper: Hyperparams,
        priors: PriorState,
        rng: ChaCha8Rng,
        next_epoch: usize,
    ) -> Result<Self, InferenceError> {
        hyper.validate()?;
        if priors.labels() != hyper.labels || priors.topics() != hyper.topics {
            return Err(InferenceError::DimensionMismatch {
                what: "prior clusters vs hyperparameters",
                expected: hyper.clusters(),
                found: priors.labels() * priors.topics(),
            });
        }
        Ok(Self {
            hyper,
            priors,
            rng,
            next_epoch,
        })
    }

    pub fn hyper(&self) -> &Hyperparams {
        &self.hyper
    }

    /// Priors for the next epoch to be fitted.
    pub fn priors(&self) -> &PriorState {
        &self.priors
    }

    pub fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }

    /// Index of the next epoch [`fit_epoch`](DjstModel::fit_epoch) will fit.
    pub fn next_epoch(&self) -> usize {
        self.next_epoch
    }

    /// Samples one epoch, estimates its posterior and advances the priors.
    /// An epoch without documents leaves the priors untouched.
    pub fn fit_epoch(&mut self, docs: &[Document]) -> Result<EpochFit, InferenceError> {
        let epoch = self.next_epoch;
        let priors = self.priors.clone();
        if docs.is_empty() {
            self.next_epoch += 1;
            return Ok(EpochFit {
                epoch,
                posterior: None,
                assignments: Vec::new(),
                priors,
            });
        }

        let gamma = self.hyper.gamma;
        let mut state = SamplerState::initialize(docs, &self.priors, &mut self.rng)?;
        let mut mean = PosteriorMean::default();
        for sweep in 0..self.hyper.sweeps {
            state.sweep(&self.priors, gamma, &mut self.rng);
            if let Estimator::Averaged { lag } = self.hyper.estimator {
                if sweep >= self.hyper.burn_in && (sweep + 1 - self.hyper.burn_in) % lag == 0 {
                    mean.add(&estimate_posterior(&state, &self.priors, gamma));
                }
            }
        }
        let posterior = mean
            .mean()
            .unwrap_or_else(|| estimate_posterior(&state, &self.priors, gamma));
        log::debug!(
            "epoch {epoch}: {} documents, {} tokens",
            docs.len(),
            state.token_count()
        );

        self.priors.advance(&posterior, &self.hyper, &mut self.rng)?;
        self.next_epoch += 1;
        Ok(EpochFit {
            epoch,
            posterior: Some(posterior),
            assignments: state.assignments().to_vec(),
            priors,
        })
    }

    /// Fits every epoch of `stream` in order.
    pub fn fit_stream(&mut self, stream: &EpochStream) -> Result<Vec<EpochFit>, InferenceError> {
        stream.epochs.iter().map(|e| self.fit_epoch(&e.documents)).collect()
    }
}
