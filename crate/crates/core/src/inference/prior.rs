//! Dirichlet priors and their evolution across epochs.
//!
//! Each (label, topic) cluster keeps the smoothed word distributions it
//! produced in the last `S` epochs, most recent first. The next epoch's word
//! prior is the `mu`-weighted combination of those columns.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::hyper::{AlphaEvolution, Hyperparams, MuScheme};
use super::posterior::Posterior;
use super::InferenceError;
use crate::lexicon::LambdaMatrix;

/// Epoch-0 word prior, cluster-major (`(l * T + z) * V + w`):
/// `beta_base * lambda[l][w]`, identical for every topic under a label.
pub fn seed_beta(
    lambda: &LambdaMatrix,
    vocab_size: usize,
    hyper: &Hyperparams,
) -> Result<Vec<f64>, InferenceError> {
    if lambda.width() != vocab_size {
        return Err(InferenceError::DimensionMismatch {
            what: "lambda width vs vocabulary size",
            expected: vocab_size,
            found: lambda.width(),
        });
    }
    if lambda.labels() != hyper.labels {
        return Err(InferenceError::DimensionMismatch {
            what: "lambda rows vs sentiment labels",
            expected: hyper.labels,
            found: lambda.labels(),
        });
    }
    let mut beta = Vec::with_capacity(hyper.clusters() * vocab_size);
    for l in 0..hyper.labels {
        let row = lambda.row(l);
        for _ in 0..hyper.topics {
            beta.extend(row.iter().map(|&x| hyper.beta_base * x));
        }
    }
    Ok(beta)
}

/// History weights for `history_len` retained slices, most recent first.
pub fn compute_mu(scheme: MuScheme, history_len: usize) -> Vec<f64> {
    if history_len == 0 {
        return Vec::new();
    }
    match scheme {
        MuScheme::Uniform => vec![1.0 / history_len as f64; history_len],
        MuScheme::Decay { kappa } => {
            let raw: Vec<f64> = (1..=history_len).map(|a| (-kappa * a as f64).exp()).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / total).collect()
        }
    }
}

/// `sum_s mu[s] * history[s]`: the evolutionary matrix (columns = past word
/// distributions) times the weight vector.
pub fn evolve_beta<S: AsRef<[f64]>>(history: &[S], mu: &[f64]) -> Result<Vec<f64>, InferenceError> {
    let first = history.first().ok_or(InferenceError::EmptyHistory)?.as_ref();
    if mu.len() != history.len() {
        return Err(InferenceError::DimensionMismatch {
            what: "mu length vs history length",
            expected: history.len(),
            found: mu.len(),
        });
    }
    let mut beta = vec![0.0; first.len()];
    for (sigma, &weight) in history.iter().zip(mu) {
        let sigma = sigma.as_ref();
        if sigma.len() != beta.len() {
            return Err(InferenceError::DimensionMismatch {
                what: "history column length",
                expected: beta.len(),
                found: sigma.len(),
            });
        }
        for (b, &s) in beta.iter_mut().zip(sigma) {
            *b += weight * s;
        }
    }
    Ok(beta)
}

/// Hyperparameters in force for one epoch, plus the history that produces
/// the next epoch's word prior.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorState {
    labels: usize,
    topics: usize,
    vocab_size: usize,
    beta: Vec<f64>,
    beta_sum: Vec<f64>,
    alpha: Vec<f64>,
    alpha_sum: Vec<f64>,
    history: Vec<VecDeque<Vec<f64>>>,
    mu: Vec<Vec<f64>>,
    lambda: LambdaMatrix,
}

impl PriorState {
    /// Epoch-0 priors: lexicon-seeded `beta`, symmetric `alpha`, no history.
    pub fn initial(
        lambda: LambdaMatrix,
        vocab_size: usize,
        hyper: &Hyperparams,
    ) -> Result<Self, InferenceError> {
        let beta = seed_beta(&lambda, vocab_size, hyper)?;
        let k = hyper.clusters();
        Self::from_parts(
            hyper.labels,
            hyper.topics,
            vocab_size,
            beta,
            vec![hyper.alpha_init; k],
            vec![VecDeque::new(); k],
            vec![Vec::new(); k],
            lambda,
        )
    }

    /// Reassembles a prior state, checking every table's shape and sign.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        labels: usize,
        topics: usize,
        vocab_size: usize,
        beta: Vec<f64>,
        alpha: Vec<f64>,
        history: Vec<VecDeque<Vec<f64>>>,
        mu: Vec<Vec<f64>>,
        lambda: LambdaMatrix,
    ) -> Result<Self, InferenceError> {
        let k = labels * topics;
        let dim = |what, expected, found| InferenceError::DimensionMismatch {
            what,
            expected,
            found,
        };
        if beta.len() != k * vocab_size {
            return Err(dim("beta size", k * vocab_size, beta.len()));
        }
        if alpha.len() != k {
            return Err(dim("alpha size", k, alpha.len()));
        }
        if history.len() != k || mu.len() != k {
            return Err(dim("history/mu cluster count", k, history.len().min(mu.len())));
        }
        if lambda.labels() != labels || lambda.width() != vocab_size {
            return Err(dim("lambda width", vocab_size, lambda.width()));
        }
        for (h, m) in history.iter().zip(&mu) {
            if h.len() != m.len() {
                return Err(dim("mu length vs history length", h.len(), m.len()));
            }
            if let Some(bad) = h.iter().find(|s| s.len() != vocab_size) {
                return Err(dim("history column length", vocab_size, bad.len()));
            }
        }
        if beta.iter().chain(&alpha).any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(InferenceError::InvalidHyperparams(
                "alpha and beta entries must be positive and finite".into(),
            ));
        }
        let mut state = Self {
            labels,
            topics,
            vocab_size,
            beta,
            beta_sum: Vec::new(),
            alpha,
            alpha_sum: Vec::new(),
            history,
            mu,
            lambda,
        };
        state.refresh_sums();
        Ok(state)
    }

    fn refresh_sums(&mut self) {
        self.beta_sum = self.beta.chunks(self.vocab_size.max(1)).map(|c| c.iter().sum()).collect();
        self.beta_sum.resize(self.labels * self.topics, 0.0);
        self.alpha_sum = self.alpha.chunks(self.topics).map(|c| c.iter().sum()).collect();
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn topics(&self) -> usize {
        self.topics
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub(crate) fn cluster(&self, label: usize, topic: usize) -> usize {
        label * self.topics + topic
    }

    /// Word prior of one cluster.
    pub fn beta(&self, label: usize, topic: usize) -> &[f64] {
        let k = self.cluster(label, topic);
        &self.beta[k * self.vocab_size..(k + 1) * self.vocab_size]
    }

    /// Full word prior table, cluster-major.
    pub fn beta_table(&self) -> &[f64] {
        &self.beta
    }

    /// `sum_w beta[l][z][w]`.
    pub fn beta_sum(&self, label: usize, topic: usize) -> f64 {
        self.beta_sum[self.cluster(label, topic)]
    }

    pub fn alpha(&self, label: usize, topic: usize) -> f64 {
        self.alpha[self.cluster(label, topic)]
    }

    pub fn alpha_table(&self) -> &[f64] {
        &self.alpha
    }

    /// `sum_z alpha[l][z]`.
    pub fn alpha_sum(&self, label: usize) -> f64 {
        self.alpha_sum[label]
    }

    /// Retained word distributions for one cluster, most recent first.
    pub fn history(&self, label: usize, topic: usize) -> &VecDeque<Vec<f64>> {
        &self.history[self.cluster(label, topic)]
    }

    /// Weights that produced the current `beta` (empty at epoch 0).
    pub fn mu(&self, label: usize, topic: usize) -> &[f64] {
        &self.mu[self.cluster(label, topic)]
    }

    pub fn lambda(&self) -> &LambdaMatrix {
        &self.lambda
    }

    /// Moves to the next epoch: the estimated word distribution of every
    /// cluster joins its history (evicting the oldest beyond `window`), and
    /// `beta` becomes the `mu`-weighted combination of the history.
    pub fn advance<R: Rng + ?Sized>(
        &mut self,
        estimate: &Posterior,
        hyper: &Hyperparams,
        rng: &mut R,
    ) -> Result<(), InferenceError> {
        if estimate.vocab_size() != self.vocab_size
            || estimate.labels() != self.labels
            || estimate.topics() != self.topics
        {
            return Err(InferenceError::DimensionMismatch {
                what: "posterior shape vs prior shape",
                expected: self.labels * self.topics * self.vocab_size,
                found: estimate.labels() * estimate.topics() * estimate.vocab_size(),
            });
        }
        for l in 0..self.labels {
            for z in 0..self.topics {
                let k = self.cluster(l, z);
                let hist = &mut self.history[k];
                hist.push_front(estimate.phi(l, z).to_vec());
                hist.truncate(hyper.window);
                let mu = compute_mu(hyper.mu_scheme, hist.len());
                let evolved = evolve_beta(hist.make_contiguous(), &mu)?;
                let row = &mut self.beta[k * self.vocab_size..(k + 1) * self.vocab_size];
                if hyper.reapply_lambda {
                    let lam = self.lambda.row(l);
                    for ((b, e), x) in row.iter_mut().zip(evolved).zip(lam) {
                        *b = e * x;
                    }
                } else {
                    row.copy_from_slice(&evolved);
                }
                self.mu[k] = mu;
            }
        }
        if hyper.alpha_evolution == AlphaEvolution::Sample {
            for a in &mut self.alpha {
                let shape = hyper.nu * *a;
                let draw = Gamma::new(shape, 1.0 / hyper.nu)
                    .map_err(|e| InferenceError::InvalidHyperparams(format!("alpha draw: {e}")))?
                    .sample(rng);
                *a = draw.max(f64::MIN_POSITIVE);
            }
        }
        self.refresh_sums();
        Ok(())
    }
}
