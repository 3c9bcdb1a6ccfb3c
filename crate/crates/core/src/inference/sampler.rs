//! Collapsed Gibbs sampling over joint (sentiment, topic) token assignments.

use rand::Rng;

use super::prior::PriorState;
use super::InferenceError;
use crate::corpus::Document;

/// Latent (sentiment, topic) pair of one token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Assignment {
    pub sentiment: usize,
    pub topic: usize,
}

/// Sufficient statistics of an epoch's assignments.
///
/// Layouts: `n_dlz[(d * L + l) * T + z]`, `n_dl[d * L + l]`, `n_d[d]`,
/// `n_lzw[w * L * T + l * T + z]` (word-major, so one token's candidate
/// clusters are contiguous), `n_lz[l * T + z]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTables {
    labels: usize,
    topics: usize,
    pub n_dlz: Vec<u32>,
    pub n_dl: Vec<u32>,
    pub n_d: Vec<u32>,
    pub n_lzw: Vec<u32>,
    pub n_lz: Vec<u32>,
}

impl CountTables {
    fn zeros(docs: usize, labels: usize, topics: usize, vocab: usize) -> Self {
        let k = labels * topics;
        Self {
            labels,
            topics,
            n_dlz: vec![0; docs * k],
            n_dl: vec![0; docs * labels],
            n_d: vec![0; docs],
            n_lzw: vec![0; vocab * k],
            n_lz: vec![0; k],
        }
    }

    /// Tallies assignments from scratch.
    pub fn tally(
        docs: &[Vec<usize>],
        assignments: &[Vec<Assignment>],
        labels: usize,
        topics: usize,
        vocab: usize,
    ) -> Self {
        let mut c = Self::zeros(docs.len(), labels, topics, vocab);
        for (d, (words, assigned)) in docs.iter().zip(assignments).enumerate() {
            for (&w, &a) in words.iter().zip(assigned) {
                c.add(d, w, a);
            }
        }
        c
    }

    #[inline]
    fn add(&mut self, d: usize, w: usize, a: Assignment) {
        let (l, z) = (a.sentiment, a.topic);
        let k = l * self.topics + z;
        let kk = self.labels * self.topics;
        self.n_dlz[d * kk + k] += 1;
        self.n_dl[d * self.labels + l] += 1;
        self.n_d[d] += 1;
        self.n_lzw[w * kk + k] += 1;
        self.n_lz[k] += 1;
    }

    #[inline]
    fn remove(&mut self, d: usize, w: usize, a: Assignment) {
        let (l, z) = (a.sentiment, a.topic);
        let k = l * self.topics + z;
        let kk = self.labels * self.topics;
        self.n_dlz[d * kk + k] -= 1;
        self.n_dl[d * self.labels + l] -= 1;
        self.n_d[d] -= 1;
        self.n_lzw[w * kk + k] -= 1;
        self.n_lz[k] -= 1;
    }

    pub fn dlz(&self, d: usize, l: usize, z: usize) -> u32 {
        self.n_dlz[(d * self.labels + l) * self.topics + z]
    }

    pub fn dl(&self, d: usize, l: usize) -> u32 {
        self.n_dl[d * self.labels + l]
    }

    pub fn d(&self, d: usize) -> u32 {
        self.n_d[d]
    }

    pub fn lzw(&self, l: usize, z: usize, w: usize) -> u32 {
        self.n_lzw[w * self.labels * self.topics + l * self.topics + z]
    }

    pub fn lz(&self, l: usize, z: usize) -> u32 {
        self.n_lz[l * self.topics + z]
    }
}

/// Draws an index with probability proportional to `weights`; `total` must be
/// their (positive) sum.
#[inline]
pub(crate) fn draw_index<R: Rng + ?Sized>(weights: &[f64], total: f64, rng: &mut R) -> usize {
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if u < w {
                return i;
            }
            u -= w;
            last = i;
        }
    }
    // Rounding left `u` just past the final bucket.
    last
}

/// Token assignments for one epoch with their count tables.
#[derive(Debug, Clone)]
pub struct SamplerState {
    labels: usize,
    topics: usize,
    vocab_size: usize,
    docs: Vec<Vec<usize>>,
    assignments: Vec<Vec<Assignment>>,
    counts: CountTables,
    weights: Vec<f64>,
}

fn check_docs<'a>(
    docs: impl IntoIterator<Item = (&'a str, &'a [usize])>,
    vocab_size: usize,
) -> Result<(), InferenceError> {
    for (id, tokens) in docs {
        if tokens.is_empty() {
            return Err(InferenceError::EmptyDocument(id.to_owned()));
        }
        if let Some(&w) = tokens.iter().find(|&&w| w >= vocab_size) {
            return Err(InferenceError::DimensionMismatch {
                what: "token id vs vocabulary size",
                expected: vocab_size,
                found: w,
            });
        }
    }
    Ok(())
}

impl SamplerState {
    /// Random initial state. Tokens whose word carries a lexicon prior start
    /// from the normalized word factor `beta[k][w] / sum_v beta[k][v]`; all
    /// other tokens start uniformly over the clusters.
    pub fn initialize<R: Rng + ?Sized>(
        docs: &[Document],
        priors: &PriorState,
        rng: &mut R,
    ) -> Result<Self, InferenceError> {
        let vocab_size = priors.vocab_size();
        check_docs(docs.iter().map(|d| (d.doc_id.as_str(), d.tokens.as_slice())), vocab_size)?;
        let (labels, topics) = (priors.labels(), priors.topics());
        let k = labels * topics;
        let lambda = priors.lambda();
        let mut weights = vec![0.0; k];
        let assignments = docs
            .iter()
            .map(|doc| {
                doc.tokens
                    .iter()
                    .map(|&w| {
                        let idx = if lambda.has_prior(w) {
                            let mut total = 0.0;
                            for l in 0..labels {
                                for z in 0..topics {
                                    let p = priors.beta(l, z)[w] / priors.beta_sum(l, z);
                                    weights[l * topics + z] = p;
                                    total += p;
                                }
                            }
                            draw_index(&weights, total, rng)
                        } else {
                            rng.random_range(0..k)
                        };
                        Assignment {
                            sentiment: idx / topics,
                            topic: idx % topics,
                        }
                    })
                    .collect()
            })
            .collect();
        let tokens: Vec<Vec<usize>> = docs.iter().map(|d| d.tokens.clone()).collect();
        Ok(Self::from_tokens(tokens, assignments, labels, topics, vocab_size))
    }

    /// Rebuilds a state from explicit assignments.
    pub fn from_assignments(
        docs: &[Document],
        assignments: Vec<Vec<Assignment>>,
        labels: usize,
        topics: usize,
        vocab_size: usize,
    ) -> Result<Self, InferenceError> {
        check_docs(docs.iter().map(|d| (d.doc_id.as_str(), d.tokens.as_slice())), vocab_size)?;
        if assignments.len() != docs.len()
            || docs.iter().zip(&assignments).any(|(d, a)| d.tokens.len() != a.len())
        {
            return Err(InferenceError::DimensionMismatch {
                what: "assignments vs document tokens",
                expected: docs.iter().map(Document::len).sum(),
                found: assignments.iter().map(Vec::len).sum(),
            });
        }
        if assignments.iter().flatten().any(|a| a.sentiment >= labels || a.topic >= topics) {
            return Err(InferenceError::InvalidHyperparams(
                "assignment outside the label/topic range".into(),
            ));
        }
        let tokens = docs.iter().map(|d| d.tokens.clone()).collect();
        Ok(Self::from_tokens(tokens, assignments, labels, topics, vocab_size))
    }

    fn from_tokens(
        docs: Vec<Vec<usize>>,
        assignments: Vec<Vec<Assignment>>,
        labels: usize,
        topics: usize,
        vocab_size: usize,
    ) -> Self {
        let counts = CountTables::tally(&docs, &assignments, labels, topics, vocab_size);
        Self {
            labels,
            topics,
            vocab_size,
            docs,
            assignments,
            counts,
            weights: vec![0.0; labels * topics],
        }
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

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn token_count(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }

    pub fn docs(&self) -> &[Vec<usize>] {
        &self.docs
    }

    pub fn assignments(&self) -> &[Vec<Assignment>] {
        &self.assignments
    }

    pub fn counts(&self) -> &CountTables {
        &self.counts
    }

    /// Count tables rebuilt from the current assignments.
    pub fn recount(&self) -> CountTables {
        CountTables::tally(&self.docs, &self.assignments, self.labels, self.topics, self.vocab_size)
    }

    /// Takes token `n` of document `d` out of the counts, leaving the
    /// "minus-i" state expected by [`SamplerState::sample_assignment`].
    pub fn remove(&mut self, d: usize, n: usize) {
        let w = self.docs[d][n];
        self.counts.remove(d, w, self.assignments[d][n]);
    }

    /// Unnormalized full conditional of every (l, z) for a token of word `w`
    /// in document `d`, computed from the current counts (which must exclude
    /// that token). Entry `l * T + z` is
    ///
    /// ```text
    /// (N_lzw + beta_lzw) / (N_lz + sum_v beta_lzv)
    ///   * (N_dlz + alpha_lz) / (N_dl + sum_z alpha_lz)
    ///   * (N_dl + gamma) / (N_d + L * gamma)
    /// ```
    ///
    /// Returns the sum of the weights.
    pub fn conditional_weights(
        &self,
        d: usize,
        w: usize,
        priors: &PriorState,
        gamma: f64,
        out: &mut [f64],
    ) -> f64 {
        let (labels, topics) = (self.labels, self.topics);
        let kk = labels * topics;
        let c = &self.counts;
        let word_counts = &c.n_lzw[w * kk..(w + 1) * kk];
        let doc_counts = &c.n_dlz[d * kk..(d + 1) * kk];
        let beta = priors.beta_table();
        let v = self.vocab_size;
        let alpha = priors.alpha_table();
        let doc_norm = c.n_d[d] as f64 + labels as f64 * gamma;
        let mut total = 0.0;
        for l in 0..labels {
            let n_dl = c.n_dl[d * labels + l] as f64;
            let sentiment = (n_dl + gamma) / doc_norm;
            let topic_norm = n_dl + priors.alpha_sum(l);
            for z in 0..topics {
                let k = l * topics + z;
                let word = (word_counts[k] as f64 + beta[k * v + w])
                    / (c.n_lz[k] as f64 + priors.beta_sum(l, z));
                let topic = (doc_counts[k] as f64 + alpha[k]) / topic_norm;
                let p = word * topic * sentiment;
                out[k] = p;
                total += p;
            }
        }
        total
    }

    /// Draws a new (l, z) for token `n` of document `d` from the full
    /// conditional and adds it back into the counts. The token must already
    /// have been [`remove`](SamplerState::remove)d.
    pub fn sample_assignment<R: Rng + ?Sized>(
        &mut self,
        d: usize,
        n: usize,
        priors: &PriorState,
        gamma: f64,
        rng: &mut R,
    ) -> Assignment {
        let w = self.docs[d][n];
        let mut weights = std::mem::take(&mut self.weights);
        let total = self.conditional_weights(d, w, priors, gamma, &mut weights);
        assert!(
            total > 0.0 && total.is_finite(),
            "full conditional underflowed (total weight {total})"
        );
        let idx = draw_index(&weights, total, rng);
        self.weights = weights;
        let a = Assignment {
            sentiment: idx / self.topics,
            topic: idx % self.topics,
        };
        self.assignments[d][n] = a;
        self.counts.add(d, w, a);
        a
    }

    /// Resamples every token once, documents in order and tokens in position
    /// order.
    pub fn sweep<R: Rng + ?Sized>(&mut self, priors: &PriorState, gamma: f64, rng: &mut R) {
        for d in 0..self.docs.len() {
            for n in 0..self.docs[d].len() {
                self.remove(d, n);
                self.sample_assignment(d, n, priors, gamma, rng);
            }
        }
    }
}
