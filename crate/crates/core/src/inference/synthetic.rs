//! Forward sampling from the generative model, for planted-recovery tests
//! and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use super::hyper::Hyperparams;
use super::sampler::{draw_index, Assignment};
use super::InferenceError;
use crate::corpus::{Document, Epoch, EpochStream, Vocabulary};
use crate::lexicon::{Lexicon, LexiconError, Sentiment};

/// Ground-truth word distributions, cluster-major like the posterior's `phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedPhi {
    labels: usize,
    topics: usize,
    vocab_size: usize,
    values: Vec<f64>,
}

impl PlantedPhi {
    pub fn new(labels: usize, topics: usize, vocab_size: usize, values: Vec<f64>) -> Result<Self, InferenceError> {
        if values.len() != labels * topics * vocab_size || vocab_size == 0 {
            return Err(InferenceError::DimensionMismatch {
                what: "planted phi size",
                expected: labels * topics * vocab_size,
                found: values.len(),
            });
        }
        for row in values.chunks(vocab_size) {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&x| !(x >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return Err(InferenceError::InvalidHyperparams(
                    "planted phi rows must be probability vectors".into(),
                ));
            }
        }
        Ok(Self {
            labels,
            topics,
            vocab_size,
            values,
        })
    }

    /// Each cluster owns a disjoint block of `vocab_size / (L * T)` words
    /// holding `block_mass` of its probability; the rest is spread evenly
    /// over the other words.
    pub fn blocks(labels: usize, topics: usize, vocab_size: usize, block_mass: f64) -> Result<Self, InferenceError> {
        let k = labels * topics;
        let size = vocab_size / k.max(1);
        if size == 0 || !(0.0..=1.0).contains(&block_mass) {
            return Err(InferenceError::InvalidHyperparams(format!(
                "cannot plant {k} blocks in {vocab_size} words with mass {block_mass}"
            )));
        }
        let outside = if vocab_size > size {
            (1.0 - block_mass) / (vocab_size - size) as f64
        } else {
            0.0
        };
        let inside = if vocab_size > size { block_mass / size as f64 } else { 1.0 / size as f64 };
        let mut values = Vec::with_capacity(k * vocab_size);
        for c in 0..k {
            values.extend((0..vocab_size).map(|w| if w / size == c { inside } else { outside }));
        }
        Self::new(labels, topics, vocab_size, values)
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

    pub fn row(&self, label: usize, topic: usize) -> &[f64] {
        let k = label * self.topics + topic;
        &self.values[k * self.vocab_size..(k + 1) * self.vocab_size]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.vocab_size)
    }

    /// Lexicon naming the `per_cluster` most probable words of every cluster
    /// under a positive or negative label with that label's polarity. Fails
    /// when a word is among the top words of clusters of both polarities.
    pub fn seed_lexicon(&self, vocab: &Vocabulary, per_cluster: usize) -> Result<Lexicon, LexiconError> {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for l in 0..self.labels {
            let Some(sentiment) = Sentiment::from_index(l) else {
                continue;
            };
            for z in 0..self.topics {
                let row = self.row(l, z);
                let mut ids: Vec<usize> = (0..self.vocab_size).collect();
                ids.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
                let words = ids.into_iter().take(per_cluster).filter_map(|w| vocab.term(w));
                match sentiment {
                    Sentiment::Positive => pos.extend(words),
                    Sentiment::Negative => neg.extend(words),
                }
            }
        }
        Lexicon::from_words(pos, neg)
    }
}

/// Terms `w0000`, `w0001`, ... for synthetic corpora.
pub fn synthetic_vocabulary(size: usize) -> Vocabulary {
    let mut v = Vocabulary::new();
    for i in 0..size {
        v.intern(&format!("w{i:04}"));
    }
    v
}

/// Per-document sentiment mix used when generating.
#[derive(Debug, Clone, PartialEq)]
pub enum SentimentMix {
    /// `pi ~ Dir(gamma)` per document.
    Dirichlet { gamma: f64 },
    /// Every document uses this mix.
    Fixed(Vec<f64>),
}

/// What generated one synthetic document.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTruth {
    pub pi: Vec<f64>,
    /// `l * T + z`
    pub theta: Vec<f64>,
    pub assignments: Vec<Assignment>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticEpoch {
    pub documents: Vec<Document>,
    pub truth: Vec<DocTruth>,
}

fn sample_dirichlet<R: Rng + ?Sized>(concentration: f64, n: usize, rng: &mut R) -> Vec<f64> {
    let gamma = Gamma::new(concentration, 1.0).expect("positive concentration");
    let draws: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 {
        draws.into_iter().map(|x| x / total).collect()
    } else {
        // Every component underflowed; fall back to one uniformly chosen corner.
        let mut v = vec![0.0; n];
        v[rng.random_range(0..n)] = 1.0;
        v
    }
}

/// Generates `docs` documents of `doc_len` tokens for epoch `epoch`:
/// `pi` from `mix`, `theta_l ~ Dir(alpha)` per label, then per token
/// `l ~ pi`, `z ~ theta_l`, `w ~ phi_lz`.
#[allow(clippy::too_many_arguments)]
pub fn generate_epoch<R: Rng + ?Sized>(
    phi: &PlantedPhi,
    mix: &SentimentMix,
    alpha: f64,
    docs: usize,
    doc_len: usize,
    epoch: usize,
    label: &str,
    rng: &mut R,
) -> Result<SyntheticEpoch, InferenceError> {
    let (labels, topics) = (phi.labels, phi.topics);
    match mix {
        SentimentMix::Dirichlet { gamma } if !(*gamma > 0.0) => {
            return Err(InferenceError::InvalidHyperparams("gamma must be positive".into()))
        }
        SentimentMix::Fixed(p) if p.len() != labels || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 => {
            return Err(InferenceError::InvalidHyperparams(
                "fixed sentiment mix must be a distribution over the labels".into(),
            ))
        }
        _ => {}
    }
    if !(alpha > 0.0) {
        return Err(InferenceError::InvalidHyperparams("alpha must be positive".into()));
    }

    let mut documents = Vec::with_capacity(docs);
    let mut truth = Vec::with_capacity(docs);
    for d in 0..docs {
        let pi = match mix {
            SentimentMix::Dirichlet { gamma } => sample_dirichlet(*gamma, labels, rng),
            SentimentMix::Fixed(p) => p.clone(),
        };
        let theta: Vec<f64> = (0..labels).flat_map(|_| sample_dirichlet(alpha, topics, rng)).collect();
        let mut tokens = Vec::with_capacity(doc_len);
        let mut assignments = Vec::with_capacity(doc_len);
        for _ in 0..doc_len {
            let l = draw_index(&pi, 1.0, rng);
            let theta_l = &theta[l * topics..(l + 1) * topics];
            let z = draw_index(theta_l, theta_l.iter().sum(), rng);
            let row = phi.row(l, z);
            tokens.push(draw_index(row, row.iter().sum(), rng));
            assignments.push(Assignment { sentiment: l, topic: z });
        }
        documents.push(Document {
            doc_id: format!("{label}_{d:03}"),
            epoch,
            tokens,
        });
        truth.push(DocTruth { pi, theta, assignments });
    }
    Ok(SyntheticEpoch { documents, truth })
}

/// Single-epoch corpus drawn with `pi ~ Dir(gamma)` and
/// `theta ~ Dir(alpha_init)` from `hyper`.
pub fn generate_synthetic(
    phi: &PlantedPhi,
    hyper: &Hyperparams,
    docs: usize,
    doc_len: usize,
    seed: u64,
) -> Result<(EpochStream, Vec<DocTruth>), InferenceError> {
    if phi.labels != hyper.labels || phi.topics != hyper.topics {
        return Err(InferenceError::DimensionMismatch {
            what: "planted clusters vs hyperparameters",
            expected: hyper.clusters(),
            found: phi.labels * phi.topics,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mix = SentimentMix::Dirichlet { gamma: hyper.gamma };
    let epoch = generate_epoch(phi, &mix, hyper.alpha_init, docs, doc_len, 0, "1", &mut rng)?;
    let stream = EpochStream {
        epochs: vec![Epoch {
            label: "1".into(),
            documents: epoch.documents,
        }],
    };
    Ok((stream, epoch.truth))
}
