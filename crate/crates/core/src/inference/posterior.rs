use super::prior::PriorState;
use super::sampler::SamplerState;
use super::InferenceError;

/// Point estimates of the per-cluster word distributions (`phi`), the
/// per-document topic mixes under each label (`theta`) and the per-document
/// sentiment mix (`pi`).
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    labels: usize,
    topics: usize,
    vocab_size: usize,
    /// `(l * T + z) * V + w`
    phi: Vec<f64>,
    /// `(d * L + l) * T + z`
    theta: Vec<f64>,
    /// `d * L + l`
    pi: Vec<f64>,
}

impl Posterior {
    pub fn from_parts(
        labels: usize,
        topics: usize,
        vocab_size: usize,
        phi: Vec<f64>,
        theta: Vec<f64>,
        pi: Vec<f64>,
    ) -> Result<Self, InferenceError> {
        let k = labels * topics;
        let docs = pi.len() / labels.max(1);
        if phi.len() != k * vocab_size || pi.len() != docs * labels || theta.len() != docs * k {
            return Err(InferenceError::DimensionMismatch {
                what: "posterior tables",
                expected: k * vocab_size + docs * (k + labels),
                found: phi.len() + theta.len() + pi.len(),
            });
        }
        Ok(Self {
            labels,
            topics,
            vocab_size,
            phi,
            theta,
            pi,
        })
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
        self.pi.len() / self.labels
    }

    pub fn phi(&self, label: usize, topic: usize) -> &[f64] {
        let k = label * self.topics + topic;
        &self.phi[k * self.vocab_size..(k + 1) * self.vocab_size]
    }

    pub fn theta(&self, doc: usize, label: usize) -> &[f64] {
        let start = (doc * self.labels + label) * self.topics;
        &self.theta[start..start + self.topics]
    }

    pub fn pi(&self, doc: usize) -> &[f64] {
        &self.pi[doc * self.labels..(doc + 1) * self.labels]
    }

    pub fn phi_table(&self) -> &[f64] {
        &self.phi
    }

    pub fn theta_table(&self) -> &[f64] {
        &self.theta
    }

    pub fn pi_table(&self) -> &[f64] {
        &self.pi
    }
}

/// Smoothed estimates from the current counts:
///
/// ```text
/// phi[l][z][w]   = (N_lzw + beta_lzw) / (N_lz + sum_v beta_lzv)
/// theta[d][l][z] = (N_dlz + alpha_lz) / (N_dl + sum_z alpha_lz)
/// pi[d][l]       = (N_dl + gamma) / (N_d + L * gamma)
/// ```
pub fn estimate_posterior(state: &SamplerState, priors: &PriorState, gamma: f64) -> Posterior {
    let (labels, topics, v) = (state.labels(), state.topics(), state.vocab_size());
    let c = state.counts();
    let beta = priors.beta_table();
    let alpha = priors.alpha_table();

    let mut phi = vec![0.0; labels * topics * v];
    for l in 0..labels {
        for z in 0..topics {
            let k = l * topics + z;
            let norm = c.lz(l, z) as f64 + priors.beta_sum(l, z);
            for w in 0..v {
                phi[k * v + w] = (c.lzw(l, z, w) as f64 + beta[k * v + w]) / norm;
            }
        }
    }

    let docs = state.num_docs();
    let mut theta = vec![0.0; docs * labels * topics];
    let mut pi = vec![0.0; docs * labels];
    for d in 0..docs {
        let doc_norm = c.d(d) as f64 + labels as f64 * gamma;
        for l in 0..labels {
            let n_dl = c.dl(d, l) as f64;
            pi[d * labels + l] = (n_dl + gamma) / doc_norm;
            let topic_norm = n_dl + priors.alpha_sum(l);
            for z in 0..topics {
                theta[(d * labels + l) * topics + z] =
                    (c.dlz(d, l, z) as f64 + alpha[l * topics + z]) / topic_norm;
            }
        }
    }

    Posterior {
        labels,
        topics,
        vocab_size: v,
        phi,
        theta,
        pi,
    }
}

/// Running mean of several posterior estimates with the same shape.
#[derive(Debug, Clone, Default)]
pub struct PosteriorMean {
    sum: Option<Posterior>,
    count: usize,
}

impl PosteriorMean {
    pub fn add(&mut self, p: &Posterior) {
        match &mut self.sum {
            None => self.sum = Some(p.clone()),
            Some(acc) => {
                let pairs = [
                    (&mut acc.phi, &p.phi),
                    (&mut acc.theta, &p.theta),
                    (&mut acc.pi, &p.pi),
                ];
                for (a, b) in pairs {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                }
            }
        }
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(self) -> Option<Posterior> {
        let n = self.count as f64;
        self.sum.map(|mut p| {
            for x in p.phi.iter_mut().chain(&mut p.theta).chain(&mut p.pi) {
                *x /= n;
            }
            p
        })
    }
}
