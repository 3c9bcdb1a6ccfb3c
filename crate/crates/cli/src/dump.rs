//! JSON files written by `train` and `synth`.

use serde::{Deserialize, Serialize};

use djst::corpus::Epoch;
use djst::inference::Posterior;
use djst::lexicon::Sentiment;

use crate::CliError;

pub const POSTERIOR_FORMAT: &str = "djst-posterior 1";

/// `positive`, `negative`, then `label2`, `label3`, ...
pub fn label_name(label: usize) -> String {
    Sentiment::from_index(label).map_or_else(|| format!("label{label}"), |s| s.name().to_owned())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDump {
    pub sentiment: String,
    pub topic: usize,
    pub phi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentDump {
    pub doc_id: String,
    pub pi: Vec<f64>,
    /// `l * T + z`
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochDump {
    pub epoch: usize,
    pub session: String,
    /// Empty for epochs without documents.
    pub clusters: Vec<ClusterDump>,
    pub documents: Vec<DocumentDump>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDump {
    pub format: String,
    pub labels: usize,
    pub topics: usize,
    pub vocab_size: usize,
    pub seed: u64,
    pub epochs: Vec<EpochDump>,
}

impl EpochDump {
    pub fn new(epoch: usize, source: &Epoch, posterior: Option<&Posterior>) -> Self {
        let Some(p) = posterior else {
            return Self {
                epoch,
                session: source.label.clone(),
                clusters: Vec::new(),
                documents: Vec::new(),
            };
        };
        let clusters = (0..p.labels())
            .flat_map(|l| (0..p.topics()).map(move |z| (l, z)))
            .map(|(l, z)| ClusterDump {
                sentiment: label_name(l),
                topic: z,
                phi: p.phi(l, z).to_vec(),
            })
            .collect();
        let documents = source
            .documents
            .iter()
            .enumerate()
            .map(|(d, doc)| DocumentDump {
                doc_id: doc.doc_id.clone(),
                pi: p.pi(d).to_vec(),
                theta: (0..p.labels()).flat_map(|l| p.theta(d, l).iter().copied()).collect(),
            })
            .collect();
        Self {
            epoch,
            session: source.label.clone(),
            clusters,
            documents,
        }
    }

    /// The fitted posterior, or `None` for an epoch without data.
    pub fn posterior(&self, labels: usize, topics: usize, vocab_size: usize) -> Result<Option<Posterior>, CliError> {
        if self.clusters.is_empty() {
            return Ok(None);
        }
        let phi = self.clusters.iter().flat_map(|c| c.phi.iter().copied()).collect();
        let theta = self.documents.iter().flat_map(|d| d.theta.iter().copied()).collect();
        let pi = self.documents.iter().flat_map(|d| d.pi.iter().copied()).collect();
        Posterior::from_parts(labels, topics, vocab_size, phi, theta, pi)
            .map(Some)
            .map_err(|e| CliError::Validation(format!("posterior dump epoch {}: {e}", self.epoch)))
    }
}

impl PosteriorDump {
    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec(self).expect("posterior dump serializes");
        bytes.push(b'\n');
        bytes
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let dump: Self =
            serde_json::from_str(text).map_err(|e| CliError::Validation(format!("posterior dump: {e}")))?;
        if dump.format != POSTERIOR_FORMAT {
            return Err(CliError::Validation(format!(
                "posterior dump: unsupported format {:?}",
                dump.format
            )));
        }
        Ok(dump)
    }
}

/// One entry of the topic word list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicEntry {
    pub epoch: usize,
    pub session: String,
    pub sentiment: String,
    pub topic: usize,
    pub words: Vec<djst::report::WordWeight>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthDocument {
    pub doc_id: String,
    pub pi: Vec<f64>,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthEpoch {
    pub session: String,
    pub documents: Vec<TruthDocument>,
}

/// Generating parameters of a synthetic corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntheticTruth {
    pub labels: usize,
    pub topics: usize,
    pub vocab_size: usize,
    /// Planted word distributions, cluster `l * T + z`.
    pub phi: Vec<Vec<f64>>,
    pub epochs: Vec<TruthEpoch>,
}
