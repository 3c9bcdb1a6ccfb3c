//! Flat `key = value` run configuration.
//!
//! Values come from built-in defaults, then an optional config file, then
//! command-line flags of the same name. The effective configuration is
//! written next to the outputs so a run can be repeated exactly.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use djst::inference::{default_alpha, Hyperparams};
use djst::report::{TieBreak, DEFAULT_TOP_K};

use crate::CliError;

/// How `synth` draws per-document sentiment mixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SynthMode {
    /// `pi ~ Dir(synth_gamma)` in every epoch.
    #[default]
    Dirichlet,
    /// Every document leans `synth_strength` negative before epoch
    /// `synth_shift_at` and `synth_strength` positive from then on.
    Shift,
}

impl fmt::Display for SynthMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SynthMode::Dirichlet => "dirichlet",
            SynthMode::Shift => "shift",
        })
    }
}

impl FromStr for SynthMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "dirichlet" => Ok(SynthMode::Dirichlet),
            "shift" => Ok(SynthMode::Shift),
            other => Err(format!("unknown synth mode {other:?} (dirichlet | shift)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub docs: usize,
    pub doc_len: usize,
    pub vocab: usize,
    pub epochs: usize,
    pub mode: SynthMode,
    /// First epoch (zero-based) of the positive phase in shift mode.
    pub shift_at: usize,
    pub strength: f64,
    /// Share of each planted cluster's mass on its own word block.
    pub block_mass: f64,
    /// Concentration of the generating topic mixes.
    pub alpha: f64,
    /// Concentration of the generating sentiment mixes (dirichlet mode).
    pub gamma: f64,
    /// Seed words per cluster written to the synthetic lexicon, capped at
    /// the planted block size.
    pub lexicon_words: usize,
    /// Fit the generated corpus and write recovery metrics.
    pub evaluate: bool,
    /// One-sided true sentiment share that makes a document count toward
    /// sentiment accuracy.
    pub threshold: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            docs: 20,
            doc_len: 100,
            vocab: 200,
            epochs: 1,
            mode: SynthMode::default(),
            shift_at: 8,
            strength: 0.8,
            block_mass: 0.9,
            alpha: 0.1,
            gamma: 0.1,
            lexicon_words: 20,
            evaluate: false,
            threshold: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Directory of `session_<NN>.txt` transcripts.
    pub corpus_dir: Option<PathBuf>,
    /// Corpus snapshot; defaults to `<out>/corpus.txt`.
    pub corpus: Option<PathBuf>,
    pub positive_lexicon: Option<PathBuf>,
    pub negative_lexicon: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub out: PathBuf,
    pub chunk_tokens: usize,
    pub top_k: usize,
    /// Trend table read by `eval`; defaults to `<out>/trend.csv`.
    pub trend: Option<PathBuf>,
    pub expert_labels: Option<PathBuf>,
    pub tie_break: TieBreak,
    pub chains: usize,
    pub hyper: Hyperparams,
    alpha_explicit: bool,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus_dir: None,
            corpus: None,
            positive_lexicon: None,
            negative_lexicon: None,
            stopwords: None,
            out: PathBuf::from("out"),
            chunk_tokens: djst::corpus::DEFAULT_CHUNK_TOKENS,
            top_k: DEFAULT_TOP_K,
            trend: None,
            expert_labels: None,
            tie_break: TieBreak::default(),
            chains: 1,
            hyper: Hyperparams::default(),
            alpha_explicit: false,
            synth: SynthConfig::default(),
        }
    }
}

const RUN_KEYS: [&str; 12] = [
    "corpus_dir",
    "corpus",
    "positive_lexicon",
    "negative_lexicon",
    "stopwords",
    "out",
    "chunk_tokens",
    "top_k",
    "trend",
    "expert_labels",
    "tie_break",
    "chains",
];

const SYNTH_KEYS: [&str; 13] = [
    "synth_docs",
    "synth_doc_len",
    "synth_vocab",
    "synth_epochs",
    "synth_mode",
    "synth_shift_at",
    "synth_strength",
    "synth_block_mass",
    "synth_alpha",
    "synth_gamma",
    "synth_lexicon_words",
    "synth_evaluate",
    "synth_threshold",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Validation(format!("{key}: cannot parse {value:?}")))
}

fn path(value: &str) -> Option<PathBuf> {
    let v = value.trim();
    (!v.is_empty()).then(|| PathBuf::from(v))
}

impl RunConfig {
    /// Every configuration key, in the order they are written out.
    pub fn keys() -> Vec<&'static str> {
        RUN_KEYS
            .iter()
            .chain(Hyperparams::KEYS.iter())
            .chain(SYNTH_KEYS.iter())
            .copied()
            .collect()
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let s = &mut self.synth;
        match key {
            "corpus_dir" => self.corpus_dir = path(value),
            "corpus" => self.corpus = path(value),
            "positive_lexicon" => self.positive_lexicon = path(value),
            "negative_lexicon" => self.negative_lexicon = path(value),
            "stopwords" => self.stopwords = path(value),
            "out" => {
                self.out = path(value).ok_or_else(|| CliError::Validation("out: empty path".into()))?
            }
            "chunk_tokens" => self.chunk_tokens = parse(key, value)?,
            "top_k" => self.top_k = parse(key, value)?,
            "trend" => self.trend = path(value),
            "expert_labels" => self.expert_labels = path(value),
            "tie_break" => self.tie_break = value.parse().map_err(CliError::Validation)?,
            "chains" => self.chains = parse(key, value)?,
            "synth_docs" => s.docs = parse(key, value)?,
            "synth_doc_len" => s.doc_len = parse(key, value)?,
            "synth_vocab" => s.vocab = parse(key, value)?,
            "synth_epochs" => s.epochs = parse(key, value)?,
            "synth_mode" => s.mode = value.parse().map_err(CliError::Validation)?,
            "synth_shift_at" => s.shift_at = parse(key, value)?,
            "synth_strength" => s.strength = parse(key, value)?,
            "synth_block_mass" => s.block_mass = parse(key, value)?,
            "synth_alpha" => s.alpha = parse(key, value)?,
            "synth_gamma" => s.gamma = parse(key, value)?,
            "synth_lexicon_words" => s.lexicon_words = parse(key, value)?,
            "synth_evaluate" => s.evaluate = parse(key, value)?,
            "synth_threshold" => s.threshold = parse(key, value)?,
            _ => {
                self.hyper
                    .set(key, value)
                    .map_err(|e| CliError::Validation(e.to_string()))?;
                if key == "alpha_init" {
                    self.alpha_explicit = true;
                }
            }
        }
        Ok(())
    }

    /// Applies the `key = value` lines of a config file. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Validation(format!("config line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| CliError::Validation(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = crate::read_text(path)?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Fills derived defaults and checks every value. `alpha_init` follows
    /// `50 / (L * T)` unless it was set explicitly.
    pub fn finalize(&mut self) -> Result<(), CliError> {
        if !self.alpha_explicit {
            self.hyper.alpha_init = default_alpha(self.hyper.labels, self.hyper.topics);
        }
        self.hyper
            .validate()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        let fail = |m: &str| Err(CliError::Validation(m.to_owned()));
        if self.chains == 0 {
            return fail("chains must be >= 1");
        }
        let s = &self.synth;
        if !(s.strength > 0.0 && s.strength < 1.0) {
            return fail("synth_strength must lie strictly between 0 and 1");
        }
        if !(s.block_mass > 0.0 && s.block_mass <= 1.0) {
            return fail("synth_block_mass must lie in (0, 1]");
        }
        if !(s.alpha > 0.0 && s.gamma > 0.0) {
            return fail("synth_alpha and synth_gamma must be positive");
        }
        if !(0.0..=1.0).contains(&s.threshold) {
            return fail("synth_threshold must lie in [0, 1]");
        }
        Ok(())
    }

    /// Every set key with its value; unset optional paths are left out.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let opt = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let s = &self.synth;
        let mut out: Vec<(&'static str, Option<String>)> = vec![
            ("corpus_dir", opt(&self.corpus_dir)),
            ("corpus", opt(&self.corpus)),
            ("positive_lexicon", opt(&self.positive_lexicon)),
            ("negative_lexicon", opt(&self.negative_lexicon)),
            ("stopwords", opt(&self.stopwords)),
            ("out", Some(self.out.display().to_string())),
            ("chunk_tokens", Some(self.chunk_tokens.to_string())),
            ("top_k", Some(self.top_k.to_string())),
            ("trend", opt(&self.trend)),
            ("expert_labels", opt(&self.expert_labels)),
            ("tie_break", Some(self.tie_break.to_string())),
            ("chains", Some(self.chains.to_string())),
        ];
        out.extend(self.hyper.entries().into_iter().map(|(k, v)| (k, Some(v))));
        out.extend([
            ("synth_docs", Some(s.docs.to_string())),
            ("synth_doc_len", Some(s.doc_len.to_string())),
            ("synth_vocab", Some(s.vocab.to_string())),
            ("synth_epochs", Some(s.epochs.to_string())),
            ("synth_mode", Some(s.mode.to_string())),
            ("synth_shift_at", Some(s.shift_at.to_string())),
            ("synth_strength", Some(s.strength.to_string())),
            ("synth_block_mass", Some(s.block_mass.to_string())),
            ("synth_alpha", Some(s.alpha.to_string())),
            ("synth_gamma", Some(s.gamma.to_string())),
            ("synth_lexicon_words", Some(s.lexicon_words.to_string())),
            ("synth_evaluate", Some(s.evaluate.to_string())),
            ("synth_threshold", Some(s.threshold.to_string())),
        ]);
        out.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))).collect()
    }

    /// The configuration as a config file that reproduces it.
    pub fn to_text(&self) -> String {
        let mut text = String::from("# effective djst configuration\n");
        for (k, v) in self.entries() {
            text.push_str(k);
            text.push_str(" = ");
            text.push_str(&v);
            text.push('\n');
        }
        text
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.corpus.clone().unwrap_or_else(|| self.out.join("corpus.txt"))
    }

    pub fn trend_path(&self) -> PathBuf {
        self.trend.clone().unwrap_or_else(|| self.out.join("trend.csv"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_follows_cluster_count_unless_set() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("topics = 10\n").unwrap();
        cfg.finalize().unwrap();
        assert_eq!(cfg.hyper.alpha_init, 2.5);

        let mut cfg = RunConfig::default();
        cfg.apply_text("alpha_init = 0.7\ntopics = 10").unwrap();
        cfg.finalize().unwrap();
        assert_eq!(cfg.hyper.alpha_init, 0.7);
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("# comment\n\nseed = 42\nmu = uniform\ncorpus_dir = data/x\nsynth_mode = shift\ngamma = 0.3\n")
            .unwrap();
        cfg.finalize().unwrap();
        let mut back = RunConfig::default();
        back.apply_text(&cfg.to_text()).unwrap();
        back.finalize().unwrap();
        assert_eq!(back.to_text(), cfg.to_text());
        assert_eq!(back.hyper, cfg.hyper);
        assert_eq!(back.synth, cfg.synth);
        assert_eq!(back.corpus_dir, cfg.corpus_dir);
        assert!(cfg.to_text().contains("seed = 42\n"));
        assert!(!cfg.to_text().contains("expert_labels"));
    }

    #[test]
    fn every_key_is_settable_and_written() {
        let cfg = RunConfig {
            corpus_dir: Some("a".into()),
            corpus: Some("b".into()),
            positive_lexicon: Some("c".into()),
            negative_lexicon: Some("d".into()),
            stopwords: Some("e".into()),
            trend: Some("f".into()),
            expert_labels: Some("g".into()),
            ..RunConfig::default()
        };
        let written: Vec<&str> = cfg.entries().into_iter().map(|(k, _)| k).collect();
        assert_eq!(written, RunConfig::keys());
        let mut scratch = RunConfig::default();
        for (k, v) in cfg.entries() {
            scratch.set(k, &v).unwrap();
        }
    }

    #[test]
    fn rejects_bad_input() {
        let mut cfg = RunConfig::default();
        assert!(cfg.apply_text("nonsense").is_err());
        assert!(cfg.apply_text("unknown_key = 1").is_err());
        assert!(cfg.apply_text("sweeps = many").is_err());
        let mut cfg = RunConfig::default();
        cfg.apply_text("burn_in = 5000").unwrap();
        assert!(cfg.finalize().is_err());
        let mut cfg = RunConfig::default();
        cfg.apply_text("chains = 0").unwrap();
        assert!(cfg.finalize().is_err());
    }
}
