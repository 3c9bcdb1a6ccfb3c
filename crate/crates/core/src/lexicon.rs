//! Word prior polarity and the label-by-word transformation matrix that
//! injects it into the topic-word Dirichlet priors.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::corpus::{tokenize, Vocabulary};

pub const DEFAULT_POSITIVE: &str = include_str!("../data/lexicon/positive.txt");
pub const DEFAULT_NEGATIVE: &str = include_str!("../data/lexicon/negative.txt");

/// λ entry for a lexicon word on its own label's row.
pub const LAMBDA_MATCHED: f64 = 0.9;
/// λ entry for a lexicon word on any other row.
pub const LAMBDA_OPPOSED: f64 = 0.05;
/// λ entry for words outside the lexicon.
pub const LAMBDA_NEUTRAL: f64 = 1.0;

/// Sentiment label. The discriminant is the row index used by every
/// label-indexed table in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sentiment {
    Positive = 0,
    Negative = 1,
}

impl Sentiment {
    pub const ALL: [Sentiment; 2] = [Sentiment::Positive, Sentiment::Negative];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Single-letter code used in trend and expert-label files.
    pub fn code(self) -> char {
        match self {
            Sentiment::Positive => 'P',
            Sentiment::Negative => 'N',
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code.trim() {
            "P" | "p" => Some(Sentiment::Positive),
            "N" | "n" => Some(Sentiment::Negative),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Sentiment::Positive => "positive",
            Sentiment::Negative => "negative",
        }
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("word {0:?} is listed as both positive and negative")]
    ConflictingEntry(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Prior sentiment of individual words.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    polarity: BTreeMap<String, Sentiment>,
}

/// Normalizes one lexicon line. `Ok(None)` for blanks and comments,
/// `Err(())` for entries that preprocess to more than one token.
fn normalize_entry(line: &str) -> Result<Option<String>, ()> {
    let line = line.trim();
    if line.is_empty() || line.starts_with(';') {
        return Ok(None);
    }
    let mut toks = tokenize(line, &HashSet::new());
    match toks.len() {
        0 => Ok(None),
        1 => Ok(toks.pop()),
        _ => Err(()),
    }
}

impl Lexicon {
    /// Builds a lexicon from the contents of a positive and a negative word
    /// list. Multiword entries are dropped with a warning.
    pub fn parse(positive: &str, negative: &str) -> Result<Self, LexiconError> {
        let mut polarity = BTreeMap::new();
        for (text, label) in [(positive, Sentiment::Positive), (negative, Sentiment::Negative)] {
            for line in text.lines() {
                let word = match normalize_entry(line) {
                    Ok(Some(w)) => w,
                    Ok(None) => continue,
                    Err(()) => {
                        log::warn!("dropping multiword lexicon entry {:?}", line.trim());
                        continue;
                    }
                };
                match polarity.insert(word.clone(), label) {
                    Some(prev) if prev != label => return Err(LexiconError::ConflictingEntry(word)),
                    _ => {}
                }
            }
        }
        Ok(Self { polarity })
    }

    /// The general-purpose English opinion lists bundled with the crate.
    pub fn default_english() -> Self {
        Self::parse(DEFAULT_POSITIVE, DEFAULT_NEGATIVE).expect("bundled lexicon is consistent")
    }

    pub fn from_words<'a>(
        positive: impl IntoIterator<Item = &'a str>,
        negative: impl IntoIterator<Item = &'a str>,
    ) -> Result<Self, LexiconError> {
        let pos: Vec<&str> = positive.into_iter().collect();
        let neg: Vec<&str> = negative.into_iter().collect();
        Self::parse(&pos.join("\n"), &neg.join("\n"))
    }

    /// The prior label of `word`, if it has one.
    pub fn get(&self, word: &str) -> Option<Sentiment> {
        self.polarity.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.polarity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polarity.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Sentiment)> {
        self.polarity.iter().map(|(w, s)| (w.as_str(), *s))
    }
}

pub fn load_lexicon(positive: &Path, negative: &Path) -> Result<Lexicon, LexiconError> {
    let read = |p: &Path| {
        fs::read_to_string(p).map_err(|source| LexiconError::Io {
            path: p.to_owned(),
            source,
        })
    };
    Lexicon::parse(&read(positive)?, &read(negative)?)
}

/// Row-major `labels × width` multiplier applied to the symmetric base prior.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaMatrix {
    labels: usize,
    width: usize,
    values: Vec<f64>,
}

impl LambdaMatrix {
    pub fn ones(labels: usize, width: usize) -> Self {
        Self {
            labels,
            width,
            values: vec![LAMBDA_NEUTRAL; labels * width],
        }
    }

    /// Rebuilds a matrix from its row-major values.
    pub fn from_rows(labels: usize, width: usize, values: Vec<f64>) -> Option<Self> {
        (values.len() == labels * width).then_some(Self {
            labels,
            width,
            values,
        })
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, label: usize, word: usize) -> f64 {
        self.values[label * self.width + word]
    }

    pub fn row(&self, label: usize) -> &[f64] {
        &self.values[label * self.width..(label + 1) * self.width]
    }

    /// True when the word carries lexicon information, i.e. its column is not
    /// all ones.
    pub fn has_prior(&self, word: usize) -> bool {
        (0..self.labels).any(|l| self.get(l, word) != LAMBDA_NEUTRAL)
    }
}

/// λ for `vocab`: lexicon words get 0.9 on their own label's row and 0.05 on
/// every other row; all other columns stay at 1.
pub fn build_lambda(lexicon: &Lexicon, vocab: &Vocabulary, labels: usize) -> LambdaMatrix {
    let mut lambda = LambdaMatrix::ones(labels, vocab.len());
    for (w, term) in vocab.terms().iter().enumerate() {
        let Some(prior) = lexicon.get(term) else {
            continue;
        };
        for l in 0..labels {
            lambda.values[l * lambda.width + w] = if l == prior.index() {
                LAMBDA_MATCHED
            } else {
                LAMBDA_OPPOSED
            };
        }
    }
    lambda
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_vocabulary;
    use proptest::prelude::*;

    #[test]
    fn direct_load() {
        let lex = Lexicon::from_words(["good"], ["pain"]).unwrap();
        assert_eq!(lex.get("good"), Some(Sentiment::Positive));
        assert_eq!(lex.get("pain"), Some(Sentiment::Negative));
        assert_eq!(lex.get("table"), None);
    }

    #[test]
    fn conflicting_entry_is_rejected() {
        let err = Lexicon::from_words(["fine", "good"], ["fine"]).unwrap_err();
        assert!(matches!(err, LexiconError::ConflictingEntry(w) if w == "fine"));
    }

    #[test]
    fn empty_files_and_comments() {
        assert!(Lexicon::parse("", "").unwrap().is_empty());
        let lex = Lexicon::parse("; header\n\nGood\n", ";c\nbad\nwell being\n").unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.get("good"), Some(Sentiment::Positive));
        assert_eq!(lex.get("well"), None);
    }

    #[test]
    fn bundled_lexicon_loads() {
        let lex = Lexicon::default_english();
        assert!(lex.len() > 200);
        assert_eq!(lex.get("pain"), Some(Sentiment::Negative));
        assert_eq!(lex.get("happy"), Some(Sentiment::Positive));
    }

    #[test]
    fn lambda_values() {
        let vocab = build_vocabulary(&[vec!["pain", "table", "good"]]);
        let lex = Lexicon::from_words(["good"], ["pain"]).unwrap();
        let lambda = build_lambda(&lex, &vocab, 2);
        let neg = Sentiment::Negative.index();
        let pos = Sentiment::Positive.index();
        assert_eq!(lambda.get(neg, 0), 0.9);
        assert_eq!(lambda.get(pos, 0), 0.05);
        assert_eq!((lambda.get(pos, 1), lambda.get(neg, 1)), (1.0, 1.0));
        assert_eq!((lambda.get(pos, 2), lambda.get(neg, 2)), (0.9, 0.05));
        assert!(lambda.has_prior(0) && !lambda.has_prior(1));
    }

    #[test]
    fn empty_lexicon_gives_all_ones() {
        let vocab = build_vocabulary(&[vec!["a", "b", "c"]]);
        let lambda = build_lambda(&Lexicon::default(), &vocab, 2);
        assert_eq!(lambda, LambdaMatrix::ones(2, 3));
    }

    proptest! {
        #[test]
        fn lambda_depends_only_on_membership(
            pos in proptest::collection::btree_set("[a-f]", 0..4),
            neg in proptest::collection::btree_set("[g-l]", 0..4),
        ) {
            let terms: Vec<String> = ('a'..='n').map(|c| c.to_string()).collect();
            let vocab = build_vocabulary(&[terms]);
            let fwd = Lexicon::from_words(pos.iter().map(String::as_str), neg.iter().map(String::as_str)).unwrap();
            let rev = Lexicon::from_words(pos.iter().rev().map(String::as_str), neg.iter().rev().map(String::as_str)).unwrap();
            let a = build_lambda(&fwd, &vocab, 2);
            prop_assert_eq!(&a, &build_lambda(&rev, &vocab, 2));
            for w in 0..vocab.len() {
                let col = (a.get(0, w), a.get(1, w));
                if fwd.get(vocab.term(w).unwrap()).is_some() {
                    prop_assert!(col == (0.9, 0.05) || col == (0.05, 0.9));
                } else {
                    prop_assert_eq!(col, (1.0, 1.0));
                }
            }
        }
    }
}
