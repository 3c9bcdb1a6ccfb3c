//! Transcript ingestion: preprocessing, vocabulary construction, and the
//! ordered epoch stream (one epoch per session).

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

/// English stopword list shipped with the crate.
pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

/// Default session chunk length in tokens.
pub const DEFAULT_CHUNK_TOKENS: usize = 1000;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("every session is empty after preprocessing")]
    AllSessionsEmpty,
    #[error("no session_<NN>.txt files found in {0}")]
    NoSessions(PathBuf),
    #[error("invalid session label {0:?}: labels must be non-empty and contain no whitespace")]
    InvalidLabel(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("corpus snapshot line {line}: {msg}")]
    Snapshot { line: usize, msg: String },
}

impl CorpusError {
    fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CorpusError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Parses a stopword list: one word per line, blank lines ignored,
/// everything lowercased.
pub fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn default_stopwords() -> HashSet<String> {
    parse_stopwords(DEFAULT_STOPWORDS)
}

pub fn load_stopwords(path: &Path) -> Result<HashSet<String>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    Ok(parse_stopwords(&text))
}

/// Lowercases `raw`, splits it on every non-alphanumeric character and drops
/// stopwords. Surviving tokens keep their original order.
pub fn tokenize(raw: &str, stopwords: &HashSet<String>) -> Vec<String> {
    // Lowercase before splitting: some case mappings emit combining marks,
    // which must act as separators too.
    raw.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && !stopwords.contains(*t))
        .map(str::to_owned)
        .collect()
}

/// Bijection between terms and dense ids `0..len()`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    term_to_id: HashMap<String, usize>,
    id_to_term: Vec<String>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `term`, assigning the next free id if unseen.
    pub fn intern(&mut self, term: &str) -> usize {
        if let Some(&id) = self.term_to_id.get(term) {
            return id;
        }
        let id = self.id_to_term.len();
        self.id_to_term.push(term.to_owned());
        self.term_to_id.insert(term.to_owned(), id);
        id
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.term_to_id.get(term).copied()
    }

    pub fn term(&self, id: usize) -> Option<&str> {
        self.id_to_term.get(id).map(String::as_str)
    }

    /// Terms in id order.
    pub fn terms(&self) -> &[String] {
        &self.id_to_term
    }

    pub fn len(&self) -> usize {
        self.id_to_term.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_term.is_empty()
    }
}

/// Builds a vocabulary over preprocessed token lists, assigning ids in
/// first-occurrence order.
pub fn build_vocabulary<S: AsRef<str>>(documents: &[Vec<S>]) -> Vocabulary {
    let mut vocab = Vocabulary::new();
    for token in documents.iter().flatten() {
        vocab.intern(token.as_ref());
    }
    vocab
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub epoch: usize,
    /// Vocabulary ids in text order.
    pub tokens: Vec<usize>,
}

impl Document {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// One time slice of the stream. `label` keeps the original session name so
/// gaps in the session numbering survive re-indexing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Epoch {
    pub label: String,
    pub documents: Vec<Document>,
}

impl Epoch {
    pub fn token_count(&self) -> usize {
        self.documents.iter().map(Document::len).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EpochStream {
    pub epochs: Vec<Epoch>,
}

impl EpochStream {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.epochs.iter().map(Epoch::token_count).sum()
    }
}

/// A vocabulary together with the stream that indexes into it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub vocab: Vocabulary,
    pub stream: EpochStream,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IngestWarning {
    /// The session produced no tokens; its epoch is kept with zero documents.
    EmptySession(String),
}

fn valid_label(label: &str) -> bool {
    !label.is_empty() && !label.chars().any(char::is_whitespace)
}

/// Preprocesses each `(label, raw_text)` session into one epoch, in input
/// order, over a single global vocabulary.
///
/// Sessions are split into documents of `chunk_tokens` tokens (the last chunk
/// may be shorter); `chunk_tokens == 0` keeps each session as one document.
pub fn ingest<L, T>(
    sessions: &[(L, T)],
    stopwords: &HashSet<String>,
    chunk_tokens: usize,
) -> Result<(Corpus, Vec<IngestWarning>), CorpusError>
where
    L: AsRef<str>,
    T: AsRef<str>,
{
    let tokenized: Vec<Vec<String>> = sessions
        .iter()
        .map(|(_, text)| tokenize(text.as_ref(), stopwords))
        .collect();
    if let Some((label, _)) = sessions.iter().find(|(l, _)| !valid_label(l.as_ref())) {
        return Err(CorpusError::InvalidLabel(label.as_ref().to_owned()));
    }
    if tokenized.iter().all(Vec::is_empty) {
        return Err(CorpusError::AllSessionsEmpty);
    }

    let vocab = build_vocabulary(&tokenized);
    let mut warnings = Vec::new();
    let mut epochs = Vec::with_capacity(sessions.len());
    for (epoch, ((label, _), tokens)) in sessions.iter().zip(&tokenized).enumerate() {
        let label = label.as_ref();
        if tokens.is_empty() {
            log::warn!("session {label} is empty after preprocessing");
            warnings.push(IngestWarning::EmptySession(label.to_owned()));
        }
        let ids: Vec<usize> = tokens
            .iter()
            .map(|t| vocab.id(t).expect("vocabulary built from these tokens"))
            .collect();
        let chunk = if chunk_tokens == 0 {
            ids.len().max(1)
        } else {
            chunk_tokens
        };
        let documents = ids
            .chunks(chunk)
            .enumerate()
            .map(|(i, c)| Document {
                doc_id: format!("{label}_{i:03}"),
                epoch,
                tokens: c.to_vec(),
            })
            .collect();
        epochs.push(Epoch {
            label: label.to_owned(),
            documents,
        });
    }

    Ok((
        Corpus {
            vocab,
            stream: EpochStream { epochs },
        },
        warnings,
    ))
}

/// Keeps client speech from a transcript: lines prefixed `T:` (therapist) are
/// dropped, a leading `C:` is stripped, unprefixed lines pass through.
pub fn client_text(transcript: &str) -> String {
    let mut out = String::with_capacity(transcript.len());
    for line in transcript.lines() {
        let trimmed = line.trim_start();
        if trimmed.starts_with("T:") {
            continue;
        }
        let kept = trimmed.strip_prefix("C:").unwrap_or(line);
        out.push_str(kept);
        out.push('\n');
    }
    out
}

/// Parses `session_<NN>.txt` into its session label (`NN` without leading
/// zeros) and numeric sort key.
fn session_label(file_name: &str) -> Option<(String, u64)> {
    let nn = file_name.strip_prefix("session_")?.strip_suffix(".txt")?;
    if nn.is_empty() || !nn.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let n: u64 = nn.parse().ok()?;
    Some((n.to_string(), n))
}

/// Reads every `session_<NN>.txt` in `dir`, ordered by session number, with
/// therapist turns removed.
pub fn read_session_dir(dir: &Path) -> Result<Vec<(String, String)>, CorpusError> {
    let entries = fs::read_dir(dir).map_err(|e| CorpusError::io(dir, e))?;
    let mut found = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CorpusError::io(dir, e))?;
        let name = entry.file_name();
        let Some((label, key)) = name.to_str().and_then(session_label) else {
            continue;
        };
        found.push((key, label, entry.path()));
    }
    if found.is_empty() {
        return Err(CorpusError::NoSessions(dir.to_owned()));
    }
    found.sort_by_key(|(key, _, _)| *key);
    found
        .into_iter()
        .map(|(_, label, path)| {
            let raw = fs::read_to_string(&path).map_err(|e| CorpusError::io(&path, e))?;
            Ok((label, client_text(&raw)))
        })
        .collect()
}

/// Writes the line-oriented corpus snapshot.
///
/// ```text
/// V <size>
/// <term>\t<id>            (one per vocabulary entry, id order)
/// EPOCH <t> <label>       (one per epoch, before its documents)
/// DOC <t> <doc_id> <label>
/// <space-separated token ids>
/// ```
pub fn write_snapshot<W: Write>(corpus: &Corpus, mut out: W) -> io::Result<()> {
    writeln!(out, "V {}", corpus.vocab.len())?;
    for (id, term) in corpus.vocab.terms().iter().enumerate() {
        writeln!(out, "{term}\t{id}")?;
    }
    for (t, epoch) in corpus.stream.epochs.iter().enumerate() {
        writeln!(out, "EPOCH {t} {}", epoch.label)?;
        for doc in &epoch.documents {
            writeln!(out, "DOC {t} {} {}", doc.doc_id, epoch.label)?;
            let mut first = true;
            for id in &doc.tokens {
                if !first {
                    out.write_all(b" ")?;
                }
                write!(out, "{id}")?;
                first = false;
            }
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn save_snapshot(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let file = fs::File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut w = io::BufWriter::new(file);
    write_snapshot(corpus, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CorpusError::io(path, e))
}

pub fn load_snapshot(path: &Path) -> Result<Corpus, CorpusError> {
    let file = fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
    read_snapshot(io::BufReader::new(file)).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::io(path, source),
        other => other,
    })
}

pub fn read_snapshot<R: BufRead>(reader: R) -> Result<Corpus, CorpusError> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| -> Result<Option<(usize, String)>, CorpusError> {
        match lines.next() {
            None => Ok(None),
            Some((n, Ok(l))) => Ok(Some((n, l))),
            Some((_, Err(e))) => Err(CorpusError::io(format!("<{what}>"), e)),
        }
    };
    let bad = |line: usize, msg: String| CorpusError::Snapshot { line, msg };

    let (n, header) = next("header")?.ok_or_else(|| bad(1, "missing `V <size>` header".into()))?;
    let size: usize = header
        .strip_prefix("V ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| bad(n, format!("expected `V <size>`, got {header:?}")))?;

    let mut vocab = Vocabulary::new();
    for expected in 0..size {
        let (n, line) = next("vocabulary")?
            .ok_or_else(|| bad(n + expected + 1, "vocabulary truncated".into()))?;
        let (term, id) = line
            .split_once('\t')
            .ok_or_else(|| bad(n, format!("expected `term<TAB>id`, got {line:?}")))?;
        let id: usize = id
            .parse()
            .map_err(|_| bad(n, format!("bad vocabulary id {id:?}")))?;
        if id != expected || vocab.id(term).is_some() {
            return Err(bad(n, format!("vocabulary ids must be dense and unique (term {term:?})")));
        }
        vocab.intern(term);
    }

    let mut epochs: Vec<Epoch> = Vec::new();
    while let Some((n, line)) = next("documents")? {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(' ').collect();
        match fields.as_slice() {
            ["EPOCH", t, label] => {
                let t: usize = t.parse().map_err(|_| bad(n, format!("bad epoch {t:?}")))?;
                if t != epochs.len() {
                    return Err(bad(n, format!("epoch {t} out of order")));
                }
                epochs.push(Epoch {
                    label: (*label).to_owned(),
                    documents: Vec::new(),
                });
            }
            ["DOC", t, doc_id, label] => {
                let t: usize = t.parse().map_err(|_| bad(n, format!("bad epoch {t:?}")))?;
                let count = epochs.len();
                let epoch = match epochs.last_mut() {
                    Some(e) if t + 1 == count && e.label == *label => e,
                    _ => return Err(bad(n, format!("document {doc_id} outside its EPOCH block"))),
                };
                let (m, body) = next("tokens")?
                    .ok_or_else(|| bad(n + 1, format!("missing token line for {doc_id}")))?;
                let tokens = body
                    .split_ascii_whitespace()
                    .map(|s| match s.parse::<usize>() {
                        Ok(id) if id < size => Ok(id),
                        _ => Err(bad(m, format!("bad token id {s:?}"))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                epoch.documents.push(Document {
                    doc_id: (*doc_id).to_owned(),
                    epoch: t,
                    tokens,
                });
            }
            _ => return Err(bad(n, format!("unrecognized line {line:?}"))),
        }
    }

    Ok(Corpus {
        vocab,
        stream: EpochStream { epochs },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stop(words: &[&str]) -> HashSet<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn tokenize_applies_all_three_rules() {
        let toks = tokenize("I'm suffering real pain.", &stop(&["i", "m", "am"]));
        assert_eq!(toks, vec!["suffering", "real", "pain"]);
    }

    #[test]
    fn tokenize_edge_cases() {
        assert!(tokenize("", &stop(&[])).is_empty());
        assert_eq!(tokenize("ABC abc", &stop(&[])), vec!["abc", "abc"]);
        assert_eq!(tokenize("well-being,2nd", &stop(&[])), vec!["well", "being", "2nd"]);
    }

    #[test]
    fn default_stopwords_are_lowercase_and_nonempty() {
        let s = default_stopwords();
        assert!(s.contains("the") && s.contains("i"));
        assert!(s.iter().all(|w| *w == w.to_lowercase()));
    }

    #[test]
    fn vocabulary_first_occurrence_order() {
        let v = build_vocabulary(&[vec!["a", "b"], vec!["b", "c"]]);
        assert_eq!(v.len(), 3);
        assert_eq!((v.id("a"), v.id("b"), v.id("c")), (Some(0), Some(1), Some(2)));
        let empty: Vec<Vec<String>> = Vec::new();
        assert_eq!(build_vocabulary(&empty).len(), 0);
    }

    #[test]
    fn ingest_one_epoch_per_session() {
        let sessions: Vec<(String, String)> = (1..=5)
            .map(|i| (i.to_string(), format!("word{i} shared text")))
            .collect();
        let (c, w) = ingest(&sessions, &stop(&[]), 1000).unwrap();
        assert!(w.is_empty());
        assert_eq!(c.stream.len(), 5);
        for (t, e) in c.stream.epochs.iter().enumerate() {
            assert!(e.documents.iter().all(|d| d.epoch == t));
        }
    }

    #[test]
    fn ingest_keeps_original_labels_for_gappy_sessions() {
        let sessions: Vec<(String, String)> = [1, 3, 5, 7, 9, 11]
            .iter()
            .map(|i| (i.to_string(), "some words here".to_owned()))
            .collect();
        let (c, _) = ingest(&sessions, &stop(&[]), 0).unwrap();
        let labels: Vec<&str> = c.stream.epochs.iter().map(|e| e.label.as_str()).collect();
        assert_eq!(labels, vec!["1", "3", "5", "7", "9", "11"]);
    }

    #[test]
    fn ingest_chunks_long_sessions() {
        let text: String = (0..2500).map(|i| format!("w{} ", i % 97)).collect();
        let (c, _) = ingest(&[("1", text.as_str())], &stop(&[]), 1000).unwrap();
        let lens: Vec<usize> = c.stream.epochs[0].documents.iter().map(Document::len).collect();
        assert_eq!(lens, vec![1000, 1000, 500]);

        let (c, _) = ingest(&[("1", text.as_str())], &stop(&[]), 0).unwrap();
        assert_eq!(c.stream.epochs[0].documents.len(), 1);
    }

    #[test]
    fn ingest_empty_sessions() {
        let err = ingest(&[("1", ""), ("2", "the")], &stop(&["the"]), 10).unwrap_err();
        assert!(matches!(err, CorpusError::AllSessionsEmpty));

        let (c, w) = ingest(&[("1", "hello"), ("2", "...")], &stop(&[]), 10).unwrap();
        assert_eq!(w, vec![IngestWarning::EmptySession("2".into())]);
        assert!(c.stream.epochs[1].documents.is_empty());
        assert_eq!(c.vocab.len(), 1);
    }

    #[test]
    fn ingest_rejects_labels_with_whitespace() {
        let err = ingest(&[("session one", "hello")], &stop(&[]), 10).unwrap_err();
        assert!(matches!(err, CorpusError::InvalidLabel(_)));
    }

    #[test]
    fn client_text_drops_therapist_turns() {
        let t = "C: I feel bad.\nT: Tell me more.\nunprefixed line\n  T: indented therapist";
        assert_eq!(client_text(t), " I feel bad.\nunprefixed line\n");
    }

    #[test]
    fn session_file_names() {
        assert_eq!(session_label("session_01.txt"), Some(("1".into(), 1)));
        assert_eq!(session_label("session_11.txt"), Some(("11".into(), 11)));
        assert_eq!(session_label("session_.txt"), None);
        assert_eq!(session_label("notes.txt"), None);
        assert_eq!(session_label("session_1a.txt"), None);
    }

    #[test]
    fn snapshot_round_trip_with_empty_epoch() {
        let (c, _) = ingest(
            &[("1", "alpha beta gamma"), ("2", ""), ("3", "beta delta")],
            &stop(&[]),
            2,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_snapshot(&c, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("V 4\nalpha\t0\n"));
        assert!(text.contains("DOC 0 1_000 1\n0 1\n"));
        assert!(text.contains("EPOCH 1 2\nEPOCH 2 3\n"));
        let back = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn snapshot_rejects_out_of_range_ids() {
        let text = "V 1\na\t0\nEPOCH 0 1\nDOC 0 d 1\n0 1\n";
        assert!(matches!(
            read_snapshot(text.as_bytes()),
            Err(CorpusError::Snapshot { line: 5, .. })
        ));
    }

    proptest! {
        #[test]
        fn tokenize_is_idempotent(raw in "\\PC{0,80}") {
            let s = stop(&["the", "and"]);
            let once = tokenize(&raw, &s);
            let twice = tokenize(&once.join(" "), &s);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn tokens_are_lowercase_alphanumeric(raw in "\\PC{0,80}") {
            for t in tokenize(&raw, &stop(&[])) {
                prop_assert!(t.chars().all(char::is_alphanumeric));
                prop_assert_eq!(t.to_lowercase(), t.clone());
            }
        }

        #[test]
        fn vocabulary_is_a_dense_bijection(docs in proptest::collection::vec(
            proptest::collection::vec("[a-e]{1,2}", 0..6), 0..5)) {
            let v = build_vocabulary(&docs);
            for (id, term) in v.terms().iter().enumerate() {
                prop_assert_eq!(v.id(term), Some(id));
            }
            for t in docs.iter().flatten() {
                prop_assert_eq!(v.term(v.id(t).unwrap()), Some(t.as_str()));
            }
        }

        #[test]
        fn ingest_conserves_tokens_and_is_deterministic(
            texts in proptest::collection::vec("[a-d ]{0,40}", 1..5),
            chunk in 0usize..7,
        ) {
            let sessions: Vec<(String, String)> = texts
                .iter()
                .enumerate()
                .map(|(i, t)| (format!("{}", i + 1), format!("x {t}")))
                .collect();
            let s = stop(&[]);
            let (a, _) = ingest(&sessions, &s, chunk).unwrap();
            let (b, _) = ingest(&sessions, &s, chunk).unwrap();
            let expected: usize = sessions.iter().map(|(_, t)| tokenize(t, &s).len()).sum();
            prop_assert_eq!(a.stream.token_count(), expected);
            prop_assert_eq!(a, b);
        }
    }
}
