//! Per-session sentiment trends, topic word lists and agreement with
//! expert-assigned session labels.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, Read, Write};

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Document, Vocabulary};
use crate::inference::Posterior;
use crate::lexicon::Sentiment;

pub const NO_DATA: &str = "no data";
pub const TREND_HEADER: [&str; 5] = ["session", "p_positive", "p_negative", "dominant", "tokens"];
/// Default number of words per topic summary.
pub const DEFAULT_TOP_K: usize = 20;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("epoch has no tokens")]
    NoData,
    #[error("no session has both a model and an expert label")]
    NothingComparable,
    #[error("posterior covers {posterior} documents but the epoch has {epoch}")]
    DocumentCount { posterior: usize, epoch: usize },
    #[error("line {line}: {msg}")]
    Malformed { line: u64, msg: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Session-level classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominant {
    Label(Sentiment),
    NoData,
}

impl Dominant {
    pub fn label(self) -> Option<Sentiment> {
        match self {
            Dominant::Label(s) => Some(s),
            Dominant::NoData => None,
        }
    }
}

impl fmt::Display for Dominant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dominant::Label(s) => write!(f, "{}", s.code()),
            Dominant::NoData => f.write_str(NO_DATA),
        }
    }
}

/// Which label wins an exact tie between positive and negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    Negative,
    Positive,
}

impl std::str::FromStr for TieBreak {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "negative" | "N" => Ok(TieBreak::Negative),
            "positive" | "P" => Ok(TieBreak::Positive),
            other => Err(format!("unknown tie break {other:?} (negative | positive)")),
        }
    }
}

impl fmt::Display for TieBreak {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TieBreak::Negative => "negative",
            TieBreak::Positive => "positive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendPoint {
    pub session_label: String,
    /// Epoch-level sentiment distribution, indexed by [`Sentiment::index`].
    /// `None` for sessions without data, or when read back from a file that
    /// only carries labels.
    pub p_by_label: Option<Vec<f64>>,
    pub dominant: Dominant,
    pub token_count: usize,
}

/// Token-weighted mean of the documents' sentiment mixes.
pub fn aggregate_epoch_sentiment(posterior: &Posterior, docs: &[Document]) -> Result<Vec<f64>, ReportError> {
    if posterior.num_docs() != docs.len() {
        return Err(ReportError::DocumentCount {
            posterior: posterior.num_docs(),
            epoch: docs.len(),
        });
    }
    let total: usize = docs.iter().map(Document::len).sum();
    if total == 0 {
        return Err(ReportError::NoData);
    }
    let mut p = vec![0.0; posterior.labels()];
    for (d, doc) in docs.iter().enumerate() {
        let weight = doc.len() as f64 / total as f64;
        for (acc, &x) in p.iter_mut().zip(posterior.pi(d)) {
            *acc += weight * x;
        }
    }
    Ok(p)
}

/// Larger of the positive and negative probabilities; exact ties go to
/// `tie`.
pub fn dominant_label(p: &[f64], tie: TieBreak) -> Sentiment {
    let pos = p[Sentiment::Positive.index()];
    let neg = p[Sentiment::Negative.index()];
    if neg > pos {
        Sentiment::Negative
    } else if pos > neg {
        Sentiment::Positive
    } else {
        match tie {
            TieBreak::Negative => Sentiment::Negative,
            TieBreak::Positive => Sentiment::Positive,
        }
    }
}

/// Trend entry for one epoch; `posterior` is `None` for epochs that were
/// not sampled.
pub fn trend_point(
    session_label: &str,
    posterior: Option<&Posterior>,
    docs: &[Document],
    tie: TieBreak,
) -> Result<TrendPoint, ReportError> {
    let token_count = docs.iter().map(Document::len).sum();
    let p = match posterior.map(|p| aggregate_epoch_sentiment(p, docs)) {
        Some(Ok(p)) => Some(p),
        None | Some(Err(ReportError::NoData)) => None,
        Some(Err(e)) => return Err(e),
    };
    let dominant = p
        .as_deref()
        .map_or(Dominant::NoData, |p| Dominant::Label(dominant_label(p, tie)));
    Ok(TrendPoint {
        session_label: session_label.to_owned(),
        p_by_label: p,
        dominant,
        token_count,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordWeight {
    pub term: String,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicSummary {
    pub label: usize,
    pub topic: usize,
    pub top_words: Vec<WordWeight>,
}

/// The `k` most probable terms of a word distribution; ties keep vocabulary
/// order.
pub fn top_words(phi: &[f64], vocab: &Vocabulary, k: usize) -> Vec<WordWeight> {
    let mut ids: Vec<usize> = (0..phi.len()).collect();
    ids.sort_by(|&a, &b| phi[b].total_cmp(&phi[a]).then(a.cmp(&b)));
    ids.into_iter()
        .take(k)
        .map(|w| WordWeight {
            term: vocab.term(w).unwrap_or("<unknown>").to_owned(),
            p: phi[w],
        })
        .collect()
}

/// Top words of every (label, topic) cluster of a posterior.
pub fn summarize_topics(posterior: &Posterior, vocab: &Vocabulary, k: usize) -> Vec<TopicSummary> {
    let mut out = Vec::with_capacity(posterior.labels() * posterior.topics());
    for label in 0..posterior.labels() {
        for topic in 0..posterior.topics() {
            out.push(TopicSummary {
                label,
                topic,
                top_words: top_words(posterior.phi(label, topic), vocab, k),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionComparison {
    pub session_label: String,
    pub model: Option<Sentiment>,
    pub expert: Option<Sentiment>,
}

impl SessionComparison {
    /// `None` when either side is missing.
    pub fn matches(&self) -> Option<bool> {
        Some(self.model? == self.expert?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpertComparison {
    pub per_session: Vec<SessionComparison>,
    pub compared: usize,
    pub matches: usize,
    pub accuracy: f64,
}

/// Aligns two labelled session sequences by session label and scores the
/// sessions where both sides have a label. Sessions are listed in the order
/// of `model`, followed by sessions only `expert` mentions.
pub fn compare_to_expert(
    model: &[(String, Option<Sentiment>)],
    expert: &[(String, Option<Sentiment>)],
) -> Result<ExpertComparison, ReportError> {
    let expert_by_label: HashMap<&str, Option<Sentiment>> =
        expert.iter().map(|(s, l)| (s.as_str(), *l)).collect();
    let mut per_session: Vec<SessionComparison> = model
        .iter()
        .map(|(s, l)| SessionComparison {
            session_label: s.clone(),
            model: *l,
            expert: expert_by_label.get(s.as_str()).copied().flatten(),
        })
        .collect();
    let model_labels: std::collections::HashSet<&str> = model.iter().map(|(s, _)| s.as_str()).collect();
    per_session.extend(
        expert
            .iter()
            .filter(|(s, _)| !model_labels.contains(s.as_str()))
            .map(|(s, l)| SessionComparison {
                session_label: s.clone(),
                model: None,
                expert: *l,
            }),
    );

    let scored: Vec<bool> = per_session.iter().filter_map(SessionComparison::matches).collect();
    if scored.is_empty() {
        return Err(ReportError::NothingComparable);
    }
    let matches = scored.iter().filter(|&&m| m).count();
    Ok(ExpertComparison {
        compared: scored.len(),
        matches,
        accuracy: matches as f64 / scored.len() as f64,
        per_session,
    })
}

/// Writes the trend table: `session,p_positive,p_negative,dominant,tokens`,
/// probabilities to six decimals, empty probability fields for sessions
/// without data.
pub fn emit_trend_csv<W: Write>(trend: &[TrendPoint], out: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TREND_HEADER)?;
    for point in trend {
        let (pos, neg) = match &point.p_by_label {
            Some(p) => (
                format!("{:.6}", p[Sentiment::Positive.index()]),
                format!("{:.6}", p[Sentiment::Negative.index()]),
            ),
            None => (String::new(), String::new()),
        };
        w.write_record([
            point.session_label.as_str(),
            &pos,
            &neg,
            &point.dominant.to_string(),
            &point.token_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn row_line(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

/// Reads a trend table back. Rows may omit the probabilities as long as they
/// carry a dominant label.
pub fn parse_trend_csv<R: Read>(input: R) -> Result<Vec<TrendPoint>, ReportError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != TREND_HEADER {
        return Err(ReportError::Malformed {
            line: 1,
            msg: format!("expected header {}", TREND_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        let line = row_line(&record);
        let bad = |msg: String| ReportError::Malformed { line, msg };
        let prob = |s: &str| -> Result<Option<f64>, ReportError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(format!("bad probability {s:?}")))
            }
        };
        let p_by_label = match (prob(&record[1])?, prob(&record[2])?) {
            (Some(pos), Some(neg)) => Some(vec![pos, neg]),
            (None, None) => None,
            _ => return Err(bad("only one probability given".into())),
        };
        let dominant = match &record[3] {
            NO_DATA => Dominant::NoData,
            code => Dominant::Label(Sentiment::from_code(code).ok_or_else(|| bad(format!("bad label {code:?}")))?),
        };
        let token_count = record[4]
            .parse()
            .map_err(|_| bad(format!("bad token count {:?}", &record[4])))?;
        out.push(TrendPoint {
            session_label: record[0].to_owned(),
            p_by_label,
            dominant,
            token_count,
        });
    }
    Ok(out)
}

/// Reads expert labels: header `session,label`, labels `N` or `P`; `-` or an
/// empty field marks a session without an expert label.
pub fn parse_expert_csv<R: Read>(input: R) -> Result<Vec<(String, Option<Sentiment>)>, ReportError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["session", "label"] {
        return Err(ReportError::Malformed {
            line: 1,
            msg: "expected header session,label".into(),
        });
    }
    r.records()
        .map(|record| {
            let record = record?;
            let label = match &record[1] {
                "" | "-" => None,
                code => Some(Sentiment::from_code(code).ok_or_else(|| ReportError::Malformed {
                    line: row_line(&record),
                    msg: format!("bad label {code:?}"),
                })?),
            };
            Ok((record[0].to_owned(), label))
        })
        .collect()
}

/// `(session, dominant label)` pairs of a trend, for [`compare_to_expert`].
pub fn trend_labels(trend: &[TrendPoint]) -> Vec<(String, Option<Sentiment>)> {
    trend
        .iter()
        .map(|p| (p.session_label.clone(), p.dominant.label()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_vocabulary;
    use proptest::prelude::*;

    fn doc(n: usize) -> Document {
        Document { doc_id: "d".into(), epoch: 0, tokens: vec![0; n] }
    }

    fn posterior_with_pi(pis: &[[f64; 2]]) -> Posterior {
        let pi: Vec<f64> = pis.iter().flatten().copied().collect();
        let theta = vec![1.0; pis.len() * 2];
        Posterior::from_parts(2, 1, 1, vec![1.0, 1.0], theta, pi).unwrap()
    }

    const N: Sentiment = Sentiment::Negative;
    const P: Sentiment = Sentiment::Positive;

    fn seq(labels: &[Option<Sentiment>]) -> Vec<(String, Option<Sentiment>)> {
        labels.iter().enumerate().map(|(i, l)| ((i + 1).to_string(), *l)).collect()
    }

    #[test]
    fn aggregation_is_token_weighted() {
        let post = posterior_with_pi(&[[0.2, 0.8], [0.6, 0.4]]);
        let p = aggregate_epoch_sentiment(&post, &[doc(10), doc(30)]).unwrap();
        assert!((p[1] - 0.5).abs() < 1e-12 && (p[0] - 0.5).abs() < 1e-12);

        let single = posterior_with_pi(&[[0.3, 0.7]]);
        assert_eq!(aggregate_epoch_sentiment(&single, &[doc(4)]).unwrap(), vec![0.3, 0.7]);

        let same = posterior_with_pi(&[[0.25, 0.75]; 3]);
        let p = aggregate_epoch_sentiment(&same, &[doc(1), doc(5), doc(9)]).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn aggregation_errors() {
        let post = posterior_with_pi(&[]);
        assert!(matches!(aggregate_epoch_sentiment(&post, &[]), Err(ReportError::NoData)));
        let post = posterior_with_pi(&[[0.5, 0.5]]);
        assert!(matches!(
            aggregate_epoch_sentiment(&post, &[doc(1), doc(1)]),
            Err(ReportError::DocumentCount { .. })
        ));
    }

    #[test]
    fn dominant_rules() {
        assert_eq!(dominant_label(&[0.4, 0.6], TieBreak::Negative), N);
        assert_eq!(dominant_label(&[0.5, 0.5], TieBreak::Negative), N);
        assert_eq!(dominant_label(&[0.5, 0.5], TieBreak::Positive), P);
        assert_eq!(dominant_label(&[0.7, 0.3], TieBreak::Negative), P);
    }

    #[test]
    fn no_data_trend_point() {
        let t = trend_point("2", None, &[], TieBreak::Negative).unwrap();
        assert_eq!(t.dominant, Dominant::NoData);
        assert!(t.p_by_label.is_none());
        assert_eq!(t.token_count, 0);
    }

    #[test]
    fn top_words_ordering() {
        let vocab = build_vocabulary(&[vec!["a", "pain", "c", "d"]]);
        assert!(top_words(&[0.1, 0.2, 0.3, 0.4], &vocab, 0).is_empty());
        let one_hot = top_words(&[0.0, 1.0, 0.0, 0.0], &vocab, 3);
        let terms: Vec<&str> = one_hot.iter().map(|w| w.term.as_str()).collect();
        assert_eq!(terms, vec!["pain", "a", "c"]);
        assert_eq!(one_hot[0].p, 1.0);
        assert_eq!(top_words(&[0.5, 0.5], &vocab, 10).len(), 2);
    }

    #[test]
    fn planted_top_three() {
        let vocab = build_vocabulary(&[(0..10).map(|i| format!("t{i}")).collect::<Vec<_>>()]);
        let mut phi = vec![0.01; 10];
        for (w, p) in [(7, 0.3), (2, 0.25), (5, 0.2)] {
            phi[w] = p;
        }
        let terms: Vec<String> = top_words(&phi, &vocab, 3).into_iter().map(|w| w.term).collect();
        assert_eq!(terms, vec!["t7", "t2", "t5"]);
    }

    #[test]
    fn bryan_agreement() {
        let labels = [N, N, N, N, N, P, P, P, P].map(Some);
        let c = compare_to_expert(&seq(&labels), &seq(&labels)).unwrap();
        assert_eq!((c.compared, c.accuracy), (9, 1.0));
    }

    #[test]
    fn frank_disagreement_at_session_five() {
        let model = seq(&[N, N, P, N, N].map(Some));
        let expert = seq(&[N, N, P, N, P].map(Some));
        let c = compare_to_expert(&model, &expert).unwrap();
        assert!((c.accuracy - 0.8).abs() < 1e-15);
        let mismatched: Vec<&str> = c
            .per_session
            .iter()
            .filter(|s| s.matches() == Some(false))
            .map(|s| s.session_label.as_str())
            .collect();
        assert_eq!(mismatched, vec!["5"]);
    }

    #[test]
    fn nothing_comparable() {
        let missing = seq(&[None, None]);
        assert!(matches!(compare_to_expert(&missing, &missing), Err(ReportError::NothingComparable)));
        let a = vec![("1".to_owned(), Some(N))];
        let b = vec![("2".to_owned(), Some(N))];
        assert!(matches!(compare_to_expert(&a, &b), Err(ReportError::NothingComparable)));
    }

    #[test]
    fn trend_csv_format() {
        let trend = vec![
            TrendPoint {
                session_label: "1".into(),
                p_by_label: Some(vec![0.4, 0.6]),
                dominant: Dominant::Label(N),
                token_count: 12,
            },
            TrendPoint { session_label: "2".into(), p_by_label: None, dominant: Dominant::NoData, token_count: 0 },
        ];
        let mut buf = Vec::new();
        emit_trend_csv(&trend, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "session,p_positive,p_negative,dominant,tokens\n1,0.400000,0.600000,N,12\n2,,,no data,0\n"
        );
        assert_eq!(parse_trend_csv(buf.as_slice()).unwrap(), trend);

        let mut empty = Vec::new();
        emit_trend_csv(&[], &mut empty).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap(), "session,p_positive,p_negative,dominant,tokens\n");
    }

    #[test]
    fn parse_label_only_rows_and_expert_files() {
        let t = parse_trend_csv("session,p_positive,p_negative,dominant,tokens\n3,,,P,0\n".as_bytes()).unwrap();
        assert_eq!(t[0].dominant, Dominant::Label(P));
        let e = parse_expert_csv("session,label\n1,N\n2,-\n3,P\n4,\n".as_bytes()).unwrap();
        assert_eq!(e, vec![("1".into(), Some(N)), ("2".into(), None), ("3".into(), Some(P)), ("4".into(), None)]);
        assert!(parse_expert_csv("session,label\n1,X\n".as_bytes()).is_err());
        assert!(parse_trend_csv("a,b\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn dominant_is_scale_invariant(pos in 0.0f64..1.0, scale in 1e-3f64..1e3) {
            let p = [pos, 1.0 - pos];
            let scaled = [p[0] * scale, p[1] * scale];
            // Rescaling can only break an exact tie through rounding; skip those.
            prop_assume!(p[0] != p[1] && scaled[0] != scaled[1]);
            prop_assert_eq!(dominant_label(&p, TieBreak::Negative), dominant_label(&scaled, TieBreak::Negative));
        }

        #[test]
        fn comparison_is_symmetric(
            a in proptest::collection::vec(proptest::option::of(any::<bool>()), 1..10),
            b in proptest::collection::vec(proptest::option::of(any::<bool>()), 1..10),
        ) {
            let to = |v: &Vec<Option<bool>>| seq(&v.iter().map(|o| o.map(|x| if x { P } else { N })).collect::<Vec<_>>());
            let (x, y) = (to(&a), to(&b));
            match (compare_to_expert(&x, &y), compare_to_expert(&y, &x)) {
                (Ok(f), Ok(g)) => prop_assert_eq!(f.accuracy, g.accuracy),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "asymmetric failure"),
            }
        }

        #[test]
        fn csv_round_trip_keeps_probabilities(ps in proptest::collection::vec(0.0f64..1.0, 0..8)) {
            let trend: Vec<TrendPoint> = ps
                .iter()
                .enumerate()
                .map(|(i, &p)| TrendPoint {
                    session_label: (i + 1).to_string(),
                    p_by_label: Some(vec![p, 1.0 - p]),
                    dominant: Dominant::Label(dominant_label(&[p, 1.0 - p], TieBreak::Negative)),
                    token_count: i * 3,
                })
                .collect();
            let mut buf = Vec::new();
            emit_trend_csv(&trend, &mut buf).unwrap();
            let back = parse_trend_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back.len(), trend.len());
            for (a, b) in trend.iter().zip(&back) {
                let (pa, pb) = (a.p_by_label.as_ref().unwrap(), b.p_by_label.as_ref().unwrap());
                prop_assert!((pa[0] - pb[0]).abs() <= 1e-6 && (pa[1] - pb[1]).abs() <= 1e-6);
                prop_assert_eq!(a.token_count, b.token_count);
            }
        }
    }
}
