//! Self-describing text snapshot of a chain after an epoch.
//!
//! ```text
//! djst-model 1
//! epoch <completed epoch>
//! hyper <key>=<value> ...
//! dims <L> <T> <V>
//! rng <seed hex> <stream> <word position>
//! lambda <l> <V values>                  (L lines)
//! alpha <L*T values>
//! beta <l> <z> <V values>                (L*T lines, priors for the next epoch)
//! mu <l> <z> <weights>                   (L*T lines)
//! history <l> <z> <n>                    (L*T blocks, each followed by n lines)
//! sigma <V values>                       (most recent first)
//! docs <D>
//! assign <l>:<z> ...                     (D lines, final assignments)
//! end
//! ```
//!
//! Floats are written in their shortest round-trip form, so a restored chain
//! continues bit-for-bit where the original left off.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::hyper::Hyperparams;
use super::model::{DjstModel, EpochFit};
use super::prior::PriorState;
use super::sampler::Assignment;
use super::InferenceError;
use crate::lexicon::LambdaMatrix;

pub const FORMAT_HEADER: &str = "djst-model 1";

#[derive(Debug, Clone)]
pub struct ModelSnapshot {
    /// Last completed epoch.
    pub epoch: usize,
    pub hyper: Hyperparams,
    /// Priors for epoch `epoch + 1`.
    pub priors: PriorState,
    pub assignments: Vec<Vec<Assignment>>,
    pub rng: ChaCha8Rng,
}

fn push_floats(line: &mut String, values: &[f64]) {
    for v in values {
        let _ = write!(line, " {v}");
    }
}

impl ModelSnapshot {
    /// Captures `model` right after it produced `fit`.
    pub fn capture(model: &DjstModel, fit: &EpochFit) -> Self {
        Self {
            epoch: fit.epoch,
            hyper: model.hyper().clone(),
            priors: model.priors().clone(),
            assignments: fit.assignments.clone(),
            rng: model.rng().clone(),
        }
    }

    /// A chain that resumes at epoch `epoch + 1`.
    pub fn into_model(self) -> Result<DjstModel, InferenceError> {
        DjstModel::from_state(self.hyper, self.priors, self.rng, self.epoch + 1)
    }

    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        let p = &self.priors;
        let (labels, topics, v) = (p.labels(), p.topics(), p.vocab_size());
        writeln!(out, "{FORMAT_HEADER}")?;
        writeln!(out, "epoch {}", self.epoch)?;
        let hyper: Vec<String> = self.hyper.entries().into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        writeln!(out, "hyper {}", hyper.join(" "))?;
        writeln!(out, "dims {labels} {topics} {v}")?;
        let seed: String = self.rng.get_seed().iter().map(|b| format!("{b:02x}")).collect();
        writeln!(
            out,
            "rng {seed} {} {}",
            self.rng.get_stream(),
            self.rng.get_word_pos()
        )?;

        let mut line = String::new();
        for l in 0..labels {
            line.clear();
            let _ = write!(line, "lambda {l}");
            push_floats(&mut line, p.lambda().row(l));
            writeln!(out, "{line}")?;
        }
        line.clear();
        line.push_str("alpha");
        push_floats(&mut line, p.alpha_table());
        writeln!(out, "{line}")?;
        for l in 0..labels {
            for z in 0..topics {
                line.clear();
                let _ = write!(line, "beta {l} {z}");
                push_floats(&mut line, p.beta(l, z));
                writeln!(out, "{line}")?;
            }
        }
        for l in 0..labels {
            for z in 0..topics {
                line.clear();
                let _ = write!(line, "mu {l} {z}");
                push_floats(&mut line, p.mu(l, z));
                writeln!(out, "{line}")?;
            }
        }
        for l in 0..labels {
            for z in 0..topics {
                let hist = p.history(l, z);
                writeln!(out, "history {l} {z} {}", hist.len())?;
                for sigma in hist {
                    line.clear();
                    line.push_str("sigma");
                    push_floats(&mut line, sigma);
                    writeln!(out, "{line}")?;
                }
            }
        }
        writeln!(out, "docs {}", self.assignments.len())?;
        for doc in &self.assignments {
            line.clear();
            line.push_str("assign");
            for a in doc {
                let _ = write!(line, " {}:{}", a.sentiment, a.topic);
            }
            writeln!(out, "{line}")?;
        }
        writeln!(out, "end")
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self, InferenceError> {
        let mut lines = Lines::new(reader);

        let header = lines.next_line()?;
        if header != FORMAT_HEADER {
            return Err(lines.error(format!("expected header {FORMAT_HEADER:?}, got {header:?}")));
        }
        let epoch: usize = lines.tagged("epoch")?.parse_one(&lines)?;

        let hyper_line = lines.tagged("hyper")?;
        let mut hyper = Hyperparams::default();
        for pair in hyper_line.fields {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| lines.error(format!("bad hyper entry {pair:?}")))?;
            hyper.set(k, v)?;
        }

        let dims: Vec<usize> = lines.tagged("dims")?.parse_all(&lines)?;
        let [labels, topics, v] = dims[..] else {
            return Err(lines.error("dims needs three values".into()));
        };
        if labels != hyper.labels || topics != hyper.topics {
            return Err(lines.error("dims disagree with hyper".into()));
        }
        let k = labels * topics;

        let rng_fields = lines.tagged("rng")?.fields;
        let [seed_hex, stream, word_pos] = &rng_fields[..] else {
            return Err(lines.error("rng needs seed, stream and word position".into()));
        };
        let rng = parse_rng(seed_hex, stream, word_pos).ok_or_else(|| lines.error("bad rng state".into()))?;

        let mut lambda = Vec::with_capacity(labels * v);
        for l in 0..labels {
            let row = lines.tagged("lambda")?;
            let values: Vec<f64> = row.parse_indexed(&lines, &[l])?;
            lines.expect_len(values.len(), v)?;
            lambda.extend(values);
        }
        let lambda = LambdaMatrix::from_rows(labels, v, lambda).expect("sized above");

        let alpha: Vec<f64> = lines.tagged("alpha")?.parse_all(&lines)?;
        lines.expect_len(alpha.len(), k)?;

        let mut beta = Vec::with_capacity(k * v);
        for l in 0..labels {
            for z in 0..topics {
                let values: Vec<f64> = lines.tagged("beta")?.parse_indexed(&lines, &[l, z])?;
                lines.expect_len(values.len(), v)?;
                beta.extend(values);
            }
        }
        let mut mu = Vec::with_capacity(k);
        for l in 0..labels {
            for z in 0..topics {
                mu.push(lines.tagged("mu")?.parse_indexed(&lines, &[l, z])?);
            }
        }
        let mut history = Vec::with_capacity(k);
        for l in 0..labels {
            for z in 0..topics {
                let n: Vec<usize> = lines.tagged("history")?.parse_indexed(&lines, &[l, z])?;
                let [n] = n[..] else {
                    return Err(lines.error("history needs a column count".into()));
                };
                let mut cols = VecDeque::with_capacity(n);
                for _ in 0..n {
                    let sigma: Vec<f64> = lines.tagged("sigma")?.parse_all(&lines)?;
                    lines.expect_len(sigma.len(), v)?;
                    cols.push_back(sigma);
                }
                history.push(cols);
            }
        }
        let priors = PriorState::from_parts(labels, topics, v, beta, alpha, history, mu, lambda)?;

        let docs: usize = lines.tagged("docs")?.parse_one(&lines)?;
        let mut assignments = Vec::with_capacity(docs);
        for _ in 0..docs {
            let fields = lines.tagged("assign")?.fields;
            let doc = fields
                .iter()
                .map(|f| {
                    let (l, z) = f.split_once(':')?;
                    let a = Assignment {
                        sentiment: l.parse().ok()?,
                        topic: z.parse().ok()?,
                    };
                    (a.sentiment < labels && a.topic < topics).then_some(a)
                })
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| lines.error("bad assignment".into()))?;
            assignments.push(doc);
        }
        lines.tagged("end")?;

        Ok(Self {
            epoch,
            hyper,
            priors,
            assignments,
            rng,
        })
    }
}

fn parse_rng(seed_hex: &str, stream: &str, word_pos: &str) -> Option<ChaCha8Rng> {
    if seed_hex.len() != 64 {
        return None;
    }
    let mut seed = [0u8; 32];
    for (i, b) in seed.iter_mut().enumerate() {
        *b = u8::from_str_radix(seed_hex.get(2 * i..2 * i + 2)?, 16).ok()?;
    }
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(stream.parse().ok()?);
    rng.set_word_pos(word_pos.parse().ok()?);
    Some(rng)
}

struct Tagged {
    fields: Vec<String>,
}

impl Tagged {
    fn parse_all<T: std::str::FromStr, R>(&self, lines: &Lines<R>) -> Result<Vec<T>, InferenceError> {
        self.fields
            .iter()
            .map(|f| f.parse().map_err(|_| lines.error(format!("cannot parse {f:?}"))))
            .collect()
    }

    fn parse_one<T: std::str::FromStr, R>(&self, lines: &Lines<R>) -> Result<T, InferenceError> {
        match &self.fields[..] {
            [f] => f.parse().map_err(|_| lines.error(format!("cannot parse {f:?}"))),
            _ => Err(lines.error("expected exactly one value".into())),
        }
    }

    /// Checks the leading index fields, then parses the rest.
    fn parse_indexed<T: std::str::FromStr, R>(
        &self,
        lines: &Lines<R>,
        index: &[usize],
    ) -> Result<Vec<T>, InferenceError> {
        let n = index.len();
        let head: Vec<usize> = self.fields.iter().take(n).filter_map(|f| f.parse().ok()).collect();
        if head != index {
            return Err(lines.error(format!("expected index {index:?}")));
        }
        Tagged {
            fields: self.fields[n..].to_vec(),
        }
        .parse_all(lines)
    }
}

struct Lines<R> {
    inner: io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn new(reader: R) -> Self {
        Self {
            inner: reader.lines(),
            line: 0,
        }
    }

    fn next_line(&mut self) -> Result<String, InferenceError> {
        self.line += 1;
        match self.inner.next() {
            Some(l) => Ok(l?),
            None => Err(self.error("unexpected end of snapshot".into())),
        }
    }

    fn tagged(&mut self, tag: &str) -> Result<Tagged, InferenceError> {
        let line = self.next_line()?;
        let mut parts = line.split_ascii_whitespace();
        if parts.next() != Some(tag) {
            return Err(self.error(format!("expected `{tag}` line, got {line:?}")));
        }
        Ok(Tagged {
            fields: parts.map(str::to_owned).collect(),
        })
    }

    fn expect_len(&self, found: usize, expected: usize) -> Result<(), InferenceError> {
        if found == expected {
            Ok(())
        } else {
            Err(self.error(format!("expected {expected} values, found {found}")))
        }
    }
}

impl<R> Lines<R> {
    fn error(&self, msg: String) -> InferenceError {
        InferenceError::Snapshot {
            line: self.line,
            msg,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use crate::inference::{AlphaEvolution, Estimator, MuScheme};

    fn docs(epoch: usize) -> Vec<Document> {
        (0..2)
            .map(|i| Document {
                doc_id: format!("{epoch}_{i}"),
                epoch,
                tokens: (0..15).map(|j| (i * 5 + j * (epoch + 2)) % 9).collect(),
            })
            .collect()
    }

    fn lambda() -> LambdaMatrix {
        let mut rows = vec![1.0; 18];
        rows[0] = 0.9;
        rows[9] = 0.05;
        rows[10] = 0.9;
        rows[1] = 0.05;
        LambdaMatrix::from_rows(2, 9, rows).unwrap()
    }

    #[test]
    fn restored_chain_continues_bit_for_bit() {
        let hyper = Hyperparams {
            topics: 3,
            sweeps: 25,
            burn_in: 5,
            seed: 99,
            window: 2,
            mu_scheme: MuScheme::Decay { kappa: 0.3 },
            alpha_evolution: AlphaEvolution::Sample,
            estimator: Estimator::Averaged { lag: 4 },
            ..Hyperparams::default()
        };
        let mut straight = DjstModel::new(hyper.clone(), lambda(), 9).unwrap();
        let mut fits = Vec::new();
        for t in 0..4 {
            fits.push(straight.fit_epoch(&docs(t)).unwrap());
        }

        let mut first = DjstModel::new(hyper, lambda(), 9).unwrap();
        first.fit_epoch(&docs(0)).unwrap();
        let fit = first.fit_epoch(&docs(1)).unwrap();
        let mut buf = Vec::new();
        ModelSnapshot::capture(&first, &fit).write(&mut buf).unwrap();
        let snap = ModelSnapshot::read(buf.as_slice()).unwrap();
        assert_eq!(snap.epoch, 1);
        assert_eq!(snap.assignments, fit.assignments);
        assert_eq!(&snap.priors, first.priors());

        let mut resumed = snap.into_model().unwrap();
        assert_eq!(resumed.next_epoch(), 2);
        for t in 2..4 {
            let fit = resumed.fit_epoch(&docs(t)).unwrap();
            assert_eq!(fit.assignments, fits[t].assignments);
            assert_eq!(fit.posterior, fits[t].posterior);
        }
        assert_eq!(resumed.priors(), straight.priors());
    }

    #[test]
    fn rejects_wrong_header_and_truncation() {
        let err = ModelSnapshot::read("djst-model 2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, InferenceError::Snapshot { line: 1, .. }));

        let hyper = Hyperparams { sweeps: 3, burn_in: 1, ..Hyperparams::default() };
        let mut m = DjstModel::new(hyper, lambda(), 9).unwrap();
        let fit = m.fit_epoch(&docs(0)).unwrap();
        let mut buf = Vec::new();
        ModelSnapshot::capture(&m, &fit).write(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let truncated = &text[..text.len() - 4];
        assert!(ModelSnapshot::read(truncated.as_bytes()).is_err());
    }
}
