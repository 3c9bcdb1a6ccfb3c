use std::path::{Path, PathBuf};
use std::thread;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use djst::corpus::{self, Corpus, Epoch, EpochStream};
use djst::inference::synthetic::{generate_epoch, synthetic_vocabulary, DocTruth, PlantedPhi, SentimentMix};
use djst::inference::{DjstModel, Hyperparams, ModelSnapshot};
use djst::lexicon::{build_lambda, load_lexicon, LambdaMatrix, Lexicon, Sentiment};
use djst::metrics::evaluate_recovery;
use djst::report::{
    compare_to_expert, emit_trend_csv, parse_expert_csv, parse_trend_csv, summarize_topics, trend_labels,
    trend_point, Dominant, ExpertComparison, TieBreak, TrendPoint,
};

use crate::config::{RunConfig, SynthMode};
use crate::dump::{
    label_name, EpochDump, PosteriorDump, SyntheticTruth, TopicEntry, TruthDocument, TruthEpoch, POSTERIOR_FORMAT,
};
use crate::{read_text, require_file, write_file, CliError};

pub const CONFIG_FILE: &str = "config.txt";
pub const POSTERIOR_FILE: &str = "posterior.json";
pub const MODEL_DIR: &str = "model";
pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct IngestSummary {
    pub epochs: usize,
    pub tokens: usize,
    pub vocab_size: usize,
    pub empty_sessions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrend {
    pub seed: u64,
    pub trend: Vec<TrendPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub epochs: usize,
    pub posterior: PathBuf,
    /// One entry per chain; the first is the chain whose outputs are
    /// written.
    pub chains: Vec<ChainTrend>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryRow {
    pub session: String,
    /// `None` for epochs without documents.
    pub mean_cosine: Option<f64>,
    pub confident_docs: usize,
    pub sentiment_accuracy: Option<f64>,
    pub dominant: Dominant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSummary {
    pub epochs: usize,
    pub tokens: usize,
    pub recovery: Option<Vec<RecoveryRow>>,
}

fn write_effective_config(cfg: &RunConfig) -> Result<(), CliError> {
    write_file(&cfg.out.join(CONFIG_FILE), cfg.to_text())
}

fn load_corpus(cfg: &RunConfig) -> Result<Corpus, CliError> {
    let path = cfg.corpus_path();
    require_file("corpus", &path)?;
    Ok(corpus::load_snapshot(&path)?)
}

fn lexicon(cfg: &RunConfig) -> Result<Lexicon, CliError> {
    match (&cfg.positive_lexicon, &cfg.negative_lexicon) {
        (Some(pos), Some(neg)) => {
            require_file("positive_lexicon", pos)?;
            require_file("negative_lexicon", neg)?;
            Ok(load_lexicon(pos, neg)?)
        }
        (None, None) => Ok(Lexicon::default_english()),
        _ => Err(CliError::Validation(
            "positive_lexicon and negative_lexicon must be given together".into(),
        )),
    }
}

/// Reads `session_<NN>.txt` files from `corpus_dir` and writes the corpus
/// snapshot.
pub fn cmd_ingest(cfg: &RunConfig) -> Result<IngestSummary, CliError> {
    let dir = cfg
        .corpus_dir
        .as_ref()
        .ok_or_else(|| CliError::Validation("corpus_dir is required".into()))?;
    if !dir.is_dir() {
        return Err(CliError::io(dir, "corpus directory does not exist"));
    }
    let stopwords = match &cfg.stopwords {
        Some(p) => {
            require_file("stopwords", p)?;
            corpus::load_stopwords(p)?
        }
        None => corpus::default_stopwords(),
    };
    let sessions = corpus::read_session_dir(dir)?;
    let (corpus, warnings) = corpus::ingest(&sessions, &stopwords, cfg.chunk_tokens)?;

    let mut bytes = Vec::new();
    corpus::write_snapshot(&corpus, &mut bytes).expect("writing to memory");
    write_file(&cfg.corpus_path(), bytes)?;
    write_effective_config(cfg)?;

    Ok(IngestSummary {
        epochs: corpus.stream.len(),
        tokens: corpus.stream.token_count(),
        vocab_size: corpus.vocab.len(),
        empty_sessions: warnings
            .into_iter()
            .map(|w| match w {
                corpus::IngestWarning::EmptySession(s) => s,
            })
            .collect(),
    })
}

struct ChainRun {
    dump: PosteriorDump,
    trend: Vec<TrendPoint>,
    /// Serialized model snapshot per epoch.
    snapshots: Vec<Vec<u8>>,
}

fn run_chain(
    corpus: &Corpus,
    hyper: Hyperparams,
    lambda: LambdaMatrix,
    tie: TieBreak,
    keep_snapshots: bool,
) -> Result<ChainRun, CliError> {
    let seed = hyper.seed;
    let (labels, topics) = (hyper.labels, hyper.topics);
    let mut model = DjstModel::new(hyper, lambda, corpus.vocab.len())?;
    let mut epochs = Vec::with_capacity(corpus.stream.len());
    let mut trend = Vec::with_capacity(corpus.stream.len());
    let mut snapshots = Vec::new();
    for (t, epoch) in corpus.stream.epochs.iter().enumerate() {
        let fit = model.fit_epoch(&epoch.documents)?;
        let point = trend_point(&epoch.label, fit.posterior.as_ref(), &epoch.documents, tie)?;
        log::info!(
            "seed {seed} epoch {t} (session {}): {} documents, dominant {}",
            epoch.label,
            epoch.documents.len(),
            point.dominant
        );
        if keep_snapshots {
            let mut buf = Vec::new();
            ModelSnapshot::capture(&model, &fit)
                .write(&mut buf)
                .expect("writing to memory");
            snapshots.push(buf);
        }
        epochs.push(EpochDump::new(t, epoch, fit.posterior.as_ref()));
        trend.push(point);
    }
    Ok(ChainRun {
        dump: PosteriorDump {
            format: POSTERIOR_FORMAT.into(),
            labels,
            topics,
            vocab_size: corpus.vocab.len(),
            seed,
            epochs,
        },
        trend,
        snapshots,
    })
}

fn fmt_prob(p: Option<f64>) -> String {
    p.map_or_else(String::new, |p| format!("{p:.6}"))
}

/// Per-chain trend rows and across-chain summaries of the negative share.
fn write_chain_tables(out: &Path, chains: &[ChainTrend]) -> Result<(), CliError> {
    let neg = Sentiment::Negative.index();
    let mut per_chain = String::from("chain,seed,session,p_positive,p_negative,dominant\n");
    for (i, c) in chains.iter().enumerate() {
        for p in &c.trend {
            let get = |l: usize| p.p_by_label.as_ref().map(|v| v[l]);
            per_chain.push_str(&format!(
                "{i},{},{},{},{},{}\n",
                c.seed,
                p.session_label,
                fmt_prob(get(Sentiment::Positive.index())),
                fmt_prob(get(neg)),
                p.dominant
            ));
        }
    }
    write_file(&out.join("chains.csv"), per_chain)?;

    let mut summary = String::from("session,chains,mean_p_negative,sd_p_negative,majority,agreement\n");
    for (e, first) in chains[0].trend.iter().enumerate() {
        let values: Vec<f64> = chains
            .iter()
            .filter_map(|c| c.trend[e].p_by_label.as_ref().map(|p| p[neg]))
            .collect();
        if values.is_empty() {
            summary.push_str(&format!("{},0,,,{},\n", first.session_label, Dominant::NoData));
            continue;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let negatives = chains
            .iter()
            .filter(|c| c.trend[e].dominant == Dominant::Label(Sentiment::Negative))
            .count();
        let (majority, agree) = if 2 * negatives >= values.len() {
            (Sentiment::Negative, negatives)
        } else {
            (Sentiment::Positive, values.len() - negatives)
        };
        summary.push_str(&format!(
            "{},{},{mean:.6},{sd:.6},{},{:.6}\n",
            first.session_label,
            values.len(),
            majority.code(),
            agree as f64 / n
        ));
    }
    write_file(&out.join("chains_summary.csv"), summary)
}

/// Fits every epoch of the corpus snapshot in order. Writes one model
/// snapshot per epoch, a manifest listing them, the posterior dump and the
/// effective configuration. With `chains > 1`, further chains with seeds
/// `seed + 1, seed + 2, ...` run concurrently and only contribute the
/// per-chain and across-chain trend tables.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainSummary, CliError> {
    let corpus = load_corpus(cfg)?;
    let lexicon = lexicon(cfg)?;
    let lambda = build_lambda(&lexicon, &corpus.vocab, cfg.hyper.labels);
    log::info!(
        "training {} epochs over {} terms ({} lexicon words in vocabulary)",
        corpus.stream.len(),
        corpus.vocab.len(),
        (0..corpus.vocab.len()).filter(|&w| lambda.has_prior(w)).count()
    );

    let runs: Vec<Result<ChainRun, CliError>> = thread::scope(|s| {
        let handles: Vec<_> = (0..cfg.chains)
            .map(|i| {
                let hyper = Hyperparams {
                    seed: cfg.hyper.seed.wrapping_add(i as u64),
                    ..cfg.hyper.clone()
                };
                let (corpus, lambda) = (&corpus, lambda.clone());
                s.spawn(move || run_chain(corpus, hyper, lambda, cfg.tie_break, i == 0))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect()
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    let main = &runs[0];

    let model_dir = cfg.out.join(MODEL_DIR);
    let mut manifest = String::from("# epoch session snapshot\n");
    for ((t, epoch), snap) in corpus.stream.epochs.iter().enumerate().zip(&main.snapshots) {
        let name = format!("epoch_{t:03}.snap");
        write_file(&model_dir.join(&name), snap)?;
        manifest.push_str(&format!("{t} {} {name}\n", epoch.label));
    }
    write_file(&model_dir.join(MANIFEST_FILE), manifest)?;
    let posterior = cfg.out.join(POSTERIOR_FILE);
    write_file(&posterior, main.dump.to_json())?;
    write_effective_config(cfg)?;

    let chains: Vec<ChainTrend> = runs
        .iter()
        .map(|r| ChainTrend {
            seed: r.dump.seed,
            trend: r.trend.clone(),
        })
        .collect();
    if chains.len() > 1 {
        write_chain_tables(&cfg.out, &chains)?;
    }
    Ok(TrainSummary {
        epochs: corpus.stream.len(),
        posterior,
        chains,
    })
}

/// Writes `trend.csv` and `topics.json` from the corpus snapshot and the
/// posterior dump in `out`.
pub fn cmd_report(cfg: &RunConfig) -> Result<Vec<TrendPoint>, CliError> {
    let corpus = load_corpus(cfg)?;
    let dump_path = cfg.out.join(POSTERIOR_FILE);
    require_file("posterior dump", &dump_path)?;
    let dump = PosteriorDump::from_json(&read_text(&dump_path)?)?;
    if dump.epochs.len() != corpus.stream.len() || dump.vocab_size != corpus.vocab.len() {
        return Err(CliError::Validation(format!(
            "posterior dump covers {} epochs over {} terms but the corpus has {} epochs over {} terms",
            dump.epochs.len(),
            dump.vocab_size,
            corpus.stream.len(),
            corpus.vocab.len()
        )));
    }

    let mut trend = Vec::with_capacity(dump.epochs.len());
    let mut topics = Vec::new();
    for (e, epoch) in dump.epochs.iter().zip(&corpus.stream.epochs) {
        let posterior = e.posterior(dump.labels, dump.topics, dump.vocab_size)?;
        trend.push(trend_point(&epoch.label, posterior.as_ref(), &epoch.documents, cfg.tie_break)?);
        if let Some(p) = &posterior {
            topics.extend(summarize_topics(p, &corpus.vocab, cfg.top_k).into_iter().map(|s| TopicEntry {
                epoch: e.epoch,
                session: epoch.label.clone(),
                sentiment: label_name(s.label),
                topic: s.topic,
                words: s.top_words,
            }));
        }
    }

    let mut csv = Vec::new();
    emit_trend_csv(&trend, &mut csv)?;
    write_file(&cfg.out.join("trend.csv"), csv)?;
    let mut json = serde_json::to_vec_pretty(&topics).expect("topic list serializes");
    json.push(b'\n');
    write_file(&cfg.out.join("topics.json"), json)?;
    Ok(trend)
}

/// Scores the trend's dominant labels against expert labels and writes
/// `eval.csv`.
pub fn cmd_eval(cfg: &RunConfig) -> Result<ExpertComparison, CliError> {
    let trend_path = cfg.trend_path();
    let expert_path = cfg
        .expert_labels
        .as_ref()
        .ok_or_else(|| CliError::Validation("expert_labels is required".into()))?;
    require_file("trend", &trend_path)?;
    require_file("expert_labels", expert_path)?;
    let trend = parse_trend_csv(read_text(&trend_path)?.as_bytes())?;
    let expert = parse_expert_csv(read_text(expert_path)?.as_bytes())?;
    let cmp = compare_to_expert(&trend_labels(&trend), &expert)?;

    let code = |s: Option<Sentiment>| s.map_or_else(|| "-".to_owned(), |s| s.code().to_string());
    let mut out = String::from("session,model,expert,match\n");
    for s in &cmp.per_session {
        let m = match s.matches() {
            Some(true) => "yes",
            Some(false) => "no",
            None => "",
        };
        out.push_str(&format!("{},{},{},{m}\n", s.session_label, code(s.model), code(s.expert)));
    }
    out.push_str(&format!(
        "# compared {} matches {} accuracy {}\n",
        cmp.compared, cmp.matches, cmp.accuracy
    ));
    write_file(&cfg.out.join("eval.csv"), out)?;
    Ok(cmp)
}

fn lexicon_file(words: &[&str], sentiment: Sentiment) -> String {
    let mut text = format!("; synthetic {} seed words\n", sentiment.name());
    for w in words {
        text.push_str(w);
        text.push('\n');
    }
    text
}

fn recovery_rows(
    cfg: &RunConfig,
    planted: &PlantedPhi,
    corpus: &Corpus,
    lexicon: &Lexicon,
    truth: &[Vec<DocTruth>],
) -> Result<Vec<RecoveryRow>, CliError> {
    let lambda = build_lambda(lexicon, &corpus.vocab, cfg.hyper.labels);
    let mut model = DjstModel::new(cfg.hyper.clone(), lambda, corpus.vocab.len())?;
    let mut rows = Vec::with_capacity(corpus.stream.len());
    for (epoch, truth) in corpus.stream.epochs.iter().zip(truth) {
        let fit = model.fit_epoch(&epoch.documents)?;
        let point = trend_point(&epoch.label, fit.posterior.as_ref(), &epoch.documents, cfg.tie_break)?;
        let rec = fit
            .posterior
            .as_ref()
            .map(|p| evaluate_recovery(planted, p, truth, cfg.synth.threshold));
        rows.push(RecoveryRow {
            session: epoch.label.clone(),
            mean_cosine: rec.as_ref().map(|r| r.matching.mean_cosine),
            confident_docs: rec.as_ref().map_or(0, |r| r.confident_docs),
            sentiment_accuracy: rec.as_ref().filter(|r| r.confident_docs > 0).map(|r| r.sentiment_accuracy),
            dominant: point.dominant,
        });
    }
    Ok(rows)
}

/// Generates a corpus from block-structured planted word distributions.
/// Writes the corpus snapshot, the generating parameters, a seed lexicon
/// naming the top words of each planted cluster and a configuration that
/// trains on them. With `synth_evaluate`, also fits the corpus and writes
/// `recovery.csv`.
pub fn cmd_synth(cfg: &RunConfig) -> Result<SynthSummary, CliError> {
    let s = &cfg.synth;
    let (labels, topics) = (cfg.hyper.labels, cfg.hyper.topics);
    if s.mode == SynthMode::Shift && labels != 2 {
        return Err(CliError::Validation("synth_mode = shift needs labels = 2".into()));
    }
    let planted = PlantedPhi::blocks(labels, topics, s.vocab, s.block_mass)?;
    let vocab = synthetic_vocabulary(s.vocab);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.hyper.seed);

    let mut epochs = Vec::with_capacity(s.epochs);
    let mut truth = Vec::with_capacity(s.epochs);
    for e in 0..s.epochs {
        let mix = match s.mode {
            SynthMode::Dirichlet => SentimentMix::Dirichlet { gamma: s.gamma },
            SynthMode::Shift => {
                let lean = if e < s.shift_at { Sentiment::Negative } else { Sentiment::Positive };
                let mut p = vec![1.0 - s.strength; 2];
                p[lean.index()] = s.strength;
                SentimentMix::Fixed(p)
            }
        };
        let label = (e + 1).to_string();
        let generated = generate_epoch(&planted, &mix, s.alpha, s.docs, s.doc_len, e, &label, &mut rng)?;
        epochs.push(Epoch {
            label,
            documents: generated.documents,
        });
        truth.push(generated.truth);
    }
    let corpus = Corpus {
        vocab,
        stream: EpochStream { epochs },
    };

    let mut out_cfg = cfg.clone();
    out_cfg.corpus = Some(cfg.out.join("corpus.txt"));
    out_cfg.positive_lexicon = Some(cfg.out.join("lexicon").join("positive.txt"));
    out_cfg.negative_lexicon = Some(cfg.out.join("lexicon").join("negative.txt"));

    let mut bytes = Vec::new();
    corpus::write_snapshot(&corpus, &mut bytes).expect("writing to memory");
    write_file(&out_cfg.corpus_path(), bytes)?;

    let block = s.vocab / (labels * topics);
    let lexicon = planted.seed_lexicon(&corpus.vocab, s.lexicon_words.min(block))?;
    for (sentiment, path) in [
        (Sentiment::Positive, out_cfg.positive_lexicon.as_ref()),
        (Sentiment::Negative, out_cfg.negative_lexicon.as_ref()),
    ] {
        let words: Vec<&str> = lexicon.iter().filter(|(_, l)| *l == sentiment).map(|(w, _)| w).collect();
        write_file(path.expect("set above"), lexicon_file(&words, sentiment))?;
    }

    let truth_file = SyntheticTruth {
        labels,
        topics,
        vocab_size: s.vocab,
        phi: planted.rows().map(<[f64]>::to_vec).collect(),
        epochs: corpus
            .stream
            .epochs
            .iter()
            .zip(&truth)
            .map(|(e, t)| TruthEpoch {
                session: e.label.clone(),
                documents: e
                    .documents
                    .iter()
                    .zip(t)
                    .map(|(d, t)| TruthDocument {
                        doc_id: d.doc_id.clone(),
                        pi: t.pi.clone(),
                        theta: t.theta.clone(),
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut json = serde_json::to_vec(&truth_file).expect("truth serializes");
    json.push(b'\n');
    write_file(&cfg.out.join("truth.json"), json)?;
    write_effective_config(&out_cfg)?;

    let recovery = if s.evaluate {
        let rows = recovery_rows(cfg, &planted, &corpus, &lexicon, &truth)?;
        let mut csv = String::from("session,mean_cosine,confident_docs,sentiment_accuracy,dominant\n");
        for r in &rows {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                r.session,
                fmt_prob(r.mean_cosine),
                r.confident_docs,
                fmt_prob(r.sentiment_accuracy),
                r.dominant
            ));
        }
        write_file(&cfg.out.join("recovery.csv"), csv)?;
        Some(rows)
    } else {
        None
    };

    Ok(SynthSummary {
        epochs: corpus.stream.len(),
        tokens: corpus.stream.token_count(),
        recovery,
    })
}
