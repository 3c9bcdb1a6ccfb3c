use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn djst(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_djst"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/expert_grids").join(name)
}

const SESSIONS: [&str; 5] = [
    "T: How are you today?\nC: I feel sad and hopeless, everything is a failure.\nC: My family worries about me.",
    "T: Tell me more.\nC: I am afraid of my exams and I fail again and again.",
    "T: Go on.\nC: Things are a little better, I enjoyed a walk with friends.",
    "T: And then?\nC: I worry and feel anxious about the future.",
    "T: How was the week?\nC: I feel happy, hopeful and confident about my new job.",
];

fn client_dir(root: &Path, texts: &[&str]) -> PathBuf {
    let dir = root.join("client");
    fs::create_dir_all(&dir).unwrap();
    for (i, t) in texts.iter().enumerate() {
        fs::write(dir.join(format!("session_{:02}.txt", i + 1)), t).unwrap();
    }
    dir
}

const FAST: [&str; 4] = ["--sweeps", "40", "--burn_in", "10"];

fn run_ok(args: &[&str], cwd: &Path) -> Output {
    let out = djst(args, cwd);
    assert!(
        out.status.success(),
        "djst {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn pipeline(tmp: &TempDir) {
    client_dir(tmp.path(), &SESSIONS);
    run_ok(&["ingest", "--corpus_dir", "client", "--out", "run", "-q"], tmp.path());
    let mut train = vec!["train", "--out", "run", "--seed", "7", "-q"];
    train.extend(FAST);
    run_ok(&train, tmp.path());
    run_ok(&["report", "--out", "run", "--top_k", "20", "-q"], tmp.path());
}

#[test]
fn ingest_reads_every_session() {
    let tmp = TempDir::new().unwrap();
    client_dir(tmp.path(), &SESSIONS);
    run_ok(&["ingest", "--corpus_dir", "client", "--out", "run"], tmp.path());
    let snapshot = fs::read_to_string(tmp.path().join("run/corpus.txt")).unwrap();
    assert_eq!(snapshot.lines().filter(|l| l.starts_with("EPOCH ")).count(), 5);
    assert!(!snapshot.contains("today"), "therapist turns are dropped");
    assert!(tmp.path().join("run/config.txt").is_file());
}

#[test]
fn missing_directory_is_an_io_error_naming_the_path() {
    let tmp = TempDir::new().unwrap();
    let out = djst(&["ingest", "--corpus_dir", "nowhere"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere"));
}

#[test]
fn all_empty_sessions_are_a_validation_error() {
    let tmp = TempDir::new().unwrap();
    client_dir(tmp.path(), &["", "the and of", "T: only the therapist speaks"]);
    let out = djst(&["ingest", "--corpus_dir", "client"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_and_config_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(djst(&["frobnicate"], tmp.path()).status.code(), Some(2));
    assert_eq!(djst(&["train", "--sweeps", "ten"], tmp.path()).status.code(), Some(2));
    assert_eq!(
        djst(&["train", "--sweeps", "10", "--burn_in", "10"], tmp.path()).status.code(),
        Some(2)
    );
    fs::write(tmp.path().join("bad.cfg"), "not a key value line\n").unwrap();
    assert_eq!(djst(&["train", "--config", "bad.cfg"], tmp.path()).status.code(), Some(2));
    assert_eq!(djst(&["train", "--config", "absent.cfg"], tmp.path()).status.code(), Some(3));
}

#[test]
fn train_and_report_outputs() {
    let tmp = TempDir::new().unwrap();
    pipeline(&tmp);
    let run = tmp.path().join("run");

    let manifest = fs::read_to_string(run.join("model/manifest.txt")).unwrap();
    assert_eq!(manifest.lines().filter(|l| !l.starts_with('#')).count(), 5);
    for t in 0..5 {
        let snap = fs::read_to_string(run.join(format!("model/epoch_{t:03}.snap"))).unwrap();
        assert!(snap.starts_with("djst-model 1\n"));
    }

    let dump: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("posterior.json")).unwrap()).unwrap();
    for epoch in dump["epochs"].as_array().unwrap() {
        assert_eq!(epoch["clusters"].as_array().unwrap().len(), 10);
    }

    let trend = fs::read_to_string(run.join("trend.csv")).unwrap();
    assert_eq!(trend.lines().next().unwrap(), "session,p_positive,p_negative,dominant,tokens");
    assert_eq!(trend.lines().count(), 6);

    let topics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("topics.json")).unwrap()).unwrap();
    let entries = topics.as_array().unwrap();
    assert_eq!(entries.len(), 5 * 10);
    let vocab = fs::read_to_string(run.join("corpus.txt")).unwrap();
    let v: usize = vocab.lines().next().unwrap()[2..].parse().unwrap();
    for e in entries {
        assert_eq!(e["words"].as_array().unwrap().len(), v.min(20));
    }
}

#[test]
fn skipped_session_is_reported_as_no_data() {
    let tmp = TempDir::new().unwrap();
    let mut sessions = SESSIONS.to_vec();
    sessions[1] = "T: the client was silent";
    client_dir(tmp.path(), &sessions);
    run_ok(&["ingest", "--corpus_dir", "client", "--out", "run", "-q"], tmp.path());
    let mut train = vec!["train", "--out", "run", "-q"];
    train.extend(FAST);
    run_ok(&train, tmp.path());
    run_ok(&["report", "--out", "run", "-q"], tmp.path());
    let trend = fs::read_to_string(tmp.path().join("run/trend.csv")).unwrap();
    assert!(trend.lines().any(|l| l == "2,,,no data,0"), "{trend}");
}

#[test]
fn subcommands_are_idempotent() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    pipeline(&a);
    pipeline(&b);
    for file in [
        "corpus.txt",
        "config.txt",
        "posterior.json",
        "trend.csv",
        "topics.json",
        "model/manifest.txt",
        "model/epoch_004.snap",
    ] {
        assert_eq!(
            fs::read(a.path().join("run").join(file)).unwrap(),
            fs::read(b.path().join("run").join(file)).unwrap(),
            "{file} differs"
        );
    }
}

#[test]
fn effective_config_reproduces_the_run() {
    let tmp = TempDir::new().unwrap();
    pipeline(&tmp);
    let first = fs::read(tmp.path().join("run/posterior.json")).unwrap();
    fs::copy(tmp.path().join("run/config.txt"), tmp.path().join("saved.cfg")).unwrap();
    fs::remove_file(tmp.path().join("run/posterior.json")).unwrap();
    run_ok(&["train", "--config", "saved.cfg", "-q"], tmp.path());
    assert_eq!(fs::read(tmp.path().join("run/posterior.json")).unwrap(), first);
}

#[test]
fn flags_override_the_config_file() {
    let tmp = TempDir::new().unwrap();
    client_dir(tmp.path(), &SESSIONS);
    fs::write(
        tmp.path().join("run.cfg"),
        "corpus_dir = client\nout = run\nsweeps = 40\nburn_in = 10\nseed = 1\n",
    )
    .unwrap();
    run_ok(&["ingest", "--config", "run.cfg", "-q"], tmp.path());
    run_ok(&["train", "--config", "run.cfg", "--seed", "99", "--burn-in", "5", "-q"], tmp.path());
    let cfg = fs::read_to_string(tmp.path().join("run/config.txt")).unwrap();
    assert!(cfg.contains("seed = 99\n") && cfg.contains("burn_in = 5\n") && cfg.contains("sweeps = 40\n"));
}

#[test]
fn parallel_chains_write_summaries() {
    let tmp = TempDir::new().unwrap();
    client_dir(tmp.path(), &SESSIONS);
    run_ok(&["ingest", "--corpus_dir", "client", "--out", "run", "-q"], tmp.path());
    let mut train = vec!["train", "--out", "run", "--chains", "3", "-q"];
    train.extend(FAST);
    run_ok(&train, tmp.path());
    let chains = fs::read_to_string(tmp.path().join("run/chains.csv")).unwrap();
    assert_eq!(chains.lines().count(), 1 + 3 * 5);
    let summary = fs::read_to_string(tmp.path().join("run/chains_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 6);

    // The first chain's outputs match a single-chain run with the same seed.
    let single = TempDir::new().unwrap();
    pipeline_single_seed0(&single);
    assert_eq!(
        fs::read(tmp.path().join("run/posterior.json")).unwrap(),
        fs::read(single.path().join("run/posterior.json")).unwrap()
    );
}

fn pipeline_single_seed0(tmp: &TempDir) {
    client_dir(tmp.path(), &SESSIONS);
    run_ok(&["ingest", "--corpus_dir", "client", "--out", "run", "-q"], tmp.path());
    let mut train = vec!["train", "--out", "run", "-q"];
    train.extend(FAST);
    run_ok(&train, tmp.path());
}

#[test]
fn eval_on_fixtures() {
    let tmp = TempDir::new().unwrap();
    let out = run_ok(
        &[
            "eval",
            "--trend",
            fixture("bryan_model.csv").to_str().unwrap(),
            "--expert_labels",
            fixture("bryan_expert.csv").to_str().unwrap(),
            "--out",
            "ev",
        ],
        tmp.path(),
    );
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "accuracy 1 (9 of 9 sessions)");
    let table = fs::read_to_string(tmp.path().join("ev/eval.csv")).unwrap();
    assert!(table.starts_with("session,model,expert,match\n1,N,N,yes\n"));
}

#[test]
fn eval_without_common_sessions_exits_2() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("expert.csv"), "session,label\n20,N\n21,P\n").unwrap();
    let out = djst(
        &[
            "eval",
            "--trend",
            fixture("frank_model.csv").to_str().unwrap(),
            "--expert_labels",
            "expert.csv",
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synth_is_seeded_and_handles_zero_documents() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for tmp in [&a, &b] {
        run_ok(&["synth", "--out", "s", "--seed", "5", "--synth_epochs", "2", "-q"], tmp.path());
    }
    for file in ["corpus.txt", "truth.json", "lexicon/positive.txt", "config.txt"] {
        assert_eq!(
            fs::read(a.path().join("s").join(file)).unwrap(),
            fs::read(b.path().join("s").join(file)).unwrap(),
            "{file} differs"
        );
    }

    let z = TempDir::new().unwrap();
    run_ok(&["synth", "--out", "s", "--synth_docs", "0", "-q"], z.path());
    let corpus = fs::read_to_string(z.path().join("s/corpus.txt")).unwrap();
    assert!(!corpus.contains("\nDOC "));
}

#[test]
fn synth_output_trains_with_its_own_config() {
    let tmp = TempDir::new().unwrap();
    run_ok(&["synth", "--out", "s", "--synth_epochs", "2", "--sweeps", "40", "--burn_in", "10", "-q"], tmp.path());
    run_ok(&["train", "--config", "s/config.txt", "-q"], tmp.path());
    run_ok(&["report", "--config", "s/config.txt", "-q"], tmp.path());
    let trend = fs::read_to_string(tmp.path().join("s/trend.csv")).unwrap();
    assert_eq!(trend.lines().count(), 3);
}
