//! Batch pipeline around the `djst` library: `ingest`, `train`, `report`,
//! `eval` and `synth`.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use clap::{Arg, ArgAction, ArgMatches, Command};
use thiserror::Error;

use djst::corpus::CorpusError;
use djst::inference::InferenceError;
use djst::lexicon::LexiconError;
use djst::report::ReportError;

pub mod commands;
pub mod config;
pub mod dump;

pub use commands::{cmd_eval, cmd_ingest, cmd_report, cmd_synth, cmd_train};
pub use config::{RunConfig, SynthConfig, SynthMode};

/// Exit status for invalid input or usage.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit status for filesystem failures.
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Io(_) => EXIT_IO,
        }
    }

    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<InferenceError> for CliError {
    fn from(e: InferenceError) -> Self {
        match e {
            InferenceError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<LexiconError> for CliError {
    fn from(e: LexiconError) -> Self {
        match e {
            LexiconError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        match &e {
            ReportError::Io(_) => CliError::Io(e.to_string()),
            ReportError::Csv(c) if c.is_io_error() => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub(crate) fn require_file(key: &str, path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::io(path, format!("{key} does not exist or is not a file")))
    }
}

/// Subcommands of the `djst` binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Ingest,
    Train,
    Report,
    Eval,
    Synth,
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Subcommand,
    pub config: RunConfig,
    pub quiet: bool,
}

fn command() -> Command {
    let mut cmd = Command::new("djst")
        .about("Track sentiment and topics across ordered sessions")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("PATH")
                .global(true)
                .help("key = value configuration file; flags override its entries"),
        )
        .arg(
            Arg::new("quiet")
                .long("quiet")
                .short('q')
                .action(ArgAction::SetTrue)
                .global(true)
                .help("Only log warnings and errors"),
        );
    for key in RunConfig::keys() {
        let mut arg = Arg::new(key).long(key).value_name("VALUE").global(true);
        if key.contains('_') {
            arg = arg.visible_alias(key.replace('_', "-"));
        }
        cmd = cmd.arg(arg);
    }
    cmd.subcommand(Command::new("ingest").about("Preprocess session transcripts into a corpus snapshot"))
        .subcommand(Command::new("train").about("Fit every epoch and write model snapshots and the posterior dump"))
        .subcommand(Command::new("report").about("Write the sentiment trend and topic word lists"))
        .subcommand(Command::new("eval").about("Score a trend against expert session labels"))
        .subcommand(Command::new("synth").about("Generate a planted synthetic corpus"))
}

fn config_from(matches: &ArgMatches) -> Result<RunConfig, CliError> {
    let mut cfg = match matches.get_one::<String>("config") {
        Some(p) => RunConfig::from_file(Path::new(p))?,
        None => RunConfig::default(),
    };
    for key in RunConfig::keys() {
        if let Some(v) = matches.get_one::<String>(key) {
            cfg.set(key, v)?;
        }
    }
    cfg.finalize()?;
    Ok(cfg)
}

/// Parses command-line arguments. Usage errors come back as clap errors so
/// the caller can print them in clap's format.
pub fn parse_args<I, T>(args: I) -> Result<Result<Invocation, CliError>, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = command().try_get_matches_from(args)?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let command = match name {
        "ingest" => Subcommand::Ingest,
        "train" => Subcommand::Train,
        "report" => Subcommand::Report,
        "eval" => Subcommand::Eval,
        "synth" => Subcommand::Synth,
        _ => unreachable!("unknown subcommand {name}"),
    };
    let quiet = sub.get_flag("quiet");
    Ok(config_from(sub).map(|config| Invocation { command, config, quiet }))
}

/// Runs one invocation and returns the process exit status.
pub fn execute(inv: &Invocation) -> Result<(), CliError> {
    let cfg = &inv.config;
    match inv.command {
        Subcommand::Ingest => cmd_ingest(cfg).map(|s| {
            log::info!(
                "ingested {} sessions, {} tokens, vocabulary {}",
                s.epochs,
                s.tokens,
                s.vocab_size
            )
        }),
        Subcommand::Train => cmd_train(cfg).map(|s| log::info!("trained {} epochs", s.epochs)),
        Subcommand::Report => cmd_report(cfg).map(|t| log::info!("wrote {} trend rows", t.len())),
        Subcommand::Eval => cmd_eval(cfg).map(|c| {
            if !inv.quiet {
                println!("accuracy {} ({} of {} sessions)", c.accuracy, c.matches, c.compared);
            }
        }),
        Subcommand::Synth => cmd_synth(cfg).map(|s| log::info!("generated {} epochs", s.epochs)),
    }
}
