//! Experiment configs and runs.
//!
//! A config is a JSON object with four sections:
//!
//! ```json
//! { "corpus":     { "path": "docs/", "train_fraction": 0.7, "seed": 1 },
//!   "embeddings": { "random": { "dim": 32, "seed": 7 } },
//!   "model":      { "dist": 1, "beta": 2.0 },
//!   "train":      { "epochs": 30, "learning_rate": 0.001 } }
//! ```
//!
//! `corpus` takes either `path` (a corpus JSON file or directory) or
//! `synthetic` (`{"sentences": n, "seed": s}`). `embeddings` is one of
//! `random`, `static` (text vectors) or `contextual` (binary vector file).
//! Relative paths resolve against the directory of the config file.
//! `model.word_dim` is always taken from the embedding source.

use std::fs;
use std::io;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use evgcn_core::corpus::split_corpus;
use evgcn_core::embeddings::EmbeddingError;
use evgcn_core::pipeline::{extract_all, score, train_with};
use evgcn_core::synthetic;
use evgcn_core::{
    EmbeddingProvider, EncoderConfig, ExtractorModel, LabelVocab, MetricsReport, Sentence, StaticTable, Tensor,
    TrainConfig, TrainError,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checkpoint::{save_model, CheckpointError};
use crate::corpus_json::{load_corpus, load_label_list, CorpusError};
use crate::embeddings_io::{load_static, ContextualVectorFile, EmbeddingFileError};

/// Directory searched for `--config` names that do not exist relative to
/// the working directory.
pub const CONFIG_DIR_ENV: &str = "EVGCN_CONFIG_DIR";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("embeddings: {0}")]
    EmbeddingFile(#[from] EmbeddingFileError),
    #[error("embeddings: {0}")]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub embeddings: EmbeddingsConfig,
    #[serde(default)]
    pub model: EncoderConfig,
    #[serde(default)]
    pub train: TrainConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSource>,
    /// Held-out corpus; when absent the main corpus is split by document.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_path: Option<PathBuf>,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    /// Seed of the document shuffle used for splitting.
    #[serde(default)]
    pub seed: u64,
    /// Label-list files; the built-in commodity news labels when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<LabelFiles>,
}

fn default_train_fraction() -> f64 {
    0.7
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSource {
    pub sentences: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelFiles {
    pub event_types: PathBuf,
    pub arg_roles: PathBuf,
    pub entity_types: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum EmbeddingsConfig {
    /// Seeded uniform vectors; each word's vector depends only on the word
    /// and the seed.
    Random {
        #[serde(default = "default_random_dim")]
        dim: usize,
        #[serde(default)]
        seed: u64,
    },
    Static { path: PathBuf },
    Contextual { path: PathBuf },
}

fn default_random_dim() -> usize {
    32
}

impl Default for EmbeddingsConfig {
    fn default() -> Self {
        EmbeddingsConfig::Random { dim: default_random_dim(), seed: 0 }
    }
}

impl EmbeddingsConfig {
    /// Same source with relative paths joined onto `base`.
    pub fn resolved(&self, base: &Path) -> Self {
        match self {
            EmbeddingsConfig::Random { .. } => self.clone(),
            EmbeddingsConfig::Static { path } => EmbeddingsConfig::Static { path: base.join(path) },
            EmbeddingsConfig::Contextual { path } => EmbeddingsConfig::Contextual { path: base.join(path) },
        }
    }

    pub fn open(&self) -> Result<Provider, ExperimentError> {
        Ok(match self {
            EmbeddingsConfig::Random { dim, seed } => Provider::Random { dim: *dim, seed: *seed },
            EmbeddingsConfig::Static { path } => Provider::Static(load_static(path)?),
            EmbeddingsConfig::Contextual { path } => Provider::Contextual(ContextualVectorFile::load(path)?),
        })
    }
}

/// The embedding source of a run.
#[derive(Clone, Debug)]
pub enum Provider {
    Random { dim: usize, seed: u64 },
    Static(StaticTable),
    Contextual(ContextualVectorFile),
}

impl EmbeddingProvider for Provider {
    fn dim(&self) -> usize {
        match self {
            Provider::Random { dim, .. } => *dim,
            Provider::Static(t) => t.dim(),
            Provider::Contextual(c) => c.dim(),
        }
    }

    fn lookup(&self, sentence: &Sentence) -> Result<Tensor, EmbeddingError> {
        match self {
            Provider::Random { dim, seed } => StaticTable::random(sentence.texts(), *dim, *seed)?.lookup(sentence),
            Provider::Static(t) => t.lookup(sentence),
            Provider::Contextual(c) => c.lookup(sentence),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str, path: &Path) -> Result<Self, ExperimentError> {
        serde_json::from_str(text).map_err(|e| ExperimentError::Config { path: path.to_path_buf(), message: e.to_string() })
    }

    /// Reads a config and resolves its relative paths against the config's
    /// directory.
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(|source| ExperimentError::Io { path: path.to_path_buf(), source })?;
        let config = Self::from_json(&text, path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        Ok(config.resolved(base))
    }

    pub fn resolved(mut self, base: &Path) -> Self {
        let join = |p: &mut PathBuf| *p = base.join(&*p);
        self.corpus.path.as_mut().map(join);
        self.corpus.test_path.as_mut().map(join);
        if let Some(labels) = &mut self.corpus.labels {
            join(&mut labels.event_types);
            join(&mut labels.arg_roles);
            join(&mut labels.entity_types);
        }
        self.embeddings = self.embeddings.resolved(base);
        self
    }

    /// Checks everything that can be checked without loading data. `path`
    /// only labels errors.
    pub fn validate(&self, path: &Path) -> Result<(), ExperimentError> {
        let fail = |message: String| Err(ExperimentError::Config { path: path.to_path_buf(), message });
        let c = &self.corpus;
        match (&c.path, &c.synthetic) {
            (Some(_), Some(_)) => return fail("corpus: set either path or synthetic, not both".into()),
            (None, None) => return fail("corpus: one of path or synthetic is required".into()),
            (Some(p), None) if !p.exists() => return fail(format!("corpus path {} does not exist", p.display())),
            (None, Some(s)) if s.sentences == 0 => return fail("corpus: synthetic.sentences must be positive".into()),
            _ => {}
        }
        if let Some(p) = &c.test_path {
            if !p.exists() {
                return fail(format!("corpus test_path {} does not exist", p.display()));
            }
        } else if !(c.train_fraction > 0.0 && c.train_fraction < 1.0) {
            return fail(format!("corpus: train_fraction must lie strictly between 0 and 1, got {}", c.train_fraction));
        }
        if let Some(labels) = &c.labels {
            for p in [&labels.event_types, &labels.arg_roles, &labels.entity_types] {
                if !p.exists() {
                    return fail(format!("label file {} does not exist", p.display()));
                }
            }
        }
        match &self.embeddings {
            EmbeddingsConfig::Random { dim: 0, .. } => return fail("embeddings: random.dim must be positive".into()),
            EmbeddingsConfig::Static { path } | EmbeddingsConfig::Contextual { path } if !path.exists() => {
                return fail(format!("embeddings file {} does not exist", path.display()));
            }
            _ => {}
        }
        let mut model = self.model.clone();
        model.word_dim = model.word_dim.max(1);
        model.validate().map_err(|e| ExperimentError::Config { path: path.to_path_buf(), message: e.to_string() })?;
        self.train.validate().map_err(|e| ExperimentError::Config { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn label_vocab(&self) -> Result<LabelVocab, ExperimentError> {
        let Some(files) = &self.corpus.labels else { return Ok(LabelVocab::commodity_news()) };
        let events = load_label_list(&files.event_types)?;
        let roles = load_label_list(&files.arg_roles)?;
        let entities = load_label_list(&files.entity_types)?;
        LabelVocab::new(&events, &roles, &entities).map_err(|e| ExperimentError::Config {
            path: files.event_types.clone(),
            message: e.to_string(),
        })
    }

    /// Loads the corpus and returns `(train, test)`.
    pub fn load_split(&self, vocab: &LabelVocab) -> Result<(Vec<Sentence>, Vec<Sentence>), ExperimentError> {
        let all = match (&self.corpus.path, &self.corpus.synthetic) {
            (Some(p), _) => load_corpus(p, vocab)?,
            (None, Some(s)) => synthetic::corpus(s.sentences, s.seed),
            (None, None) => Vec::new(),
        };
        let config_err = |message: String| ExperimentError::Config { path: PathBuf::from("corpus"), message };
        let (train, test) = match &self.corpus.test_path {
            Some(p) => (all, load_corpus(p, vocab)?),
            None => split_corpus(&all, self.corpus.train_fraction, self.corpus.seed).map_err(|e| config_err(e.to_string()))?,
        };
        if train.is_empty() {
            return Err(config_err("the training side of the split is empty".into()));
        }
        if test.is_empty() {
            return Err(config_err("the test side of the split is empty".into()));
        }
        Ok((train, test))
    }
}

/// Finds a config file: `name` as given, else under `$EVGCN_CONFIG_DIR`.
pub fn locate_config(name: &Path) -> PathBuf {
    if name.exists() || name.is_absolute() {
        return name.to_path_buf();
    }
    match std::env::var_os(CONFIG_DIR_ENV) {
        Some(dir) if Path::new(&dir).join(name).exists() => Path::new(&dir).join(name),
        _ => name.to_path_buf(),
    }
}

/// Extraction over sentence chunks on scoped threads. Results equal
/// [`evgcn_core::pipeline::evaluate`].
pub fn evaluate_parallel<P>(
    model: &ExtractorModel,
    sentences: &[Sentence],
    provider: &P,
    threads: usize,
) -> Result<MetricsReport, TrainError>
where
    P: EmbeddingProvider + Sync,
{
    let threads = threads.clamp(1, sentences.len().max(1));
    let chunk = sentences.len().div_ceil(threads).max(1);
    let parts: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = sentences
            .chunks(chunk)
            .map(|part| scope.spawn(move || extract_all(model, part, provider)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("evaluation thread panicked")).collect()
    });
    let mut predicted = Vec::with_capacity(sentences.len());
    for part in parts {
        predicted.extend(part?.into_iter().map(|x| x.events));
    }
    Ok(score(sentences, &predicted, model.vocab()))
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Pretty JSON with a trailing newline.
pub fn report_json(report: &MetricsReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("reports serialise");
    text.push('\n');
    text
}

/// Tab-separated per-role table in vocabulary order, NONE first.
pub fn per_role_tsv(report: &MetricsReport, vocab: &LabelVocab) -> String {
    let mut out = String::from("role\tprecision\trecall\tf1\tcorrect\tpredicted\tgold\n");
    for role in vocab.role_labels() {
        let p = report.per_role.get(role).copied().unwrap_or_default();
        out.push_str(&format!(
            "{role}\t{:.4}\t{:.4}\t{:.4}\t{}\t{}\t{}\n",
            p.precision, p.recall, p.f1, p.correct, p.predicted, p.gold
        ));
    }
    out
}

pub fn loss_csv(losses: &[f64]) -> String {
    let mut out = String::from("epoch,loss\n");
    for (i, l) in losses.iter().enumerate() {
        out.push_str(&format!("{},{l:?}\n", i + 1));
    }
    out
}

/// Writes `report.json` and `per_role.tsv` into `dir`.
pub fn write_report(dir: &Path, report: &MetricsReport, vocab: &LabelVocab) -> Result<(), ExperimentError> {
    write_file(&dir.join("report.json"), &report_json(report))?;
    write_file(&dir.join("per_role.tsv"), &per_role_tsv(report, vocab))
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<(), ExperimentError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| ExperimentError::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, text).map_err(|source| ExperimentError::Io { path: path.to_path_buf(), source })
}

/// A loaded experiment: corpus split, vocabulary, provider and the encoder
/// config with `word_dim` taken from the provider.
pub struct Prepared {
    pub train: Vec<Sentence>,
    pub test: Vec<Sentence>,
    pub vocab: LabelVocab,
    pub provider: Provider,
    pub encoder: EncoderConfig,
}

/// Validates the config, then loads its data. POS tags are collected from
/// the training side only.
pub fn prepare_experiment(config: &ExperimentConfig, path: &Path) -> Result<Prepared, ExperimentError> {
    config.validate(path)?;
    let base_vocab = config.label_vocab()?;
    let (train, test) = config.load_split(&base_vocab)?;
    let vocab = base_vocab.with_pos_from(&train);
    let provider = config.embeddings.open()?;
    if let Provider::Contextual(file) = &provider {
        file.validate_against(&train)?;
        file.validate_against(&test)?;
    }
    let mut encoder = config.model.clone();
    encoder.word_dim = provider.dim();
    Ok(Prepared { train, test, vocab, provider, encoder })
}

pub struct ExperimentOutcome {
    pub model: ExtractorModel,
    pub losses: Vec<f64>,
    pub report: MetricsReport,
    pub train_size: usize,
    pub test_size: usize,
}

/// Split, train, evaluate on the test side and write artifacts to `out`:
/// `model.bin` (+ sidecar), `report.json`, `per_role.tsv`, `loss.csv`, and
/// with `train.checkpoint_every > 0` a `checkpoints/epoch-NNNN/` directory
/// per cadence holding the checkpoint and its test report.
pub fn run_experiment(config: &ExperimentConfig, path: &Path, out: &Path) -> Result<ExperimentOutcome, ExperimentError> {
    let prepared = prepare_experiment(config, path)?;
    let Prepared { train, test, vocab, provider, encoder } = prepared;
    let model = ExtractorModel::new(encoder, vocab, config.train.seed).map_err(TrainError::from)?;
    let threads = default_threads();
    let every = config.train.checkpoint_every;
    let mut failure = None;
    let outcome = train_with(model, &train, &provider, &config.train, |report, model| {
        if every == 0 || report.epoch % every != 0 {
            return ControlFlow::Continue(());
        }
        let dir = out.join("checkpoints").join(format!("epoch-{:04}", report.epoch));
        let step = save_model(&dir.join("model.bin"), model, &config.embeddings)
            .map_err(ExperimentError::from)
            .and_then(|()| Ok(evaluate_parallel(model, &test, &provider, threads)?))
            .and_then(|r| write_report(&dir, &r, model.vocab()));
        match step {
            Ok(()) => ControlFlow::Continue(()),
            Err(e) => {
                failure = Some(e);
                ControlFlow::Break(())
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let report = evaluate_parallel(&outcome.model, &test, &provider, threads)?;
    save_model(&out.join("model.bin"), &outcome.model, &config.embeddings)?;
    write_report(out, &report, outcome.model.vocab())?;
    write_file(&out.join("loss.csv"), &loss_csv(&outcome.losses))?;
    Ok(ExperimentOutcome {
        model: outcome.model,
        losses: outcome.losses,
        report,
        train_size: train.len(),
        test_size: test.len(),
    })
}
