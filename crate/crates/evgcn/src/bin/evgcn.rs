use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use evgcn::corpus_json::{load_corpus_with, write_corpus};
use evgcn::experiment::{
    default_threads, evaluate_parallel, locate_config, prepare_experiment, report_json, run_experiment, write_report,
    ExperimentConfig, CONFIG_DIR_ENV,
};
use evgcn::{conllu, load_model};
use evgcn_core::pipeline::extract_all;
use evgcn_core::{synthetic, Sentence, Span};

/// Event extraction with graph convolutions over pruned dependency trees.
#[derive(Parser)]
#[command(name = "evgcn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the contextual sub-tree of one trigger/entity pair.
    Prune {
        /// Corpus JSON file/directory, or a `.conllu` file.
        #[arg(long)]
        input: PathBuf,
        /// Zero-based sentence position in the input.
        #[arg(long, default_value_t = 0)]
        sentence: usize,
        /// Trigger span, 1-based inclusive `start:end` (or a single index).
        #[arg(long, value_parser = parse_span)]
        trigger: Span,
        /// Entity span, 1-based inclusive `start:end` (or a single index).
        #[arg(long, value_parser = parse_span)]
        entity: Span,
        /// Hops kept around the trigger-entity path; negative keeps the whole tree.
        #[arg(long, allow_negative_numbers = true)]
        dist: i32,
        /// Also print the sub-tree in Graphviz DOT.
        #[arg(long)]
        dot: bool,
    },
    /// Split, train and evaluate as described by an experiment config.
    Train {
        /// Experiment config JSON; looked up under $EVGCN_CONFIG_DIR when not found.
        #[arg(long)]
        config: PathBuf,
        /// Output directory [default: runs/<config name>].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on the test side of a config's corpus.
    Eval {
        /// Experiment config JSON; looked up under $EVGCN_CONFIG_DIR when not found.
        #[arg(long)]
        config: PathBuf,
        /// Parameter file written by `train` (its `.json` sidecar must sit next to it).
        #[arg(long)]
        checkpoint: PathBuf,
        /// Directory for report.json and per_role.tsv [default: the checkpoint's directory].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract events from a corpus and write it back with predicted events.
    Predict {
        /// Parameter file written by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Corpus JSON file or directory; gold events, if any, are ignored.
        #[arg(long)]
        input: PathBuf,
        /// Output directory, one JSON file per document.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a seeded synthetic corpus, one JSON file per document.
    GenSynthetic {
        #[arg(long)]
        sentences: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_span(text: &str) -> Result<Span, String> {
    let (a, b) = text.split_once(':').unwrap_or((text, text));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| format!("expected start:end with positive integers, got {text:?}"));
    let (start, end) = (num(a)?, num(b)?);
    if start == 0 || end < start {
        return Err(format!("span {text:?} must satisfy 1 <= start <= end"));
    }
    Ok(Span::new(start, end))
}

/// Failure exiting with status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Prune { input, sentence, trigger, entity, dist, dot } => {
            prune(&input, sentence, trigger, entity, dist, dot)
        }
        Command::Train { config, out } => train(&config, out),
        Command::Eval { config, checkpoint, out } => eval(&config, &checkpoint, out),
        Command::Predict { checkpoint, input, out } => predict(&checkpoint, &input, &out),
        Command::GenSynthetic { sentences, seed, out } => {
            let corpus = synthetic::corpus(sentences, seed);
            let files = write_corpus(&out, &corpus)?;
            eprintln!("wrote {} sentences in {} documents to {}", corpus.len(), files.len(), out.display());
            Ok(())
        }
    }
}

fn read_parses(input: &Path) -> Result<Vec<Sentence>> {
    if input.extension().is_some_and(|e| e == "conllu") {
        Ok(conllu::load(input).with_context(|| format!("reading {}", input.display()))?)
    } else {
        Ok(load_corpus_with(input, None)?)
    }
}

fn prune(input: &Path, index: usize, trigger: Span, entity: Span, dist: i32, dot: bool) -> Result<()> {
    let sentences = read_parses(input)?;
    let Some(sentence) = sentences.get(index) else {
        bail!(UsageError(format!("--sentence {index} out of range: input has {} sentences", sentences.len())));
    };
    for (flag, span) in [("--trigger", trigger), ("--entity", entity)] {
        if !span.within(sentence.len()) {
            bail!(UsageError(format!("{flag} {span} out of range: sentence has {} tokens", sentence.len())));
        }
    }
    let tree = sentence.tree().with_context(|| format!("sentence {}#{}", sentence.doc_id, sentence.index))?;
    let sub = tree.contextual_subtree(trigger, entity, dist)?;
    let words = sentence.texts();
    println!("{}", sub.render(&words));
    if dot {
        print!("{}", tree.to_dot(&sub, &words));
    }
    Ok(())
}

fn load_config(name: &Path) -> Result<(ExperimentConfig, PathBuf)> {
    let path = locate_config(name);
    if !path.exists() {
        bail!("config {} not found (also searched ${CONFIG_DIR_ENV})", name.display());
    }
    Ok((ExperimentConfig::load(&path)?, path))
}

fn train(name: &Path, out: Option<PathBuf>) -> Result<()> {
    let (config, path) = load_config(name)?;
    let out = out.unwrap_or_else(|| {
        Path::new("runs").join(path.file_stem().map(|s| s.to_os_string()).unwrap_or_else(|| "run".into()))
    });
    let outcome = run_experiment(&config, &path, &out)?;
    let r = &outcome.report;
    eprintln!(
        "trained on {} sentences, tested on {}; final loss {:.6}",
        outcome.train_size,
        outcome.test_size,
        outcome.losses.last().copied().unwrap_or(f64::NAN)
    );
    eprintln!(
        "trigger-id F1 {:.4}  trigger-cls F1 {:.4}  arg-id F1 {:.4}  arg-role F1 {:.4}",
        r.trigger_identification.f1, r.trigger_classification.f1, r.argument_identification.f1, r.argument_role.f1
    );
    eprintln!("artifacts in {}", out.display());
    Ok(())
}

fn eval(name: &Path, checkpoint: &Path, out: Option<PathBuf>) -> Result<()> {
    let (config, path) = load_config(name)?;
    let prepared = prepare_experiment(&config, &path)?;
    let (model, _) = load_model(checkpoint)?;
    if model.config().word_dim != prepared.encoder.word_dim {
        bail!(
            "checkpoint expects {}-dimensional word vectors, config provides {}",
            model.config().word_dim,
            prepared.encoder.word_dim
        );
    }
    let report = evaluate_parallel(&model, &prepared.test, &prepared.provider, default_threads())?;
    let out = out.unwrap_or_else(|| checkpoint.parent().map(Path::to_path_buf).unwrap_or_default());
    write_report(&out, &report, model.vocab())?;
    print!("{}", report_json(&report));
    Ok(())
}

fn predict(checkpoint: &Path, input: &Path, out: &Path) -> Result<()> {
    let (model, sidecar) = load_model(checkpoint)?;
    let provider = sidecar.embeddings.open()?;
    let mut sentences = load_corpus_with(input, Some(model.vocab()))?;
    let extractions = extract_all(&model, &sentences, &provider)?;
    for (s, x) in sentences.iter_mut().zip(extractions) {
        s.events = x.events;
    }
    let files = write_corpus(out, &sentences)?;
    eprintln!("wrote predictions for {} sentences to {} files in {}", sentences.len(), files.len(), out.display());
    Ok(())
}
