use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::metrics::{score, MetricsReport};
use crate::corpus::{LabelVocab, Sentence};
use crate::deptree::{AdjMatrix, SubTree};
use crate::embeddings::{EmbeddingError, EmbeddingProvider};
use crate::model::{gold_pairs, joint_loss, EncoderConfig, Extraction, ExtractorModel, ModelError, TokenFeatures};
use crate::ndgrad::{Adam, AdamConfig, ShapeError, Tape, Tensor, Var};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub epochs: usize,
    /// Sentences per optimizer step.
    pub batch_size: usize,
    pub seed: u64,
    pub learning_rate: f64,
    /// Epoch interval for checkpoint callbacks; 0 disables them.
    pub checkpoint_every: usize,
    /// NONE pairs kept per linked pair, resampled every epoch. `None` keeps
    /// every NONE pair.
    pub negative_sample_ratio: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 4,
            seed: 13,
            learning_rate: 1e-3,
            checkpoint_every: 0,
            negative_sample_ratio: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 {
            return Err(TrainError::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(TrainError::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if let Some(r) = self.negative_sample_ratio {
            if !(r.is_finite() && r >= 0.0) {
                return Err(TrainError::Config(format!("negative_sample_ratio must be non-negative, got {r}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("training set is empty")]
    EmptyTrainSet,
    #[error("sentence {doc_id}#{index}: {source}")]
    Sentence {
        doc_id: String,
        index: usize,
        #[source]
        source: ModelError,
    },
    #[error("loss diverged to {loss} at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize, loss: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<ShapeError> for TrainError {
    fn from(e: ShapeError) -> Self {
        TrainError::Model(ModelError::Shape(e))
    }
}

/// One gold trigger × entity pair with its pruned graph.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedPair {
    pub sub: SubTree,
    pub adj: AdjMatrix,
    pub role: usize,
}

/// Everything the loss needs for one sentence, computed once.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedSentence {
    pub features: TokenFeatures,
    pub words: Tensor,
    pub trigger_classes: Vec<usize>,
    pub pairs: Vec<PreparedPair>,
}

/// Per-epoch mean joint loss.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    pub loss: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: ExtractorModel,
    pub losses: Vec<f64>,
}

fn sentence_err(sentence: &Sentence, source: impl Into<ModelError>) -> TrainError {
    TrainError::Sentence { doc_id: sentence.doc_id.clone(), index: sentence.index, source: source.into() }
}

/// Precomputes features, gold classes and pruned graphs. Training pairs
/// are gold trigger spans × all entities.
pub fn prepare<P: EmbeddingProvider>(
    model: &ExtractorModel,
    sentences: &[Sentence],
    provider: &P,
) -> Result<Vec<PreparedSentence>, TrainError> {
    let vocab = model.vocab();
    let dist = model.config().dist;
    sentences
        .iter()
        .map(|s| {
            let words = provider.lookup(s).map_err(|e: EmbeddingError| sentence_err(s, e))?;
            let tree = s.tree().map_err(|e| sentence_err(s, e))?;
            let mut trigger_classes = alloc::vec![0; s.len()];
            for ev in &s.events {
                let class = vocab.event_id(&ev.event_type).unwrap_or(0);
                for i in ev.trigger.indices() {
                    if let Some(slot) = trigger_classes.get_mut(i - 1) {
                        *slot = class;
                    }
                }
            }
            let pairs = gold_pairs(s, vocab)
                .into_iter()
                .map(|gp| {
                    let sub = tree
                        .contextual_subtree(gp.trigger, s.entities[gp.entity].span, dist)
                        .map_err(|e| sentence_err(s, e))?;
                    let adj = tree.adjacency(&sub).map_err(|e| sentence_err(s, e))?;
                    Ok(PreparedPair { sub, adj, role: gp.role })
                })
                .collect::<Result<Vec<_>, TrainError>>()?;
            Ok(PreparedSentence { features: model.features(s), words, trigger_classes, pairs })
        })
        .collect()
}

/// Mean over sentences of `L_trg + β·L_arg`, restricted to the listed
/// pairs of each sentence (`None` = all pairs).
pub fn batch_loss(
    model: &ExtractorModel,
    tape: &mut Tape,
    batch: &[(&PreparedSentence, Option<&[usize]>)],
) -> Result<Var, TrainError> {
    let mut losses = Vec::with_capacity(batch.len());
    for (sentence, keep) in batch {
        let enc = model.encode_tokens(tape, &sentence.features, &sentence.words)?;
        let trig = model.trigger_logits(tape, enc)?;
        let selected: Vec<&PreparedPair> = match keep {
            Some(idx) => idx.iter().map(|&i| &sentence.pairs[i]).collect(),
            None => sentence.pairs.iter().collect(),
        };
        let mut cache: BTreeMap<&[usize], Var> = BTreeMap::new();
        let mut logits = Vec::with_capacity(selected.len());
        let mut roles = Vec::with_capacity(selected.len());
        for pair in selected {
            let hidden = match cache.get(pair.sub.nodes.as_slice()) {
                Some(&h) => h,
                None => {
                    let h = model.gcn_forward(tape, enc, &pair.sub, &pair.adj)?;
                    cache.insert(&pair.sub.nodes, h);
                    h
                }
            };
            logits.push(model.classify_argument(tape, hidden, &pair.sub)?.logits);
            roles.push(pair.role);
        }
        let arg_logits = if logits.is_empty() { None } else { Some(tape.concat_rows(&logits)?) };
        let loss = joint_loss(tape, trig, &sentence.trigger_classes, arg_logits, &roles, model.config().beta)?;
        losses.push(loss);
    }
    if losses.is_empty() {
        return Err(TrainError::EmptyTrainSet);
    }
    let stacked = tape.concat_rows(&losses)?;
    let total = tape.sum(stacked);
    Ok(tape.scale(total, 1.0 / losses.len() as f64))
}

/// Builds a fresh model seeded from `config.seed` and trains it.
pub fn train<P: EmbeddingProvider>(
    sentences: &[Sentence],
    provider: &P,
    vocab: LabelVocab,
    encoder: EncoderConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    let model = ExtractorModel::new(encoder, vocab, config.seed)?;
    train_with(model, sentences, provider, config, |_, _| ControlFlow::Continue(()))
}

/// Trains `model` in place. `on_epoch` runs after every epoch and may stop
/// training early.
pub fn train_with<P, F>(
    mut model: ExtractorModel,
    sentences: &[Sentence],
    provider: &P,
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<TrainOutcome, TrainError>
where
    P: EmbeddingProvider,
    F: FnMut(&EpochReport, &ExtractorModel) -> ControlFlow<()>,
{
    config.validate()?;
    if sentences.is_empty() {
        return Err(TrainError::EmptyTrainSet);
    }
    let prepared = prepare(&model, sentences, provider)?;
    let mut adam = Adam::new(model.params(), AdamConfig { learning_rate: config.learning_rate, ..AdamConfig::default() });
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x005e_ed0f_7a11);
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut losses = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let keeps: Vec<Option<Vec<usize>>> = prepared
            .iter()
            .map(|s| config.negative_sample_ratio.map(|r| sample_pairs(s, r, &mut rng)))
            .collect();
        let mut epoch_total = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<(&PreparedSentence, Option<&[usize]>)> =
                chunk.iter().map(|&i| (&prepared[i], keeps[i].as_deref())).collect();
            let mut tape = Tape::new();
            let loss = batch_loss(&model, &mut tape, &batch)?;
            let value = tape.value(loss).item();
            if !value.is_finite() {
                return Err(TrainError::Diverged { epoch, batch: b, loss: value });
            }
            epoch_total += value * chunk.len() as f64;
            let grads = tape.backward(loss)?.for_params(model.params());
            adam.step(model.params_mut(), &grads)?;
        }
        let report = EpochReport { epoch, loss: epoch_total / prepared.len() as f64 };
        losses.push(report.loss);
        if on_epoch(&report, &model).is_break() {
            break;
        }
    }
    Ok(TrainOutcome { model, losses })
}

fn sample_pairs(sentence: &PreparedSentence, ratio: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let (mut keep, mut negatives): (Vec<usize>, Vec<usize>) =
        (0..sentence.pairs.len()).partition(|&i| sentence.pairs[i].role != 0);
    let quota = libm::ceil(ratio * keep.len() as f64) as usize;
    negatives.shuffle(rng);
    keep.extend(negatives.into_iter().take(quota));
    keep.sort_unstable();
    keep
}

/// Runs extraction on every sentence.
pub fn extract_all<P: EmbeddingProvider>(
    model: &ExtractorModel,
    sentences: &[Sentence],
    provider: &P,
) -> Result<Vec<Extraction>, TrainError> {
    sentences
        .iter()
        .map(|s| {
            let words = provider.lookup(s).map_err(|e| sentence_err(s, e))?;
            model.extract_events(s, &words).map_err(|e| sentence_err(s, e))
        })
        .collect()
}

pub fn evaluate<P: EmbeddingProvider>(
    model: &ExtractorModel,
    sentences: &[Sentence],
    provider: &P,
) -> Result<MetricsReport, TrainError> {
    let extractions = extract_all(model, sentences, provider)?;
    let predicted: Vec<_> = extractions.into_iter().map(|x| x.events).collect();
    Ok(score(sentences, &predicted, model.vocab()))
}
