use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Activation, EncoderConfig, ModelError, Pooling};
use crate::corpus::{bio_encode, Argument, EventMention, LabelVocab, Sentence, Span};
use crate::deptree::{AdjMatrix, DepTree, SubTree};
use crate::labels;
use crate::ndgrad::{ParamId, ParamStore, Tape, Tensor, Var};

#[derive(Clone, Debug, PartialEq)]
struct ParamIds {
    pos: ParamId,
    entity: ParamId,
    trigger_hidden: (ParamId, ParamId),
    trigger_out: (ParamId, ParamId),
    gcn: Vec<(ParamId, ParamId)>,
    arg: (ParamId, ParamId),
}

/// All learnable parameters plus the config and vocabulary they were
/// built for.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtractorModel {
    config: EncoderConfig,
    vocab: LabelVocab,
    params: ParamStore,
    ids: ParamIds,
}

/// Categorical inputs of one sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenFeatures {
    pub pos_ids: Vec<usize>,
    pub entity_ids: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TriggerPrediction {
    /// Arg-max event class per token.
    pub classes: Vec<usize>,
    /// Merged trigger spans with their event type.
    pub spans: Vec<(Span, String)>,
}

/// Output of the argument-role head for one pair.
#[derive(Clone, Copy, Debug)]
pub struct ArgumentScores {
    pub logits: Var,
    pub probs: Var,
}

/// Role decision for one predicted-trigger × entity pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PairDecision {
    /// Index into [`Extraction::events`].
    pub trigger: usize,
    /// Index into the sentence's entities.
    pub entity: usize,
    pub role: usize,
    pub probabilities: Vec<f64>,
}

/// Predicted events of one sentence plus every pair decision made.
#[derive(Clone, Debug, PartialEq)]
pub struct Extraction {
    pub events: Vec<EventMention>,
    pub pairs: Vec<PairDecision>,
}

/// Training target for one gold trigger × entity pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoldPair {
    pub trigger: Span,
    pub entity: usize,
    pub role: usize,
}

impl ExtractorModel {
    /// Xavier-initialised weights, zero biases.
    pub fn new(config: EncoderConfig, vocab: LabelVocab, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        for (name, (rows, cols), is_bias) in Self::layout(&config, &vocab) {
            let value = if is_bias { Tensor::zeros(rows, cols) } else { Tensor::xavier(rows, cols, &mut rng) };
            params.add(&name, value).map_err(|e| ModelError::Parameter { name, reason: e.to_string() })?;
        }
        Self::from_params(config, vocab, params)
    }

    /// Wraps loaded parameters after checking names and shapes.
    pub fn from_params(config: EncoderConfig, vocab: LabelVocab, params: ParamStore) -> Result<Self, ModelError> {
        config.validate()?;
        let layout = Self::layout(&config, &vocab);
        if params.len() != layout.len() {
            return Err(ModelError::Parameter {
                name: "*".into(),
                reason: format!("expected {} tensors, found {}", layout.len(), params.len()),
            });
        }
        let mut found = Vec::with_capacity(layout.len());
        for (name, (rows, cols), _) in &layout {
            let id = params.id(name).ok_or_else(|| ModelError::Parameter {
                name: name.clone(),
                reason: "missing".into(),
            })?;
            let shape = params.get(id).shape();
            if shape != [*rows, *cols] {
                return Err(ModelError::Parameter {
                    name: name.clone(),
                    reason: format!("shape {shape:?}, expected [{rows}, {cols}]"),
                });
            }
            found.push(id);
        }
        let pair = |i: usize| (found[i], found[i + 1]);
        let layers = config.gcn_layers;
        let ids = ParamIds {
            pos: found[0],
            entity: found[1],
            trigger_hidden: pair(2),
            trigger_out: pair(4),
            gcn: (0..layers).map(|l| pair(6 + 2 * l)).collect(),
            arg: pair(6 + 2 * layers),
        };
        Ok(ExtractorModel { config, vocab, params, ids })
    }

    fn layout(config: &EncoderConfig, vocab: &LabelVocab) -> Vec<(String, (usize, usize), bool)> {
        let h = config.gcn_hidden;
        let mut out = alloc::vec![
            ("embed.pos".to_string(), (vocab.num_pos_tags(), config.pos_dim), false),
            ("embed.entity".to_string(), (vocab.num_bio_tags(), config.entity_dim), false),
            ("trigger.hidden.weight".to_string(), (config.input_dim(), config.trigger_hidden), false),
            ("trigger.hidden.bias".to_string(), (1, config.trigger_hidden), true),
            ("trigger.out.weight".to_string(), (config.trigger_hidden, vocab.num_event_classes()), false),
            ("trigger.out.bias".to_string(), (1, vocab.num_event_classes()), true),
        ];
        for l in 0..config.gcn_layers {
            let fan_in = if l == 0 { config.input_dim() } else { h };
            out.push((format!("gcn.{l}.weight"), (fan_in, h), false));
            out.push((format!("gcn.{l}.bias"), (1, h), true));
        }
        out.push(("arg.weight".to_string(), (3 * h, vocab.num_role_classes()), false));
        out.push(("arg.bias".to_string(), (1, vocab.num_role_classes()), true));
        out
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn vocab(&self) -> &LabelVocab {
        &self.vocab
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    /// Ids of the argument-role head (weight, bias).
    pub fn argument_head(&self) -> (ParamId, ParamId) {
        self.ids.arg
    }

    pub fn features(&self, sentence: &Sentence) -> TokenFeatures {
        let pos_ids = sentence.tokens.iter().map(|t| self.vocab.pos_id(&t.pos)).collect();
        let entity_ids = if self.config.entity_channel {
            bio_encode(sentence).iter().map(|l| self.vocab.bio_id(l).unwrap_or(0)).collect()
        } else {
            alloc::vec![0; sentence.tokens.len()]
        };
        TokenFeatures { pos_ids, entity_ids }
    }

    /// `n × (word + pos + entity)` token encoding.
    pub fn encode_tokens(&self, tape: &mut Tape, features: &TokenFeatures, word_vectors: &Tensor) -> Result<Var, ModelError> {
        let n = features.pos_ids.len();
        if word_vectors.rows() != n || word_vectors.cols() != self.config.word_dim {
            return Err(ModelError::Config(format!(
                "word vectors {:?} for {n} tokens of dimension {}",
                word_vectors.shape(),
                self.config.word_dim
            )));
        }
        let words = tape.leaf(word_vectors.clone());
        let pos_table = tape.param(&self.params, self.ids.pos);
        let ent_table = tape.param(&self.params, self.ids.entity);
        let pos = tape.gather_rows(pos_table, &features.pos_ids)?;
        let ent = tape.gather_rows(ent_table, &features.entity_ids)?;
        Ok(tape.concat_cols(&[words, pos, ent])?)
    }

    /// Per-token event-class logits.
    pub fn trigger_logits(&self, tape: &mut Tape, encoding: Var) -> Result<Var, ModelError> {
        let (w1, b1) = self.ids.trigger_hidden;
        let (w2, b2) = self.ids.trigger_out;
        let (w1, b1, w2, b2) = (
            tape.param(&self.params, w1),
            tape.param(&self.params, b1),
            tape.param(&self.params, w2),
            tape.param(&self.params, b2),
        );
        let z = tape.matmul(encoding, w1)?;
        let z = tape.add_row(z, b1)?;
        let hidden = tape.tanh(z);
        let out = tape.matmul(hidden, w2)?;
        Ok(tape.add_row(out, b2)?)
    }

    /// Runs the GCN stack on `h0` (one row per adjacency node):
    /// `h ← σ(D⁻¹ Ã h W + b)` per layer.
    pub fn gcn_stack(&self, tape: &mut Tape, h0: Var, adj: &AdjMatrix) -> Result<Var, ModelError> {
        if tape.value(h0).rows() != adj.size() {
            return Err(ModelError::Config(format!(
                "GCN input has {} rows for {} graph nodes",
                tape.value(h0).rows(),
                adj.size()
            )));
        }
        let norm = tape.leaf(adj.normalized());
        let mut h = h0;
        for &(w, b) in &self.ids.gcn {
            let (w, b) = (tape.param(&self.params, w), tape.param(&self.params, b));
            let hw = tape.matmul(h, w)?;
            let agg = tape.matmul(norm, hw)?;
            let z = tape.add_row(agg, b)?;
            h = match self.config.activation {
                Activation::Sigmoid => tape.sigmoid(z),
                Activation::Relu => tape.relu(z),
            };
        }
        Ok(h)
    }

    /// GCN over the sub-tree rows of a full-sentence encoding.
    pub fn gcn_forward(&self, tape: &mut Tape, encoding: Var, sub: &SubTree, adj: &AdjMatrix) -> Result<Var, ModelError> {
        let h0 = tape.gather_rows(encoding, &sub.rows())?;
        self.gcn_stack(tape, h0, adj)
    }

    fn pool(&self, tape: &mut Tape, h: Var) -> Result<Var, ModelError> {
        Ok(match self.config.pooling {
            Pooling::Max => tape.max_pool_rows(h)?,
            Pooling::Avg => tape.avg_pool_rows(h)?,
            Pooling::Sum => tape.sum_pool_rows(h)?,
        })
    }

    /// Role distribution from `[f(h); f(h_trigger); f(h_entity)]`.
    pub fn classify_argument(&self, tape: &mut Tape, hidden: Var, sub: &SubTree) -> Result<ArgumentScores, ModelError> {
        if tape.value(hidden).rows() != sub.len() {
            return Err(ModelError::Config(format!(
                "GCN output has {} rows for {} sub-tree nodes",
                tape.value(hidden).rows(),
                sub.len()
            )));
        }
        if sub.trigger_positions.is_empty() || sub.entity_positions.is_empty() {
            return Err(ModelError::Config("trigger and entity must be inside the sub-tree".into()));
        }
        let whole = self.pool(tape, hidden)?;
        let trig_rows = tape.gather_rows(hidden, &sub.trigger_positions)?;
        let trig = self.pool(tape, trig_rows)?;
        let ent_rows = tape.gather_rows(hidden, &sub.entity_positions)?;
        let ent = self.pool(tape, ent_rows)?;
        let joined = tape.concat_cols(&[whole, trig, ent])?;
        let (w, b) = self.ids.arg;
        let (w, b) = (tape.param(&self.params, w), tape.param(&self.params, b));
        let logits = tape.matmul(joined, w)?;
        let logits = tape.add_row(logits, b)?;
        let probs = tape.softmax_rows(logits)?;
        Ok(ArgumentScores { logits, probs })
    }

    pub fn predict_triggers(&self, features: &TokenFeatures, word_vectors: &Tensor) -> Result<TriggerPrediction, ModelError> {
        let mut tape = Tape::new();
        let enc = self.encode_tokens(&mut tape, features, word_vectors)?;
        let logits = self.trigger_logits(&mut tape, enc)?;
        Ok(self.triggers_from_logits(tape.value(logits)))
    }

    fn triggers_from_logits(&self, logits: &Tensor) -> TriggerPrediction {
        let classes: Vec<usize> = (0..logits.rows()).map(|i| argmax(logits.row_slice(i))).collect();
        let spans = merge_trigger_runs(&classes)
            .into_iter()
            .map(|(span, c)| (span, self.vocab.event_label(c).unwrap_or(labels::NONE).to_string()))
            .collect();
        TriggerPrediction { classes, spans }
    }

    /// Predicts triggers, then classifies every predicted-trigger × entity
    /// pair; pairs classified NONE are not attached as arguments.
    pub fn extract_events(&self, sentence: &Sentence, word_vectors: &Tensor) -> Result<Extraction, ModelError> {
        let features = self.features(sentence);
        let mut tape = Tape::new();
        let enc = self.encode_tokens(&mut tape, &features, word_vectors)?;
        let logits = self.trigger_logits(&mut tape, enc)?;
        let triggers = self.triggers_from_logits(tape.value(logits));

        let tree = sentence.tree()?;
        let mut events: Vec<EventMention> = triggers
            .spans
            .iter()
            .map(|(span, ty)| EventMention { trigger: *span, event_type: ty.clone(), arguments: Vec::new() })
            .collect();
        let mut pairs = Vec::new();
        let mut cache: BTreeMap<Vec<usize>, Var> = BTreeMap::new();
        for (t, (span, _)) in triggers.spans.iter().enumerate() {
            for (e, entity) in sentence.entities.iter().enumerate() {
                let scores = self.score_pair(&mut tape, &tree, enc, *span, entity.span, &mut cache)?;
                let probabilities = tape.value(scores.probs).data().to_vec();
                let role = argmax(&probabilities);
                if role != 0 {
                    let label = self.vocab.role_label(role).unwrap_or(labels::NONE).to_string();
                    events[t].arguments.push(Argument { entity: e, role: label });
                }
                pairs.push(PairDecision { trigger: t, entity: e, role, probabilities });
            }
        }
        Ok(Extraction { events, pairs })
    }

    /// Prunes, convolves and classifies one pair. GCN outputs are shared
    /// between pairs whose sub-trees have identical node sets.
    pub fn score_pair(
        &self,
        tape: &mut Tape,
        tree: &DepTree,
        encoding: Var,
        trigger: Span,
        entity: Span,
        cache: &mut BTreeMap<Vec<usize>, Var>,
    ) -> Result<ArgumentScores, ModelError> {
        let sub = tree.contextual_subtree(trigger, entity, self.config.dist)?;
        let hidden = match cache.get(&sub.nodes) {
            Some(&h) => h,
            None => {
                let adj = tree.adjacency(&sub)?;
                let h = self.gcn_forward(tape, encoding, &sub, &adj)?;
                cache.insert(sub.nodes.clone(), h);
                h
            }
        };
        self.classify_argument(tape, hidden, &sub)
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Merges maximal runs of equal non-NONE classes into spans.
pub fn merge_trigger_runs(classes: &[usize]) -> Vec<(Span, usize)> {
    let mut out: Vec<(Span, usize)> = Vec::new();
    for (pos, &c) in classes.iter().enumerate() {
        let index = pos + 1;
        if c == 0 {
            continue;
        }
        match out.last_mut() {
            Some((span, prev)) if *prev == c && span.end + 1 == index => span.end = index,
            _ => out.push((Span::single(index), c)),
        }
    }
    out
}

/// Gold trigger span × entity pairs with role ids (0 = NONE). Events that
/// share a trigger span are merged; the first listed role wins.
pub fn gold_pairs(sentence: &Sentence, vocab: &LabelVocab) -> Vec<GoldPair> {
    let mut spans: Vec<Span> = Vec::new();
    for ev in &sentence.events {
        if !spans.contains(&ev.trigger) {
            spans.push(ev.trigger);
        }
    }
    let mut out = Vec::new();
    for span in spans {
        for entity in 0..sentence.entities.len() {
            let role = sentence
                .events
                .iter()
                .filter(|ev| ev.trigger == span)
                .flat_map(|ev| ev.arguments.iter())
                .find(|a| a.entity == entity)
                .and_then(|a| vocab.role_id(&a.role))
                .unwrap_or(0);
            out.push(GoldPair { trigger: span, entity, role });
        }
    }
    out
}

/// `L_trg + β·L_arg` on the tape. Without pairs the argument term is 0.
pub fn joint_loss(
    tape: &mut Tape,
    trigger_logits: Var,
    gold_triggers: &[usize],
    arg_logits: Option<Var>,
    gold_roles: &[usize],
    beta: f64,
) -> Result<Var, ModelError> {
    let trigger_loss = tape.cross_entropy(trigger_logits, gold_triggers)?;
    match arg_logits {
        Some(logits) if !gold_roles.is_empty() => {
            let arg_loss = tape.cross_entropy(logits, gold_roles)?;
            let weighted = tape.scale(arg_loss, beta);
            Ok(tape.add(trigger_loss, weighted)?)
        }
        _ => Ok(trigger_loss),
    }
}

pub fn combine_losses(trigger_loss: f64, argument_loss: f64, beta: f64) -> f64 {
    trigger_loss + beta * argument_loss
}
