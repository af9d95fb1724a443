use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{EventMention, LabelVocab, Sentence, Span};
use crate::labels;

/// Micro-averaged precision, recall and F1 with the underlying counts.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl Prf {
    pub fn from_counts(correct: usize, predicted: usize, gold: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(correct, predicted);
        let recall = ratio(correct, gold);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        Prf { precision, recall, f1, correct, predicted, gold }
    }

    fn from_sets<T: Ord>(predicted: &BTreeSet<T>, gold: &BTreeSet<T>) -> Self {
        Prf::from_counts(predicted.intersection(gold).count(), predicted.len(), gold.len())
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsReport {
    pub trigger_identification: Prf,
    pub trigger_classification: Prf,
    pub argument_identification: Prf,
    pub argument_role: Prf,
    /// Every role of the vocabulary, NONE included.
    pub per_role: BTreeMap<String, Prf>,
}

type TriggerKey = (usize, Span, String);
type PairKey = (usize, Span, String, usize);

/// Scores predicted events against the gold annotation of the same
/// sentences. An argument only counts when its trigger matched span and
/// type. Per-role scores cover every trigger × entity pair on either side,
/// with unlinked pairs labelled NONE.
pub fn score(gold: &[Sentence], predicted: &[Vec<EventMention>], vocab: &LabelVocab) -> MetricsReport {
    let mut gold_spans = BTreeSet::new();
    let mut pred_spans = BTreeSet::new();
    let mut gold_triggers: BTreeSet<TriggerKey> = BTreeSet::new();
    let mut pred_triggers: BTreeSet<TriggerKey> = BTreeSet::new();
    let mut gold_pairs: BTreeMap<PairKey, String> = BTreeMap::new();
    let mut pred_pairs: BTreeMap<PairKey, String> = BTreeMap::new();

    for (s, sentence) in gold.iter().enumerate() {
        let entities = sentence.entities.len();
        let empty = Vec::new();
        let events = predicted.get(s).unwrap_or(&empty);
        for (evs, spans, triggers, pairs) in [
            (&sentence.events, &mut gold_spans, &mut gold_triggers, &mut gold_pairs),
            (events, &mut pred_spans, &mut pred_triggers, &mut pred_pairs),
        ] {
            for ev in evs {
                spans.insert((s, ev.trigger));
                triggers.insert((s, ev.trigger, ev.event_type.clone()));
                for e in 0..entities {
                    let role = ev
                        .arguments
                        .iter()
                        .find(|a| a.entity == e)
                        .map(|a| a.role.clone())
                        .unwrap_or_else(|| String::from(labels::NONE));
                    pairs.entry((s, ev.trigger, ev.event_type.clone(), e)).or_insert(role);
                }
            }
        }
    }

    let linked = |pairs: &BTreeMap<PairKey, String>, with_role: bool| -> BTreeSet<(PairKey, String)> {
        pairs
            .iter()
            .filter(|(_, r)| r.as_str() != labels::NONE)
            .map(|(k, r)| (k.clone(), if with_role { r.clone() } else { String::new() }))
            .collect()
    };

    let mut per_role = BTreeMap::new();
    for role in vocab.role_labels() {
        let select = |pairs: &BTreeMap<PairKey, String>| -> BTreeSet<PairKey> {
            pairs.iter().filter(|(_, r)| *r == role).map(|(k, _)| k.clone()).collect()
        };
        per_role.insert(role.clone(), Prf::from_sets(&select(&pred_pairs), &select(&gold_pairs)));
    }

    MetricsReport {
        trigger_identification: Prf::from_sets(&pred_spans, &gold_spans),
        trigger_classification: Prf::from_sets(&pred_triggers, &gold_triggers),
        argument_identification: Prf::from_sets(&linked(&pred_pairs, false), &linked(&gold_pairs, false)),
        argument_role: Prf::from_sets(&linked(&pred_pairs, true), &linked(&gold_pairs, true)),
        per_role,
    }
}
