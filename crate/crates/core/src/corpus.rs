//! Annotated sentences, label vocabularies and corpus utilities.
//!
//! Token positions are 1-based throughout, matching the corpus files;
//! head `0` denotes the virtual root.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::deptree::{DepTree, TreeError};
use crate::labels;

/// Inclusive 1-based token range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn single(index: usize) -> Self {
        Span { start: index, end: index }
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index <= self.end
    }

    /// Token indices covered by the span.
    pub fn indices(&self) -> core::ops::RangeInclusive<usize> {
        self.start..=self.end
    }

    /// True when both bounds lie within `1..=n` and `start <= end`.
    pub fn within(&self, n: usize) -> bool {
        1 <= self.start && self.start <= self.end && self.end <= n
    }

    fn partially_overlaps(&self, other: &Span) -> bool {
        let disjoint = self.end < other.start || other.end < self.start;
        let nested = (self.start <= other.start && other.end <= self.end)
            || (other.start <= self.start && self.end <= other.end);
        !disjoint && !nested
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    /// 1-based position in the sentence.
    pub index: usize,
    pub text: String,
    pub pos: String,
    /// Head position, `0` for the syntactic root.
    pub head: usize,
    pub deprel: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntityMention {
    pub id: String,
    pub span: Span,
    pub entity_type: String,
}

/// Link from an event to one of the sentence's entities.
#[derive(Clone, Debug, PartialEq)]
pub struct Argument {
    /// Index into [`Sentence::entities`].
    pub entity: usize,
    pub role: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventMention {
    pub trigger: Span,
    pub event_type: String,
    pub arguments: Vec<Argument>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sentence {
    pub doc_id: String,
    /// Position of the sentence inside its document.
    pub index: usize,
    pub tokens: Vec<Token>,
    pub entities: Vec<EntityMention>,
    pub events: Vec<EventMention>,
}

/// A rule broken by a sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Empty,
    TokenIndex { position: usize, found: usize },
    SelfHeaded { token: usize },
    Tree(TreeError),
    EntitySpan { entity: String, span: Span },
    DuplicateEntityId { entity: String },
    UnknownEntityType { entity: String, label: String },
    PartialOverlap { first: String, second: String },
    TriggerSpan { event: usize, span: Span },
    UnknownEventType { event: usize, label: String },
    UnknownRole { event: usize, label: String },
    MissingEntity { event: usize, entity: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "sentence has no tokens"),
            Violation::TokenIndex { position, found } => {
                write!(f, "token at position {position} carries index {found}")
            }
            Violation::SelfHeaded { token } => write!(f, "self-headed token {token}"),
            Violation::Tree(err) => write!(f, "{err}"),
            Violation::EntitySpan { entity, span } => {
                write!(f, "entity {entity} span {span} out of bounds")
            }
            Violation::DuplicateEntityId { entity } => write!(f, "duplicate entity id {entity}"),
            Violation::UnknownEntityType { entity, label } => {
                write!(f, "entity {entity} has unknown type {label}")
            }
            Violation::PartialOverlap { first, second } => {
                write!(f, "entities {first} and {second} partially overlap")
            }
            Violation::TriggerSpan { event, span } => {
                write!(f, "event {event} trigger span {span} out of bounds")
            }
            Violation::UnknownEventType { event, label } => {
                write!(f, "event {event} has unknown type {label}")
            }
            Violation::UnknownRole { event, label } => {
                write!(f, "event {event} has unknown role {label}")
            }
            Violation::MissingEntity { event, entity } => {
                write!(f, "event {event} references missing entity {entity}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("validation error in sentence {doc_id}#{sentence}: {violation}")]
pub struct ValidationError {
    pub doc_id: String,
    pub sentence: usize,
    pub violation: Violation,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn heads(&self) -> Vec<usize> {
        self.tokens.iter().map(|t| t.head).collect()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }

    pub fn tree(&self) -> Result<DepTree, TreeError> {
        let deprels: Vec<String> = self.tokens.iter().map(|t| t.deprel.clone()).collect();
        DepTree::build(&self.heads(), &deprels)
    }

    /// Surface text of a span joined by single spaces.
    pub fn span_text(&self, span: Span) -> String {
        let words: Vec<&str> = span
            .indices()
            .filter_map(|i| self.tokens.get(i - 1))
            .map(|t| t.text.as_str())
            .collect();
        words.join(" ")
    }

    pub fn entity_by_id(&self, id: &str) -> Option<usize> {
        self.entities.iter().position(|e| e.id == id)
    }

    /// Checks every structural and vocabulary invariant.
    pub fn validate(&self, vocab: &LabelVocab) -> Result<(), ValidationError> {
        self.check(vocab).map_err(|violation| ValidationError {
            doc_id: self.doc_id.clone(),
            sentence: self.index,
            violation,
        })
    }

    fn check(&self, vocab: &LabelVocab) -> Result<(), Violation> {
        let n = self.tokens.len();
        if n == 0 {
            return Err(Violation::Empty);
        }
        for (pos, token) in self.tokens.iter().enumerate() {
            if token.index != pos + 1 {
                return Err(Violation::TokenIndex { position: pos + 1, found: token.index });
            }
            if token.head == token.index {
                return Err(Violation::SelfHeaded { token: token.index });
            }
        }
        self.tree().map_err(Violation::Tree)?;

        let mut ids = BTreeSet::new();
        for entity in &self.entities {
            if !entity.span.within(n) {
                return Err(Violation::EntitySpan { entity: entity.id.clone(), span: entity.span });
            }
            if !ids.insert(entity.id.as_str()) {
                return Err(Violation::DuplicateEntityId { entity: entity.id.clone() });
            }
            if vocab.entity_type_id(&entity.entity_type).is_none() {
                return Err(Violation::UnknownEntityType {
                    entity: entity.id.clone(),
                    label: entity.entity_type.clone(),
                });
            }
        }
        for (i, a) in self.entities.iter().enumerate() {
            for b in &self.entities[i + 1..] {
                if a.span.partially_overlaps(&b.span) {
                    return Err(Violation::PartialOverlap { first: a.id.clone(), second: b.id.clone() });
                }
            }
        }
        for (e, event) in self.events.iter().enumerate() {
            if !event.trigger.within(n) {
                return Err(Violation::TriggerSpan { event: e, span: event.trigger });
            }
            if vocab.event_id(&event.event_type).unwrap_or(0) == 0 {
                return Err(Violation::UnknownEventType { event: e, label: event.event_type.clone() });
            }
            for arg in &event.arguments {
                if arg.entity >= self.entities.len() {
                    return Err(Violation::MissingEntity { event: e, entity: arg.entity });
                }
                if vocab.role_id(&arg.role).unwrap_or(0) == 0 {
                    return Err(Violation::UnknownRole { event: e, label: arg.role.clone() });
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum VocabError {
    #[error("duplicate label {0}")]
    Duplicate(String),
    #[error("label list must not contain the reserved label {0}")]
    Reserved(String),
    #[error("empty label list")]
    Empty,
}

/// Bidirectional label maps for every categorical input and output.
///
/// Id 0 is `NONE` for event types and roles, `O` for the BIO entity tags
/// and `<UNK>` for POS tags.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "VocabLists", into = "VocabLists"))]
pub struct LabelVocab {
    events: Labels,
    roles: Labels,
    entity_types: Labels,
    bio: Labels,
    pos: Labels,
}

/// Plain label lists, without the reserved entries at id 0.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VocabLists {
    pub event_types: Vec<String>,
    pub arg_roles: Vec<String>,
    pub entity_types: Vec<String>,
    pub pos_tags: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Default)]
struct Labels {
    names: Vec<String>,
    ids: BTreeMap<String, usize>,
}

impl Labels {
    fn new<I, S>(reserved: &str, labels: I) -> Result<Self, VocabError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut out = Labels::default();
        out.push(reserved);
        for label in labels {
            let label = label.as_ref();
            if label == reserved {
                return Err(VocabError::Reserved(label.to_string()));
            }
            if out.ids.contains_key(label) {
                return Err(VocabError::Duplicate(label.to_string()));
            }
            out.push(label);
        }
        Ok(out)
    }

    fn push(&mut self, label: &str) {
        self.ids.insert(label.to_string(), self.names.len());
        self.names.push(label.to_string());
    }

    fn id(&self, label: &str) -> Option<usize> {
        self.ids.get(label).copied()
    }

    fn user_labels(&self) -> Vec<String> {
        self.names[1..].to_vec()
    }
}

impl LabelVocab {
    /// Builds a vocabulary from user label lists; the reserved id-0 labels
    /// are added automatically and must not appear in the lists.
    pub fn new<S: AsRef<str>>(
        event_types: &[S],
        arg_roles: &[S],
        entity_types: &[S],
    ) -> Result<Self, VocabError> {
        if event_types.is_empty() || arg_roles.is_empty() || entity_types.is_empty() {
            return Err(VocabError::Empty);
        }
        let events = Labels::new(labels::NONE, event_types.iter().map(|s| s.as_ref()))?;
        let roles = Labels::new(labels::NONE, arg_roles.iter().map(|s| s.as_ref()))?;
        let entity_types = Labels::new(labels::OUTSIDE, entity_types.iter().map(|s| s.as_ref()))?;
        let mut bio = Labels::default();
        bio.push(labels::OUTSIDE);
        for ty in &entity_types.names[1..] {
            bio.push(&format!("B-{ty}"));
            bio.push(&format!("I-{ty}"));
        }
        let pos = Labels::new(labels::UNKNOWN_POS, core::iter::empty::<&str>())?;
        Ok(LabelVocab { events, roles, entity_types, bio, pos })
    }

    /// 18 event types, 19 roles and 21 entity types of the commodity news
    /// dataset, with an empty POS vocabulary.
    pub fn commodity_news() -> Self {
        Self::new(&labels::EVENT_TYPES, &labels::ARGUMENT_ROLES, &labels::ENTITY_TYPES)
            .expect("built-in label lists are valid")
    }

    /// Returns a copy whose POS vocabulary holds every tag seen in
    /// `sentences`, in sorted order.
    pub fn with_pos_from(&self, sentences: &[Sentence]) -> Self {
        let tags: BTreeSet<&str> =
            sentences.iter().flat_map(|s| s.tokens.iter().map(|t| t.pos.as_str())).collect();
        let mut out = self.clone();
        out.pos = Labels::new(labels::UNKNOWN_POS, tags.into_iter().filter(|t| *t != labels::UNKNOWN_POS))
            .expect("deduplicated tags");
        out
    }

    pub fn num_event_classes(&self) -> usize {
        self.events.names.len()
    }

    pub fn num_role_classes(&self) -> usize {
        self.roles.names.len()
    }

    pub fn num_bio_tags(&self) -> usize {
        self.bio.names.len()
    }

    pub fn num_pos_tags(&self) -> usize {
        self.pos.names.len()
    }

    pub fn event_id(&self, label: &str) -> Option<usize> {
        self.events.id(label)
    }

    pub fn event_label(&self, id: usize) -> Option<&str> {
        self.events.names.get(id).map(String::as_str)
    }

    pub fn role_id(&self, label: &str) -> Option<usize> {
        self.roles.id(label)
    }

    pub fn role_label(&self, id: usize) -> Option<&str> {
        self.roles.names.get(id).map(String::as_str)
    }

    pub fn role_labels(&self) -> &[String] {
        &self.roles.names
    }

    pub fn event_labels(&self) -> &[String] {
        &self.events.names
    }

    /// Id of a plain entity type (without BIO prefix); `None` for unknown
    /// types and for `O`.
    pub fn entity_type_id(&self, label: &str) -> Option<usize> {
        self.entity_types.id(label).filter(|&id| id != 0)
    }

    pub fn bio_id(&self, label: &str) -> Option<usize> {
        self.bio.id(label)
    }

    pub fn bio_label(&self, id: usize) -> Option<&str> {
        self.bio.names.get(id).map(String::as_str)
    }

    /// POS tag id, falling back to `<UNK>` (id 0).
    pub fn pos_id(&self, tag: &str) -> usize {
        self.pos.id(tag).unwrap_or(0)
    }

    pub fn pos_labels(&self) -> &[String] {
        &self.pos.names
    }

    pub fn lists(&self) -> VocabLists {
        VocabLists {
            event_types: self.events.user_labels(),
            arg_roles: self.roles.user_labels(),
            entity_types: self.entity_types.user_labels(),
            pos_tags: self.pos.user_labels(),
        }
    }

    pub fn from_lists(lists: &VocabLists) -> Result<Self, VocabError> {
        let mut vocab = Self::new(&lists.event_types, &lists.arg_roles, &lists.entity_types)?;
        vocab.pos = Labels::new(labels::UNKNOWN_POS, lists.pos_tags.iter())?;
        Ok(vocab)
    }
}

impl From<LabelVocab> for VocabLists {
    fn from(vocab: LabelVocab) -> Self {
        vocab.lists()
    }
}

impl TryFrom<VocabLists> for LabelVocab {
    type Error = VocabError;

    fn try_from(lists: VocabLists) -> Result<Self, Self::Error> {
        LabelVocab::from_lists(&lists)
    }
}

/// Per-token BIO entity labels.
///
/// Nested entities encode the innermost (shortest) span; ties keep the
/// entity listed first.
pub fn bio_encode(sentence: &Sentence) -> Vec<String> {
    let n = sentence.tokens.len();
    let mut owner: Vec<Option<usize>> = alloc::vec![None; n];
    let mut order: Vec<usize> = (0..sentence.entities.len()).collect();
    // Longest first so shorter spans paint over them.
    order.sort_by(|&a, &b| {
        let (sa, sb) = (sentence.entities[a].span, sentence.entities[b].span);
        sb.len().cmp(&sa.len()).then(b.cmp(&a))
    });
    for e in order {
        let span = sentence.entities[e].span;
        for i in span.indices() {
            if let Some(slot) = owner.get_mut(i - 1) {
                *slot = Some(e);
            }
        }
    }
    owner
        .iter()
        .enumerate()
        .map(|(pos, slot)| match slot {
            None => labels::OUTSIDE.to_string(),
            Some(e) => {
                let entity = &sentence.entities[*e];
                let continues = pos > 0 && owner[pos - 1] == Some(*e);
                if continues {
                    format!("I-{}", entity.entity_type)
                } else {
                    format!("B-{}", entity.entity_type)
                }
            }
        })
        .collect()
}

/// Decodes BIO labels back into `(span, type)` pairs. Stray `I-` tags
/// start a new span.
pub fn bio_decode<S: AsRef<str>>(labels: &[S]) -> Vec<(Span, String)> {
    let mut out: Vec<(Span, String)> = Vec::new();
    let mut open: Option<(usize, String)> = None;
    for (pos, label) in labels.iter().enumerate() {
        let label = label.as_ref();
        let index = pos + 1;
        let (kind, ty) = match label.split_once('-') {
            Some((kind, ty)) if kind == "B" || kind == "I" => (kind, ty),
            _ => ("O", ""),
        };
        let continues = kind == "I" && matches!(&open, Some((_, t)) if t == ty);
        if !continues {
            if let Some((start, t)) = open.take() {
                out.push((Span::new(start, index - 1), t));
            }
            if kind != "O" {
                open = Some((index, ty.to_string()));
            }
        }
    }
    if let Some((start, t)) = open {
        out.push((Span::new(start, labels.len()), t));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SplitError {
    #[error("cannot split an empty corpus")]
    Empty,
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    Fraction(f64),
}

/// Splits by document: documents are shuffled with `seed` and the first
/// `round(train_fraction * documents)` go to the training side. Sentence
/// order inside each side follows the input.
pub fn split_corpus(
    sentences: &[Sentence],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<Sentence>, Vec<Sentence>), SplitError> {
    if sentences.is_empty() {
        return Err(SplitError::Empty);
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(SplitError::Fraction(train_fraction));
    }
    let mut docs: Vec<&str> = Vec::new();
    let mut seen = BTreeSet::new();
    for s in sentences {
        if seen.insert(s.doc_id.as_str()) {
            docs.push(s.doc_id.as_str());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    docs.shuffle(&mut rng);
    let n_train = libm::round(train_fraction * docs.len() as f64) as usize;
    let train_docs: BTreeSet<&str> = docs[..n_train].iter().copied().collect();
    let (train, test) = sentences.iter().cloned().partition(|s| train_docs.contains(s.doc_id.as_str()));
    Ok((train, test))
}
