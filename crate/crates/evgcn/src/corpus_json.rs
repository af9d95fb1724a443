//! Corpus JSON: one object per document.
//!
//! ```json
//! { "doc_id": "d1",
//!   "sentences": [ { "tokens":   [ {"text": "oil", "pos": "NOUN", "head": 2, "deprel": "compound"} ],
//!                    "entities": [ {"id": "T1", "start": 1, "end": 1, "type": "COMMODITY"} ],
//!                    "events":   [ {"trigger_start": 2, "trigger_end": 2, "type": "movement-up-gain",
//!                                   "args": [ {"entity_id": "T1", "role": "Item"} ] } ] } ] }
//! ```
//!
//! Token positions are 1-based and head `0` marks the root.

use std::fs;
use std::path::{Path, PathBuf};

use evgcn_core::{Argument, EntityMention, EventMention, LabelVocab, Sentence, Span, Token, ValidationError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: JSON error at line {line}, column {column}: {message}")]
    Json { path: PathBuf, line: usize, column: usize, message: String },
    #[error("{path}: {source}")]
    Invalid {
        path: PathBuf,
        #[source]
        source: ValidationError,
    },
    #[error("{path}: sentence {doc_id}#{sentence}: event {event} references unknown entity id {entity_id:?}")]
    UnknownEntityId { path: PathBuf, doc_id: String, sentence: usize, event: usize, entity_id: String },
    #[error("{path}: no *.json documents found")]
    NoDocuments { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentFile {
    pub doc_id: String,
    pub sentences: Vec<SentenceFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SentenceFile {
    pub tokens: Vec<TokenFile>,
    #[serde(default)]
    pub entities: Vec<EntityFile>,
    #[serde(default)]
    pub events: Vec<EventFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenFile {
    pub text: String,
    pub pos: String,
    pub head: usize,
    pub deprel: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityFile {
    pub id: String,
    pub start: usize,
    pub end: usize,
    #[serde(rename = "type")]
    pub entity_type: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventFile {
    pub trigger_start: usize,
    pub trigger_end: usize,
    #[serde(rename = "type")]
    pub event_type: String,
    #[serde(default)]
    pub args: Vec<ArgFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArgFile {
    pub entity_id: String,
    pub role: String,
}

impl DocumentFile {
    /// Groups consecutive sentences of the same document.
    pub fn from_sentences(sentences: &[Sentence]) -> Vec<DocumentFile> {
        let mut docs: Vec<DocumentFile> = Vec::new();
        for s in sentences {
            let file = SentenceFile::from_sentence(s);
            match docs.last_mut() {
                Some(doc) if doc.doc_id == s.doc_id => doc.sentences.push(file),
                _ => docs.push(DocumentFile { doc_id: s.doc_id.clone(), sentences: vec![file] }),
            }
        }
        docs
    }

    /// Converts every sentence, validating against `vocab` when given.
    /// Entity ids are always resolved. `path` only labels errors.
    pub fn into_sentences(self, vocab: Option<&LabelVocab>, path: &Path) -> Result<Vec<Sentence>, CorpusError> {
        let doc_id = self.doc_id;
        self.sentences
            .into_iter()
            .enumerate()
            .map(|(index, s)| {
                let sentence = s.into_sentence(&doc_id, index, path)?;
                if let Some(vocab) = vocab {
                    sentence
                        .validate(vocab)
                        .map_err(|source| CorpusError::Invalid { path: path.to_path_buf(), source })?;
                }
                Ok(sentence)
            })
            .collect()
    }
}

impl SentenceFile {
    pub fn from_sentence(s: &Sentence) -> Self {
        SentenceFile {
            tokens: s
                .tokens
                .iter()
                .map(|t| TokenFile { text: t.text.clone(), pos: t.pos.clone(), head: t.head, deprel: t.deprel.clone() })
                .collect(),
            entities: s
                .entities
                .iter()
                .map(|e| EntityFile {
                    id: e.id.clone(),
                    start: e.span.start,
                    end: e.span.end,
                    entity_type: e.entity_type.clone(),
                })
                .collect(),
            events: s
                .events
                .iter()
                .map(|ev| EventFile {
                    trigger_start: ev.trigger.start,
                    trigger_end: ev.trigger.end,
                    event_type: ev.event_type.clone(),
                    args: ev
                        .arguments
                        .iter()
                        .map(|a| ArgFile { entity_id: s.entities[a.entity].id.clone(), role: a.role.clone() })
                        .collect(),
                })
                .collect(),
        }
    }

    fn into_sentence(self, doc_id: &str, index: usize, path: &Path) -> Result<Sentence, CorpusError> {
        let tokens = self
            .tokens
            .into_iter()
            .enumerate()
            .map(|(i, t)| Token { index: i + 1, text: t.text, pos: t.pos, head: t.head, deprel: t.deprel })
            .collect();
        let entities: Vec<EntityMention> = self
            .entities
            .into_iter()
            .map(|e| EntityMention { id: e.id, span: Span::new(e.start, e.end), entity_type: e.entity_type })
            .collect();
        let mut events = Vec::with_capacity(self.events.len());
        for (k, ev) in self.events.into_iter().enumerate() {
            let mut arguments = Vec::with_capacity(ev.args.len());
            for a in ev.args {
                let entity = entities.iter().position(|e| e.id == a.entity_id).ok_or_else(|| {
                    CorpusError::UnknownEntityId {
                        path: path.to_path_buf(),
                        doc_id: doc_id.to_string(),
                        sentence: index,
                        event: k,
                        entity_id: a.entity_id.clone(),
                    }
                })?;
                arguments.push(Argument { entity, role: a.role });
            }
            events.push(EventMention {
                trigger: Span::new(ev.trigger_start, ev.trigger_end),
                event_type: ev.event_type,
                arguments,
            });
        }
        Ok(Sentence { doc_id: doc_id.to_string(), index, tokens, entities, events })
    }
}

/// Parses one document, validating against `vocab` when given. `path` only
/// labels errors.
pub fn parse_document(text: &str, vocab: Option<&LabelVocab>, path: &Path) -> Result<Vec<Sentence>, CorpusError> {
    let doc: DocumentFile = serde_json::from_str(text).map_err(|e| CorpusError::Json {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    doc.into_sentences(vocab, path)
}

/// Loads a document file, or every `*.json` file of a directory in file
/// name order, and validates every sentence against `vocab`.
pub fn load_corpus(path: &Path, vocab: &LabelVocab) -> Result<Vec<Sentence>, CorpusError> {
    load_corpus_with(path, Some(vocab))
}

/// [`load_corpus`] with optional label validation. Tree structure and span
/// bounds are only checked when `vocab` is given.
pub fn load_corpus_with(path: &Path, vocab: Option<&LabelVocab>) -> Result<Vec<Sentence>, CorpusError> {
    let io = |source| CorpusError::Io { path: path.to_path_buf(), source };
    let files = if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(io)?
            .map(|entry| entry.map(|e| e.path()))
            .collect::<Result<_, _>>()
            .map_err(io)?;
        files.retain(|p| p.extension().is_some_and(|e| e == "json"));
        files.sort();
        if files.is_empty() {
            return Err(CorpusError::NoDocuments { path: path.to_path_buf() });
        }
        files
    } else {
        vec![path.to_path_buf()]
    };
    let mut out = Vec::new();
    for file in files {
        let text = fs::read_to_string(&file).map_err(|source| CorpusError::Io { path: file.clone(), source })?;
        out.extend(parse_document(&text, vocab, &file)?);
    }
    Ok(out)
}

/// Pretty-printed JSON of one document.
pub fn document_json(doc: &DocumentFile) -> String {
    let mut text = serde_json::to_string_pretty(doc).expect("corpus documents serialise");
    text.push('\n');
    text
}

/// Writes one `<doc_id>.json` per document into `dir`, returning the
/// written paths.
pub fn write_corpus(dir: &Path, sentences: &[Sentence]) -> Result<Vec<PathBuf>, CorpusError> {
    fs::create_dir_all(dir).map_err(|source| CorpusError::Io { path: dir.to_path_buf(), source })?;
    let mut written = Vec::new();
    for doc in DocumentFile::from_sentences(sentences) {
        let path = dir.join(format!("{}.json", file_stem(&doc.doc_id)));
        fs::write(&path, document_json(&doc)).map_err(|source| CorpusError::Io { path: path.clone(), source })?;
        written.push(path);
    }
    Ok(written)
}

fn file_stem(doc_id: &str) -> String {
    doc_id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect()
}

/// One label per line; blank lines are skipped.
pub fn load_label_list(path: &Path) -> Result<Vec<String>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}
