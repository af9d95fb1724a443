//! CoNLL-U reader.
//!
//! Only ID, FORM, UPOS, HEAD and DEPREL are used. Multi-word token ranges
//! (`3-4`) and empty nodes (`5.1`) are skipped. Sentences carry no entities
//! or events.

use std::path::Path;

use evgcn_core::{Sentence, Token};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ConlluError {
    pub line: usize,
    pub message: String,
}

/// Parses every sentence in `text`. The document id comes from the last
/// `# newdoc id = ...` comment, falling back to `default_doc`.
pub fn parse(text: &str, default_doc: &str) -> Result<Vec<Sentence>, ConlluError> {
    let mut out = Vec::new();
    let mut doc_id = default_doc.to_string();
    let mut index_in_doc = 0;
    let mut tokens: Vec<Token> = Vec::new();
    let mut start_line = 0;

    let mut flush = |tokens: &mut Vec<Token>, doc_id: &str, index_in_doc: &mut usize| {
        if !tokens.is_empty() {
            out.push(Sentence {
                doc_id: doc_id.to_string(),
                index: *index_in_doc,
                tokens: std::mem::take(tokens),
                entities: Vec::new(),
                events: Vec::new(),
            });
            *index_in_doc += 1;
        }
    };

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut tokens, &doc_id, &mut index_in_doc);
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(id) = comment.trim().strip_prefix("newdoc id =") {
                flush(&mut tokens, &doc_id, &mut index_in_doc);
                doc_id = id.trim().to_string();
                index_in_doc = 0;
            }
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 10 {
            return Err(ConlluError { line: line_no, message: format!("expected 10 tab-separated fields, found {}", fields.len()) });
        }
        if fields[0].contains('-') || fields[0].contains('.') {
            continue;
        }
        if tokens.is_empty() {
            start_line = line_no;
        }
        let number = |field: &str, what: &str| {
            field.parse::<usize>().map_err(|_| ConlluError { line: line_no, message: format!("invalid {what} {field:?}") })
        };
        let id = number(fields[0], "token id")?;
        if id != tokens.len() + 1 {
            return Err(ConlluError {
                line: line_no,
                message: format!("token id {id} out of sequence in sentence starting at line {start_line}"),
            });
        }
        tokens.push(Token {
            index: id,
            text: fields[1].to_string(),
            pos: fields[3].to_string(),
            head: number(fields[6], "head")?,
            deprel: fields[7].to_string(),
        });
    }
    flush(&mut tokens, &doc_id, &mut index_in_doc);
    Ok(out)
}

pub fn load(path: &Path) -> Result<Vec<Sentence>, ConlluError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConlluError { line: 0, message: format!("{}: {e}", path.display()) })?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse(&text, &stem)
}
