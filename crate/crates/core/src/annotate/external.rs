//! External annotation sidecars.
//!
//! One JSON record per sentence:
//!
//! ```text
//! {"book_id": "emma", "sent_index": 0,
//!  "tokens": [{"t": "Emma", "pos": "PROPN", "person": true}, ...],
//!  "category": "SIMPLE"}
//! ```
//!
//! `category` is optional. Tags may be native names or Universal
//! Dependencies tags (see [`PosTag`]'s `FromStr`).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AnnotatedDocument, AnnotatedSentence, AnnotatedToken, AnnotationSource, PosTag};
use crate::corpus::TokenStream;
use crate::features::SentenceCategory;
use crate::{jsonl, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub t: String,
    pub pos: String,
    #[serde(default)]
    pub person: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub book_id: String,
    pub sent_index: usize,
    pub tokens: Vec<TokenRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<SentenceCategory>,
}

/// Sentence records grouped by document id, ordered by `sent_index`.
#[derive(Debug, Clone, Default)]
pub struct ExternalAnnotations {
    by_doc: BTreeMap<String, Vec<SentenceRecord>>,
}

impl ExternalAnnotations {
    pub fn parse(content: &str, source: &str) -> Result<ExternalAnnotations> {
        let records: Vec<SentenceRecord> = jsonl::parse(content, source)?;
        let mut by_doc: BTreeMap<String, Vec<SentenceRecord>> = BTreeMap::new();
        for record in records {
            for token in &record.tokens {
                let tag: PosTag = token.pos.parse()?;
                if token.person && !tag.may_be_person() {
                    return Err(Error::InvalidAnnotation(format!(
                        "{} sentence {}: person token {:?} tagged {}",
                        record.book_id, record.sent_index, token.t, tag
                    )));
                }
            }
            by_doc.entry(record.book_id.clone()).or_default().push(record);
        }
        for (doc, records) in &mut by_doc {
            records.sort_by_key(|r| r.sent_index);
            if let Some(pair) = records.windows(2).find(|w| w[0].sent_index == w[1].sent_index) {
                return Err(Error::InvalidAnnotation(format!(
                    "{doc}: duplicate sent_index {}",
                    pair[0].sent_index
                )));
            }
        }
        Ok(ExternalAnnotations { by_doc })
    }

    pub fn load(path: &Path) -> Result<ExternalAnnotations> {
        let content = std::fs::read_to_string(path)?;
        Self::parse(&content, &path.display().to_string())
    }

    pub fn get(&self, doc_id: &str) -> Option<&[SentenceRecord]> {
        self.by_doc.get(doc_id).map(Vec::as_slice)
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.by_doc.keys().map(String::as_str)
    }
}

/// The records covering the first `n` tokens; the sentence straddling the
/// cut is shortened. Used when chunking dropped a book's tail.
pub fn truncate_records(records: &[SentenceRecord], n: usize) -> Vec<SentenceRecord> {
    let mut out = Vec::new();
    let mut remaining = n;
    for record in records {
        if remaining == 0 {
            break;
        }
        let take = record.tokens.len().min(remaining);
        let mut kept = record.clone();
        kept.tokens.truncate(take);
        if take < record.tokens.len() {
            kept.category = None;
        }
        remaining -= take;
        out.push(kept);
    }
    out
}

/// Builds an annotated document whose sentences, tags and person flags come
/// from `records`. Token texts must equal `stream` position by position.
pub fn apply(
    author_id: &str,
    doc_id: &str,
    text: String,
    stream: TokenStream,
    records: &[SentenceRecord],
) -> Result<AnnotatedDocument> {
    let mut sentences = Vec::with_capacity(records.len());
    let mut index = 0;
    for record in records {
        let start = index;
        let mut tokens = Vec::with_capacity(record.tokens.len());
        for token in &record.tokens {
            match stream.tokens.get(index) {
                Some(expected) if *expected == token.t => {}
                Some(expected) => {
                    return Err(Error::AnnotationMismatch {
                        index,
                        detail: format!("annotation has {:?}, corpus has {expected:?}", token.t),
                    })
                }
                None => {
                    return Err(Error::AnnotationMismatch {
                        index,
                        detail: format!("annotation continues past the {} corpus tokens", stream.len()),
                    })
                }
            }
            tokens.push(AnnotatedToken {
                text: token.t.clone(),
                pos: token.pos.parse()?,
                is_person: token.person,
            });
            index += 1;
        }
        sentences.push(AnnotatedSentence {
            start,
            tokens,
            category: record.category,
        });
    }
    if index != stream.len() {
        return Err(Error::AnnotationMismatch {
            index,
            detail: format!("annotation covers {index} of {} corpus tokens", stream.len()),
        });
    }
    Ok(AnnotatedDocument {
        author_id: author_id.to_string(),
        doc_id: doc_id.to_string(),
        text,
        stream,
        sentences,
        annotation_source: AnnotationSource::External,
    })
}
