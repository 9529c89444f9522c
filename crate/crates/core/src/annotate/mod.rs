//! Sentence segmentation, POS tags and person-name spans.
//!
//! Annotations come from one of two tiers: the built-in rule tables in this
//! module, or an external annotation JSONL (see [`external`]) whose tags and
//! spans replace the built-in ones.

pub mod external;
mod lexicon;
mod names;
mod segment;
mod tagger;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use external::{ExternalAnnotations, SentenceRecord, TokenRecord};
pub use lexicon::{LexiconIds, Lexicons};
pub use names::detect_person_names;
pub use segment::segment_sentences;
pub use tagger::pos_tag;

use crate::corpus::TokenStream;
use crate::features::SentenceCategory;
use crate::Error;

/// Closed POS tag set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PosTag {
    Noun,
    Propn,
    Verb,
    Adj,
    Adv,
    Det,
    Pron,
    ConjCoord,
    ConjSub,
    Punct,
    Other,
}

impl PosTag {
    pub const ALL: [PosTag; 11] = [
        PosTag::Noun,
        PosTag::Propn,
        PosTag::Verb,
        PosTag::Adj,
        PosTag::Adv,
        PosTag::Det,
        PosTag::Pron,
        PosTag::ConjCoord,
        PosTag::ConjSub,
        PosTag::Punct,
        PosTag::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::Noun => "NOUN",
            PosTag::Propn => "PROPN",
            PosTag::Verb => "VERB",
            PosTag::Adj => "ADJ",
            PosTag::Adv => "ADV",
            PosTag::Det => "DET",
            PosTag::Pron => "PRON",
            PosTag::ConjCoord => "CONJ_COORD",
            PosTag::ConjSub => "CONJ_SUB",
            PosTag::Punct => "PUNCT",
            PosTag::Other => "OTHER",
        }
    }

    /// Tags allowed on a token flagged as part of a person name.
    pub fn may_be_person(self) -> bool {
        matches!(self, PosTag::Propn | PosTag::Noun | PosTag::Other)
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parses the native tag names plus Universal Dependencies tags, which map
/// down as: AUX→VERB, CCONJ→CONJ_COORD, SCONJ→CONJ_SUB, and
/// ADP/NUM/PART/INTJ/SYM/X/SPACE→OTHER.
impl FromStr for PosTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(tag) = PosTag::ALL.into_iter().find(|t| t.as_str() == s) {
            return Ok(tag);
        }
        Ok(match s {
            "AUX" => PosTag::Verb,
            "CCONJ" => PosTag::ConjCoord,
            "SCONJ" => PosTag::ConjSub,
            "ADP" | "NUM" | "PART" | "INTJ" | "SYM" | "X" | "SPACE" => PosTag::Other,
            _ => return Err(Error::UnknownTag(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedToken {
    pub text: String,
    pub pos: PosTag,
    pub is_person: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedSentence {
    /// Index of the first token in the document's stream.
    pub start: usize,
    pub tokens: Vec<AnnotatedToken>,
    /// Clause-structure label supplied by an external parse, if any.
    pub category: Option<SentenceCategory>,
}

impl AnnotatedSentence {
    pub fn end(&self) -> usize {
        self.start + self.tokens.len()
    }

    /// Person spans as half-open token ranges relative to the sentence.
    pub fn person_spans(&self) -> Vec<std::ops::Range<usize>> {
        let mut spans = Vec::new();
        let mut open: Option<usize> = None;
        for (i, t) in self.tokens.iter().enumerate() {
            match (t.is_person, open) {
                (true, None) => open = Some(i),
                (false, Some(s)) => {
                    spans.push(s..i);
                    open = None;
                }
                _ => {}
            }
        }
        if let Some(s) = open {
            spans.push(s..self.tokens.len());
        }
        spans
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnotationSource {
    Builtin,
    External,
}

/// A tokenized text with sentence boundaries, tags and person flags.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedDocument {
    pub author_id: String,
    /// Book id, chunk id or generation id.
    pub doc_id: String,
    pub text: String,
    pub stream: TokenStream,
    pub sentences: Vec<AnnotatedSentence>,
    pub annotation_source: AnnotationSource,
}

impl AnnotatedDocument {
    /// Runs the built-in pipeline: segmentation, tagging, name detection.
    pub fn builtin(
        author_id: &str,
        doc_id: &str,
        text: String,
        stream: TokenStream,
        lexicons: &Lexicons,
    ) -> AnnotatedDocument {
        let sentences = segment_sentences(&stream, lexicons)
            .into_iter()
            .map(|range| {
                let words = &stream.tokens[range.clone()];
                let tags = pos_tag(words, lexicons);
                let mut tokens: Vec<AnnotatedToken> = words
                    .iter()
                    .zip(tags)
                    .map(|(text, pos)| AnnotatedToken {
                        text: text.clone(),
                        pos,
                        is_person: false,
                    })
                    .collect();
                for span in detect_person_names(&tokens, lexicons) {
                    for t in &mut tokens[span] {
                        t.is_person = true;
                    }
                }
                AnnotatedSentence {
                    start: range.start,
                    tokens,
                    category: None,
                }
            })
            .collect();
        AnnotatedDocument {
            author_id: author_id.to_string(),
            doc_id: doc_id.to_string(),
            text,
            stream,
            sentences,
            annotation_source: AnnotationSource::Builtin,
        }
    }

    /// Builtin annotation of a token-only input (chunks, tokenized generations).
    pub fn builtin_from_tokens<S: AsRef<str>>(
        author_id: &str,
        doc_id: &str,
        tokens: &[S],
        lexicons: &Lexicons,
    ) -> AnnotatedDocument {
        let (text, stream) = TokenStream::from_tokens(tokens);
        Self::builtin(author_id, doc_id, text, stream, lexicons)
    }

    /// Source text of sentence `i`.
    pub fn sentence_text(&self, i: usize) -> &str {
        let s = &self.sentences[i];
        match self.stream.span(s.start..s.end()) {
            Some(span) => &self.text[span],
            None => "",
        }
    }

    /// Per-token person flags over the whole stream.
    pub fn person_mask(&self) -> Vec<bool> {
        self.sentences
            .iter()
            .flat_map(|s| s.tokens.iter().map(|t| t.is_person))
            .collect()
    }
}
