//! Whitespace + punctuation tokenizer and pre-tokenized sidecar ingestion.
//!
//! Rules of the `whitespace_punct` scheme, applied in order:
//!
//! 1. Text is split on Unicode whitespace into words.
//! 2. Each word is split into atoms: maximal runs of alphanumeric
//!    characters, and maximal runs of one repeated non-alphanumeric
//!    character (`"--"`, `"..."`, `"!"`).
//! 3. A single-character punctuation atom that sits between two alphanumeric
//!    atoms is glued to both neighbours (`don't`, `well-known`, `3.14`),
//!    except for the dash characters `—` and `–`, which always stand alone.
//!
//! Leading and trailing punctuation therefore always detaches, and every
//! token is an exact slice of the source.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenizerScheme {
    WhitespacePunct,
    External,
}

/// Tokens with their byte spans in the source text.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenStream {
    pub tokens: Vec<String>,
    pub offsets: Vec<(usize, usize)>,
}

/// One record of a pre-tokenized sidecar file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SidecarRecord {
    pub book_id: String,
    pub tokens: Vec<String>,
    pub offsets: Vec<[usize; 2]>,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Byte span covered by tokens `range` (empty range yields `None`).
    pub fn span(&self, range: Range<usize>) -> Option<Range<usize>> {
        if range.is_empty() {
            return None;
        }
        Some(self.offsets[range.start].0..self.offsets[range.end - 1].1)
    }

    /// Builds a synthetic source by joining `tokens` with single spaces.
    /// Used for token-only inputs such as chunk stores.
    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> (String, TokenStream) {
        let mut text = String::new();
        let mut stream = TokenStream::default();
        for (i, token) in tokens.iter().enumerate() {
            if i > 0 {
                text.push(' ');
            }
            let start = text.len();
            text.push_str(token.as_ref());
            stream.tokens.push(token.as_ref().to_string());
            stream.offsets.push((start, text.len()));
        }
        (text, stream)
    }

    /// Validates a sidecar against `text`: spans must be in bounds, strictly
    /// increasing, non-overlapping and equal to their token strings.
    pub fn from_sidecar(text: &str, record: &SidecarRecord) -> Result<TokenStream> {
        if record.tokens.len() != record.offsets.len() {
            return Err(Error::AnnotationMismatch {
                index: record.tokens.len().min(record.offsets.len()),
                detail: format!(
                    "{} tokens but {} offsets in sidecar for {}",
                    record.tokens.len(),
                    record.offsets.len(),
                    record.book_id
                ),
            });
        }
        let mut prev_end = 0;
        for (i, (token, &[start, end])) in record.tokens.iter().zip(&record.offsets).enumerate() {
            let mismatch = |detail: String| Error::AnnotationMismatch { index: i, detail };
            if start >= end || start < prev_end || end > text.len() {
                return Err(mismatch(format!("bad span [{start},{end}) after {prev_end}")));
            }
            match text.get(start..end) {
                Some(slice) if slice == token => {}
                Some(slice) => return Err(mismatch(format!("token {token:?} but source has {slice:?}"))),
                None => return Err(mismatch(format!("span [{start},{end}) splits a character"))),
            }
            prev_end = end;
        }
        Ok(TokenStream {
            tokens: record.tokens.clone(),
            offsets: record.offsets.iter().map(|&[s, e]| (s, e)).collect(),
        })
    }
}

fn is_dash(c: char) -> bool {
    matches!(c, '\u{2014}' | '\u{2013}')
}

/// Splits one whitespace-free word, pushing absolute spans.
fn split_word(word: &str, base: usize, out: &mut Vec<(usize, usize)>) {
    // (start, end, alphanumeric)
    let mut atoms: Vec<(usize, usize, bool)> = Vec::new();
    for (i, c) in word.char_indices() {
        let alnum = c.is_alphanumeric();
        let end = i + c.len_utf8();
        if let Some(last) = atoms.last_mut() {
            let same_run = if alnum {
                last.2
            } else {
                !last.2 && word[last.0..last.1].starts_with(c)
            };
            if same_run {
                last.1 = end;
                continue;
            }
        }
        atoms.push((i, end, alnum));
    }

    let mut merged: Vec<(usize, usize, bool)> = Vec::with_capacity(atoms.len());
    let mut i = 0;
    while i < atoms.len() {
        let atom = atoms[i];
        let glue = !atom.2
            && word[atom.0..atom.1].chars().count() == 1
            && !word[atom.0..atom.1].chars().any(is_dash)
            && i + 1 < atoms.len()
            && atoms[i + 1].2
            && merged.last().is_some_and(|m| m.2);
        if glue {
            let last = merged.last_mut().expect("checked above");
            last.1 = atoms[i + 1].1;
            i += 2;
        } else {
            merged.push(atom);
            i += 1;
        }
    }
    out.extend(merged.into_iter().map(|(s, e, _)| (base + s, base + e)));
}

fn whitespace_punct(text: &str) -> TokenStream {
    let mut spans = Vec::new();
    let mut word_start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = word_start.take() {
                split_word(&text[s..i], s, &mut spans);
            }
        } else if word_start.is_none() {
            word_start = Some(i);
        }
    }
    if let Some(s) = word_start {
        split_word(&text[s..], s, &mut spans);
    }
    TokenStream {
        tokens: spans.iter().map(|&(s, e)| text[s..e].to_string()).collect(),
        offsets: spans,
    }
}

/// Tokenizes `text`. The `External` scheme requires the matching sidecar record.
pub fn tokenize(text: &str, scheme: TokenizerScheme, sidecar: Option<&SidecarRecord>) -> Result<TokenStream> {
    match scheme {
        TokenizerScheme::WhitespacePunct => Ok(whitespace_punct(text)),
        TokenizerScheme::External => {
            let record = sidecar
                .ok_or_else(|| Error::InvalidInput("external tokenizer scheme requires a sidecar record".into()))?;
            TokenStream::from_sidecar(text, record)
        }
    }
}
