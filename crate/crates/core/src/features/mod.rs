//! Lexical, syntactic and surface style representations.
//!
//! All three are per-sentence statistics pooled over every sentence of the
//! input (a micro-average), so a document and the same document with every
//! sentence duplicated have the same representation.

mod clauses;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

pub use clauses::{classify_sentence, clause_counts, SentenceCategory};

use crate::annotate::{AnnotatedDocument, AnnotatedSentence, Lexicons, PosTag};
use crate::corpus::{Chunk, Split};
use crate::{Error, Result};

/// Per-sentence averages of: nouns, verbs, adjectives, unique words,
/// subjectivity score, words with concreteness above 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LexicalVector(pub [f64; 6]);

/// Share of sentences in each [`SentenceCategory`], in `ALL` order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntacticDistribution(pub [f64; 5]);

/// Per-sentence averages of commas, semicolons, colons and words, then the
/// average word length in alphabetic characters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceVector(pub [f64; 5]);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleProfile {
    pub label: String,
    pub n_sentences: usize,
    pub lexical: LexicalVector,
    pub syntactic: SyntacticDistribution,
    pub surface: SurfaceVector,
}

/// Concreteness ratings strictly above this count as concrete.
pub const CONCRETENESS_THRESHOLD: f64 = 3.0;

fn words(sentence: &AnnotatedSentence) -> impl Iterator<Item = &crate::annotate::AnnotatedToken> {
    sentence.tokens.iter().filter(|t| t.pos != PosTag::Punct)
}

fn non_empty(sentences: &[&AnnotatedSentence], label: &str) -> Result<()> {
    if sentences.is_empty() {
        return Err(Error::EmptyDocument(label.to_string()));
    }
    Ok(())
}

fn lexical_of(sentences: &[&AnnotatedSentence], lexicons: &Lexicons) -> LexicalVector {
    let mut sums = [0.0f64; 6];
    for sentence in sentences {
        let count = |tag: PosTag| sentence.tokens.iter().filter(|t| t.pos == tag).count() as f64;
        sums[0] += count(PosTag::Noun);
        sums[1] += count(PosTag::Verb);
        sums[2] += count(PosTag::Adj);
        sums[3] += words(sentence)
            .map(|t| t.text.to_lowercase())
            .collect::<HashSet<_>>()
            .len() as f64;

        let scores: Vec<f64> = words(sentence)
            .filter_map(|t| lexicons.subjectivity_of(&t.text))
            .collect();
        if !scores.is_empty() {
            sums[4] += scores.iter().sum::<f64>() / scores.len() as f64;
        }
        sums[5] += words(sentence)
            .filter(|t| {
                lexicons
                    .concreteness_of(&t.text)
                    .is_some_and(|c| c > CONCRETENESS_THRESHOLD)
            })
            .count() as f64;
    }
    let n = sentences.len() as f64;
    LexicalVector(sums.map(|s| s / n))
}

fn syntactic_of(sentences: &[&AnnotatedSentence]) -> SyntacticDistribution {
    let mut counts = [0usize; 5];
    for sentence in sentences {
        let category = sentence.category.unwrap_or_else(|| classify_sentence(&sentence.tokens));
        counts[category.index()] += 1;
    }
    let n = sentences.len() as f64;
    SyntacticDistribution(counts.map(|c| c as f64 / n))
}

fn surface_of(sentences: &[&AnnotatedSentence]) -> SurfaceVector {
    let mut punct = [0usize; 3];
    let mut n_words = 0usize;
    let mut letters = 0usize;
    for sentence in sentences {
        for token in &sentence.tokens {
            if token.pos == PosTag::Punct {
                for (slot, mark) in punct.iter_mut().zip([',', ';', ':']) {
                    *slot += token.text.chars().filter(|&c| c == mark).count();
                }
            } else {
                n_words += 1;
                letters += token.text.chars().filter(|c| c.is_alphabetic()).count();
            }
        }
    }
    let n = sentences.len() as f64;
    let word_length = if n_words == 0 {
        0.0
    } else {
        letters as f64 / n_words as f64
    };
    SurfaceVector([
        punct[0] as f64 / n,
        punct[1] as f64 / n,
        punct[2] as f64 / n,
        n_words as f64 / n,
        word_length,
    ])
}

fn all_sentences(doc: &AnnotatedDocument) -> Vec<&AnnotatedSentence> {
    doc.sentences.iter().collect()
}

pub fn lexical_vector(doc: &AnnotatedDocument, lexicons: &Lexicons) -> Result<LexicalVector> {
    let sentences = all_sentences(doc);
    non_empty(&sentences, &doc.doc_id)?;
    Ok(lexical_of(&sentences, lexicons))
}

pub fn syntactic_distribution(doc: &AnnotatedDocument) -> Result<SyntacticDistribution> {
    let sentences = all_sentences(doc);
    non_empty(&sentences, &doc.doc_id)?;
    Ok(syntactic_of(&sentences))
}

pub fn surface_vector(doc: &AnnotatedDocument) -> Result<SurfaceVector> {
    let sentences = all_sentences(doc);
    non_empty(&sentences, &doc.doc_id)?;
    Ok(surface_of(&sentences))
}

/// Profile over the pooled sentences of `docs`, in the order given.
pub fn pooled_profile(docs: &[&AnnotatedDocument], lexicons: &Lexicons, label: &str) -> Result<StyleProfile> {
    let sentences: Vec<&AnnotatedSentence> = docs.iter().flat_map(|d| d.sentences.iter()).collect();
    non_empty(&sentences, label)?;
    Ok(StyleProfile {
        label: label.to_string(),
        n_sentences: sentences.len(),
        lexical: lexical_of(&sentences, lexicons),
        syntactic: syntactic_of(&sentences),
        surface: surface_of(&sentences),
    })
}

pub fn profile(doc: &AnnotatedDocument, lexicons: &Lexicons, label: &str) -> Result<StyleProfile> {
    pooled_profile(&[doc], lexicons, label)
}

/// Rebuilds per-book token sequences from chunks (sorted by book, then chunk
/// index) and annotates each with the built-in pipeline.
pub fn annotate_chunks(chunks: &[&Chunk], lexicons: &Lexicons) -> Vec<AnnotatedDocument> {
    let mut books: BTreeMap<(&str, &str), Vec<&Chunk>> = BTreeMap::new();
    for chunk in chunks {
        books.entry((&chunk.author_id, &chunk.book_id)).or_default().push(chunk);
    }
    books
        .into_iter()
        .map(|((author, book), mut parts)| {
            parts.sort_by_key(|c| c.index);
            let tokens: Vec<&str> = parts.iter().flat_map(|c| c.tokens.iter().map(String::as_str)).collect();
            AnnotatedDocument::builtin_from_tokens(author, book, &tokens, lexicons)
        })
        .collect()
}

/// Reference profile of one author over the pooled test-split chunks.
pub fn author_reference_profile(chunks: &[Chunk], author_id: &str, lexicons: &Lexicons) -> Result<StyleProfile> {
    let selected: Vec<&Chunk> = chunks
        .iter()
        .filter(|c| c.author_id == author_id && c.split == Split::Test)
        .collect();
    if selected.is_empty() {
        return Err(Error::UnknownAuthor(author_id.to_string()));
    }
    let docs = annotate_chunks(&selected, lexicons);
    let refs: Vec<&AnnotatedDocument> = docs.iter().collect();
    pooled_profile(&refs, lexicons, author_id)
}
