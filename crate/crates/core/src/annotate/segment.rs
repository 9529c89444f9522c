use std::ops::Range;

use super::Lexicons;
use crate::corpus::TokenStream;

fn is_terminal(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| matches!(c, '.' | '!' | '?' | '\u{2026}'))
}

/// Closing quote or bracket. Straight quotes are ambiguous, so one closes
/// only when an odd number of the same quote already appeared in the sentence.
fn is_closing(tokens: &[String], start: usize, at: usize) -> bool {
    let token = tokens[at].as_str();
    match token {
        "\"" | "'" => tokens[start..at].iter().filter(|t| *t == token).count() % 2 == 1,
        _ => !token.is_empty() && token.chars().all(|c| matches!(c, '\u{201d}' | '\u{2019}' | ')' | ']')),
    }
}

/// A single capital letter other than the pronoun `I`.
fn is_initial(token: &str) -> bool {
    let mut chars = token.chars();
    matches!((chars.next(), chars.next()), (Some(c), None) if c.is_uppercase() && c != 'I')
}

/// Splits a token stream into sentences.
///
/// A sentence ends after a run of `.`/`!`/`?`/`…` tokens plus any closing
/// quotes or brackets that follow, unless
///
/// 1. the terminal is a lone `.` after a known abbreviation (`Mr .`) or a
///    single capital initial other than `I` (`J .`), or
/// 2. the next token starts with a lowercase letter (`"Hush!" said she`).
///
/// The returned ranges partition `0..stream.len()`.
pub fn segment_sentences(stream: &TokenStream, lexicons: &Lexicons) -> Vec<Range<usize>> {
    let tokens = &stream.tokens;
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < tokens.len() {
        if !is_terminal(&tokens[i]) {
            i += 1;
            continue;
        }
        if tokens[i] == "." && i > start {
            let prev = &tokens[i - 1];
            if lexicons.is_abbreviation(prev) || is_initial(prev) {
                i += 1;
                continue;
            }
        }
        let mut end = i + 1;
        while end < tokens.len() && (is_terminal(&tokens[end]) || is_closing(tokens, start, end)) {
            end += 1;
        }
        let continues_lowercase = tokens
            .get(end)
            .and_then(|t| t.chars().next())
            .is_some_and(char::is_lowercase);
        if continues_lowercase {
            i = end;
            continue;
        }
        sentences.push(start..end);
        start = end;
        i = end;
    }
    if start < tokens.len() {
        sentences.push(start..tokens.len());
    }
    sentences
}
