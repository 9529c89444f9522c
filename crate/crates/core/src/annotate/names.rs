use std::ops::Range;

use super::{AnnotatedToken, Lexicons, PosTag};

fn is_capitalized(token: &str) -> bool {
    token.chars().next().is_some_and(char::is_uppercase)
}

/// Marks person-name spans in one tagged sentence.
///
/// Candidates are maximal runs of PROPN tokens that are not honorifics, plus
/// a capitalized sentence-initial OTHER token directly followed by a
/// reporting verb (`Jeeves said`). Each candidate is then judged in order:
///
/// 1. every token is a place-gazetteer entry → rejected
/// 2. preceded by an honorific, optionally followed by `.` → person
/// 3. directly preceded or followed by a reporting verb → person
/// 4. any token is a first-name gazetteer entry → person
/// 5. otherwise → rejected
///
/// Spans are half-open token ranges, sorted and non-overlapping.
pub fn detect_person_names(tokens: &[AnnotatedToken], lexicons: &Lexicons) -> Vec<Range<usize>> {
    let n = tokens.len();
    let is_honorific = |i: usize| lexicons.is_honorific(&tokens[i].text);
    let is_reporting = |i: usize| tokens[i].pos == PosTag::Verb && lexicons.is_reporting_verb(&tokens[i].text);
    let first_word = tokens.iter().position(|t| t.pos != PosTag::Punct);

    let mut candidates = Vec::new();
    let mut i = 0;
    while i < n {
        let in_run = |j: usize| tokens[j].pos == PosTag::Propn && !is_honorific(j);
        if in_run(i) {
            let start = i;
            while i < n && in_run(i) {
                i += 1;
            }
            candidates.push(start..i);
        } else {
            if Some(i) == first_word
                && tokens[i].pos == PosTag::Other
                && is_capitalized(&tokens[i].text)
                && i + 1 < n
                && is_reporting(i + 1)
            {
                candidates.push(i..i + 1);
            }
            i += 1;
        }
    }

    candidates
        .into_iter()
        .filter(|span| {
            if span.clone().all(|j| lexicons.is_place(&tokens[j].text)) {
                return false;
            }
            let s = span.start;
            let after_honorific =
                (s >= 1 && is_honorific(s - 1)) || (s >= 2 && tokens[s - 1].text == "." && is_honorific(s - 2));
            let by_reporting_verb = (s >= 1 && is_reporting(s - 1)) || (span.end < n && is_reporting(span.end));
            after_honorific || by_reporting_verb || span.clone().any(|j| lexicons.is_first_name(&tokens[j].text))
        })
        .collect()
}
