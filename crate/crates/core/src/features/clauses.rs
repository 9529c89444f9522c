//! Heuristic sentence-structure classification.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::annotate::{AnnotatedToken, PosTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SentenceCategory {
    #[serde(rename = "SIMPLE")]
    Simple,
    #[serde(rename = "COMPOUND")]
    Compound,
    #[serde(rename = "COMPLEX")]
    Complex,
    #[serde(rename = "COMPLEX-COMPOUND")]
    ComplexCompound,
    #[serde(rename = "OTHER")]
    Other,
}

impl SentenceCategory {
    /// Order of the components of a syntactic distribution.
    pub const ALL: [SentenceCategory; 5] = [
        SentenceCategory::Simple,
        SentenceCategory::Compound,
        SentenceCategory::Complex,
        SentenceCategory::ComplexCompound,
        SentenceCategory::Other,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SentenceCategory::Simple => "SIMPLE",
            SentenceCategory::Compound => "COMPOUND",
            SentenceCategory::Complex => "COMPLEX",
            SentenceCategory::ComplexCompound => "COMPLEX-COMPOUND",
            SentenceCategory::Other => "OTHER",
        }
    }

    /// Category from counts of independent and dependent clauses.
    pub fn from_counts(independent: usize, dependent: usize) -> SentenceCategory {
        match (independent, dependent) {
            (0, _) => SentenceCategory::Other,
            (1, 0) => SentenceCategory::Simple,
            (_, 0) => SentenceCategory::Compound,
            (1, _) => SentenceCategory::Complex,
            _ => SentenceCategory::ComplexCompound,
        }
    }
}

impl fmt::Display for SentenceCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

const RELATIVE_PRONOUNS: &[&str] = &["who", "whom", "whose", "which", "that"];

#[derive(Debug, Default)]
struct Clause {
    dependent: bool,
    /// Opened by a coordinating conjunction; only counts as a clause of its
    /// own when a subject precedes its first verb.
    coordinated: bool,
    has_verb: bool,
    subject_before_verb: bool,
}

impl Clause {
    fn counts(&self) -> bool {
        self.has_verb && (!self.coordinated || self.subject_before_verb)
    }
}

/// Counts (independent, dependent) clauses with the ordered rule table:
///
/// 1. `;` closes the current clause and opens an independent one.
/// 2. CONJ_SUB opens a dependent clause.
/// 3. A relative pronoun (`who`, `which`, `that`, …) tagged PRON opens a
///    dependent clause when it follows a NOUN, PROPN, PRON or comma.
/// 4. CONJ_COORD opens a coordinated independent clause.
/// 5. `,` after a dependent clause that already has a verb closes it and
///    opens an independent clause (`Although it rained, I left`).
/// 6. VERB marks the current clause as finite; a NOUN, PROPN, PRON or DET
///    before the first verb marks it as having a subject.
///
/// A clause counts only if it has a verb; a coordinated clause must also
/// have its own subject (`I sang and danced` stays one clause).
pub fn clause_counts(tokens: &[AnnotatedToken]) -> (usize, usize) {
    let mut clauses = vec![Clause::default()];
    for (i, token) in tokens.iter().enumerate() {
        let lower = token.text.to_lowercase();
        let prev = i.checked_sub(1).map(|j| &tokens[j]);
        let current = clauses.last().expect("at least one clause");

        let opens = if token.pos == PosTag::Punct && token.text.contains(';') {
            Some(Clause::default())
        } else if token.pos == PosTag::ConjSub
            || (token.pos == PosTag::Pron
                && RELATIVE_PRONOUNS.contains(&lower.as_str())
                && prev.is_some_and(|p| matches!(p.pos, PosTag::Noun | PosTag::Propn | PosTag::Pron) || p.text == ","))
        {
            Some(Clause {
                dependent: true,
                ..Clause::default()
            })
        } else if token.pos == PosTag::ConjCoord {
            Some(Clause {
                coordinated: true,
                ..Clause::default()
            })
        } else if token.pos == PosTag::Punct && token.text == "," && current.dependent && current.has_verb {
            Some(Clause::default())
        } else {
            None
        };
        if let Some(clause) = opens {
            clauses.push(clause);
            continue;
        }

        let current = clauses.last_mut().expect("at least one clause");
        match token.pos {
            PosTag::Verb => current.has_verb = true,
            PosTag::Noun | PosTag::Propn | PosTag::Pron | PosTag::Det if !current.has_verb => {
                current.subject_before_verb = true
            }
            _ => {}
        }
    }

    // A subjectless coordinated predicate (`I sang and danced`) belongs to
    // the clause before it.
    for i in 1..clauses.len() {
        if clauses[i].coordinated && clauses[i].has_verb && !clauses[i].subject_before_verb {
            clauses[i - 1].has_verb = true;
        }
    }
    let independent = clauses.iter().filter(|c| !c.dependent && c.counts()).count();
    let dependent = clauses.iter().filter(|c| c.dependent && c.counts()).count();
    (independent, dependent)
}

/// Classifies one tagged sentence.
pub fn classify_sentence(tokens: &[AnnotatedToken]) -> SentenceCategory {
    let (independent, dependent) = clause_counts(tokens);
    SentenceCategory::from_counts(independent, dependent)
}
