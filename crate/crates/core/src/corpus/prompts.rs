use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::annotate::{AnnotatedDocument, AnnotatedSentence, PosTag};
use crate::seed::keyed_rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptOrigin {
    Gpt4File,
    TestExcerpt,
    NameElicitation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceLocation {
    pub doc_id: String,
    pub sentence: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub id: String,
    pub text: String,
    pub origin: PromptOrigin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceLocation>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSet {
    pub prompts: Vec<Prompt>,
}

impl PromptSet {
    pub fn len(&self) -> usize {
        self.prompts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prompts.is_empty()
    }

    pub fn extend(&mut self, other: PromptSet) {
        self.prompts.extend(other.prompts);
    }
}

/// Reads a plain-text prompt file, one prompt per non-blank line.
pub fn read_prompt_file(content: &str) -> PromptSet {
    let prompts = content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, line)| Prompt {
            id: format!("gpt4/{i}"),
            text: line.to_string(),
            origin: PromptOrigin::Gpt4File,
            author_id: None,
            source: None,
        })
        .collect();
    PromptSet { prompts }
}

struct Candidate<'a> {
    doc_id: &'a str,
    sentence: usize,
    words: Vec<&'a str>,
}

fn by_author(docs: &[AnnotatedDocument]) -> BTreeMap<&str, Vec<&AnnotatedDocument>> {
    let mut grouped: BTreeMap<&str, Vec<&AnnotatedDocument>> = BTreeMap::new();
    for doc in docs {
        grouped.entry(&doc.author_id).or_default().push(doc);
    }
    for list in grouped.values_mut() {
        list.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    }
    grouped
}

/// Continuation prompts from test-split text: per author, `per_author`
/// distinct sentences, each cut to its first `k` whitespace words with `k`
/// drawn uniformly from `words`.
///
/// Sentences with fewer than `words.start()` words are never used. When the
/// drawn `k` exceeds a sentence's length, that sentence is skipped in favour
/// of one long enough; if none remain, `k` is redrawn from the lengths still
/// available.
pub fn build_continuation_prompts(
    test_docs: &[AnnotatedDocument],
    per_author: usize,
    words: RangeInclusive<usize>,
    seed: u64,
) -> Result<PromptSet> {
    let min_words = *words.start();
    let mut prompts = Vec::new();
    for (author, docs) in by_author(test_docs) {
        let mut pool: Vec<Candidate> = docs
            .iter()
            .flat_map(|doc| {
                (0..doc.sentences.len()).map(move |i| Candidate {
                    doc_id: &doc.doc_id,
                    sentence: i,
                    words: doc.sentence_text(i).split_whitespace().collect(),
                })
            })
            .filter(|c| c.words.len() >= min_words)
            .collect();
        if pool.len() < per_author {
            return Err(Error::InsufficientSentences {
                author: author.to_string(),
                found: pool.len(),
                needed: per_author,
            });
        }

        let mut rng = keyed_rng(seed, &format!("continuation/{author}"));
        for n in 0..per_author {
            let mut k = rng.gen_range(words.clone());
            let longest = pool.iter().map(|c| c.words.len()).max().expect("pool is non-empty");
            if longest < k {
                k = rng.gen_range(min_words..=longest);
            }
            let fitting: Vec<usize> = (0..pool.len()).filter(|&i| pool[i].words.len() >= k).collect();
            let chosen = pool.swap_remove(fitting[rng.gen_range(0..fitting.len())]);
            prompts.push(Prompt {
                id: format!("test/{author}/{n}"),
                text: chosen.words[..k].join(" "),
                origin: PromptOrigin::TestExcerpt,
                author_id: Some(author.to_string()),
                source: Some(SourceLocation {
                    doc_id: chosen.doc_id.to_string(),
                    sentence: chosen.sentence,
                }),
            });
        }
    }
    Ok(PromptSet { prompts })
}

/// Token index of the verb in a `… [verb] [person name]` sentence, where the
/// name ends the clause and no person token precedes the verb.
fn name_elicitation_verb(sentence: &AnnotatedSentence) -> Option<usize> {
    let tokens = &sentence.tokens;
    let first_person = tokens.iter().position(|t| t.is_person)?;
    let verb = first_person.checked_sub(1)?;
    if verb == 0 || tokens[verb].pos != PosTag::Verb {
        return None;
    }
    let span_end = (first_person..tokens.len())
        .find(|&i| !tokens[i].is_person)
        .unwrap_or(tokens.len());
    let ends_clause = span_end == tokens.len() || tokens[span_end].pos == PosTag::Punct;
    ends_clause.then_some(verb)
}

#[derive(Debug, Clone)]
pub struct NamePromptOutcome {
    pub prompts: PromptSet,
    pub requested: usize,
    /// Number of matching sentences; below `requested` means the set is short.
    pub found: usize,
}

impl NamePromptOutcome {
    pub fn is_short(&self) -> bool {
        self.found < self.requested
    }
}

/// Name-elicitation prompts: sentences of the form `some words [verb] [name]`
/// cut just after the verb, so the person name is removed. Up to `count`
/// matches are sampled uniformly and returned in corpus order.
pub fn build_name_elicitation_prompts(train_docs: &[AnnotatedDocument], count: usize, seed: u64) -> NamePromptOutcome {
    let mut matches = Vec::new();
    for (author, docs) in by_author(train_docs) {
        for doc in docs {
            for (i, sentence) in doc.sentences.iter().enumerate() {
                if let Some(verb) = name_elicitation_verb(sentence) {
                    let start = sentence.start;
                    let span = doc
                        .stream
                        .span(start..start + verb + 1)
                        .expect("verb is inside the sentence");
                    matches.push(Prompt {
                        id: String::new(),
                        text: doc.text[span].to_string(),
                        origin: PromptOrigin::NameElicitation,
                        author_id: Some(author.to_string()),
                        source: Some(SourceLocation {
                            doc_id: doc.doc_id.clone(),
                            sentence: i,
                        }),
                    });
                }
            }
        }
    }

    let found = matches.len();
    let mut picked = index::sample(&mut keyed_rng(seed, "names"), found, count.min(found)).into_vec();
    picked.sort_unstable();
    if found < count {
        log::warn!("only {found} name-elicitation sentences found, {count} requested");
    }
    let prompts = picked
        .into_iter()
        .enumerate()
        .map(|(n, i)| Prompt {
            id: format!("names/{n}"),
            ..matches[i].clone()
        })
        .collect();
    NamePromptOutcome {
        prompts: PromptSet { prompts },
        requested: count,
        found,
    }
}
