use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Label value ignored by the training loss.
pub const IGNORE_INDEX: i64 = -100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedExample {
    pub input_ids: Vec<u32>,
    pub attention_mask: Vec<u8>,
    pub labels: Vec<i64>,
}

impl MaskedExample {
    pub fn masked_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == IGNORE_INDEX).count()
    }
}

/// Labels equal the input ids except inside `spans`, where they are
/// [`IGNORE_INDEX`]. The attention mask stays all ones.
pub fn mask_labels(input_ids: &[u32], spans: &[Range<usize>]) -> Result<MaskedExample> {
    let mut labels: Vec<i64> = input_ids.iter().map(|&id| i64::from(id)).collect();
    for span in spans {
        if span.start > span.end || span.end > input_ids.len() {
            return Err(Error::SpanOutOfRange {
                start: span.start,
                end: span.end,
                len: input_ids.len(),
            });
        }
        labels[span.clone()].fill(IGNORE_INDEX);
    }
    Ok(MaskedExample {
        input_ids: input_ids.to_vec(),
        attention_mask: vec![1; input_ids.len()],
        labels,
    })
}

/// Maximal runs of `true` in a per-token mask.
pub fn spans_from_mask(mask: &[bool]) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, &m) in mask.iter().chain(std::iter::once(&false)).enumerate() {
        match (m, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                spans.push(s..i);
                start = None;
            }
            _ => {}
        }
    }
    spans
}

/// Token string → id mapping.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vocab {
    ids: BTreeMap<String, u32>,
}

impl Vocab {
    /// Ids assigned to the distinct tokens in sorted order.
    pub fn from_tokens<'a, I: IntoIterator<Item = &'a str>>(tokens: I) -> Vocab {
        let mut ids: BTreeMap<String, u32> = tokens.into_iter().map(|t| (t.to_string(), 0)).collect();
        for (i, id) in ids.values_mut().enumerate() {
            *id = i as u32;
        }
        Vocab { ids }
    }

    pub fn from_map(ids: BTreeMap<String, u32>) -> Vocab {
        Vocab { ids }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<u32>> {
        tokens
            .iter()
            .map(|t| {
                self.id(t.as_ref())
                    .ok_or_else(|| Error::InvalidInput(format!("token {:?} is not in the vocabulary", t.as_ref())))
            })
            .collect()
    }
}
