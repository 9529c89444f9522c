use std::num::NonZeroUsize;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{Split, TokenStream};

/// A fixed-length window of one book, as stored in the chunk JSONL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub author_id: String,
    pub book_id: String,
    pub split: Split,
    pub index: usize,
    pub tokens: Vec<String>,
}

impl Chunk {
    pub fn id(&self) -> String {
        format!("{}/{}/{}", self.author_id, self.book_id, self.index)
    }
}

/// Consecutive non-overlapping windows over `len` tokens. A short tail is
/// dropped unless `keep_tail` is set.
pub fn chunk_windows(len: usize, size: NonZeroUsize, keep_tail: bool) -> Vec<Range<usize>> {
    let size = size.get();
    let mut windows: Vec<Range<usize>> = (0..len / size).map(|i| i * size..(i + 1) * size).collect();
    if keep_tail && !len.is_multiple_of(size) {
        windows.push(len - len % size..len);
    }
    windows
}

pub fn chunk_document(
    stream: &TokenStream,
    author_id: &str,
    book_id: &str,
    split: Split,
    size: NonZeroUsize,
    keep_tail: bool,
) -> Vec<Chunk> {
    chunk_windows(stream.len(), size, keep_tail)
        .into_iter()
        .enumerate()
        .map(|(index, window)| Chunk {
            author_id: author_id.to_string(),
            book_id: book_id.to_string(),
            split,
            index,
            tokens: stream.tokens[window].to_vec(),
        })
        .collect()
}
