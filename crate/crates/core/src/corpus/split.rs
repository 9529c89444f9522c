use std::collections::BTreeMap;
use std::fmt;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use super::Document;
use crate::seed::keyed_rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Relative split sizes. A zero ratio means the split is not requested.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl SplitRatios {
    pub fn new(train: f64, valid: f64, test: f64) -> Result<Self> {
        let ratios = SplitRatios { train, valid, test };
        let all = [train, valid, test];
        if all.iter().any(|r| !r.is_finite() || *r < 0.0) || train <= 0.0 {
            return Err(Error::InvalidRatios(format!(
                "{train},{valid},{test}: ratios must be finite, non-negative, with train > 0"
            )));
        }
        Ok(ratios)
    }

    fn as_array(&self) -> [f64; 3] {
        [self.train, self.valid, self.test]
    }
}

/// Book-level split assignment: author → book → split.
pub type SplitAssignment = BTreeMap<String, BTreeMap<String, Split>>;

/// Book counts per split for `n` books.
///
/// Without ratios one book goes to validation, one to test and the rest to
/// training. With ratios, counts follow largest-remainder rounding, then every
/// requested split is topped up to at least one book, taken from the largest.
fn split_counts(author: &str, n: usize, ratios: Option<&SplitRatios>) -> Result<[usize; 3]> {
    let weights = ratios.map_or([1.0, 0.0, 0.0], SplitRatios::as_array);
    let requested: Vec<bool> = match ratios {
        None => vec![true; 3],
        Some(_) => weights.iter().map(|&w| w > 0.0).collect(),
    };
    let needed = requested.iter().filter(|&&r| r).count();
    if n < needed {
        return Err(Error::InsufficientBooks {
            author: author.to_string(),
            found: n,
            needed,
        });
    }
    if ratios.is_none() {
        return Ok([n - 2, 1, 1]);
    }

    let total: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
    let mut counts = [0usize; 3];
    for (c, e) in counts.iter_mut().zip(&exact) {
        *c = e.floor() as usize;
    }
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut remaining = n - counts.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        if requested[i] {
            counts[i] += 1;
            remaining -= 1;
        }
    }
    for i in 0..3 {
        if requested[i] && counts[i] == 0 {
            let donor = (0..3)
                .max_by_key(|&j| (counts[j], std::cmp::Reverse(j)))
                .expect("three splits");
            counts[donor] -= 1;
            counts[i] += 1;
        }
    }
    Ok(counts)
}

/// Assigns whole books to splits, per author, deterministically for a seed.
pub fn split_books(documents: &[Document], ratios: Option<SplitRatios>, seed: u64) -> Result<SplitAssignment> {
    let mut by_author: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for doc in documents {
        let books = by_author.entry(&doc.author_id).or_default();
        if books.contains(&doc.book_id.as_str()) {
            return Err(Error::DuplicateDocument {
                author: doc.author_id.clone(),
                book: doc.book_id.clone(),
            });
        }
        books.push(&doc.book_id);
    }

    let mut assignment = SplitAssignment::new();
    for (author, mut books) in by_author {
        books.sort_unstable();
        let counts = split_counts(author, books.len(), ratios.as_ref())?;
        books.shuffle(&mut keyed_rng(seed, author));
        let mut books = books.into_iter();
        let per_book = assignment.entry(author.to_string()).or_default();
        for (split, count) in Split::ALL.into_iter().zip(counts) {
            for book in books.by_ref().take(count) {
                per_book.insert(book.to_string(), split);
            }
        }
    }
    Ok(assignment)
}

/// Number of items kept by [`subsample`]: ⌈fraction·n⌉, ignoring float noise
/// such as `0.7 * 10 = 7.000000000000001`.
fn subsample_size(n: usize, fraction: f64) -> usize {
    let exact = fraction * n as f64;
    let size = (exact - 1e-9 * exact.max(1.0)).ceil().max(0.0) as usize;
    size.min(n)
}

/// Uniform sample without replacement of ⌈fraction·n⌉ items. The kept items
/// retain their original order; `fraction == 1.0` is the identity.
pub fn subsample<T: Clone>(items: &[T], fraction: f64, seed: u64) -> Result<Vec<T>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidFraction(fraction));
    }
    let size = subsample_size(items.len(), fraction);
    if size == items.len() {
        return Ok(items.to_vec());
    }
    let mut picked = index::sample(&mut keyed_rng(seed, "subsample"), items.len(), size).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| items[i].clone()).collect())
}
