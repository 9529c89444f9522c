//! Tooling for author-style customization of language models.
//!
//! The crate covers the computable parts of the workflow:
//!
//! * [`corpus`]: ingesting books, tokenizing, fixed-length chunking,
//!   book-disjoint splits, subsampling and evaluation prompt construction.
//! * [`annotate`]: sentence segmentation, rule-based POS tagging and
//!   person-name detection, or ingestion of external annotations.
//! * [`features`]: lexical, syntactic and surface style representations.
//! * [`metrics`]: MSE, Jensen-Shannon divergence, cosine similarity,
//!   perplexity, classifier statistics, name overlap, alignment reports.
//! * [`adapters`]: safetensors I/O, LoRA adapters, block-concatenation
//!   merging, loss-mask generation and training recipes.

pub mod adapters;
pub mod annotate;
pub mod corpus;
pub mod error;
pub mod features;
pub mod jsonl;
pub mod metrics;
pub mod seed;

pub use error::{Error, Result};
