//! Corpus preparation: books in, chunked and split training data out.

mod chunk;
mod document;
mod prompts;
mod split;
mod tokenize;

pub use chunk::{chunk_document, chunk_windows, Chunk};
pub use document::{ingest_text, Document, IngestOutcome, IngestWarning};
pub use prompts::{
    build_continuation_prompts, build_name_elicitation_prompts, read_prompt_file, NamePromptOutcome, Prompt,
    PromptOrigin, PromptSet, SourceLocation,
};
pub use split::{split_books, subsample, Split, SplitAssignment, SplitRatios};
pub use tokenize::{tokenize, SidecarRecord, TokenStream, TokenizerScheme};
