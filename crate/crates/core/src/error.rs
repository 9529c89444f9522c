use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("document {0} is empty")]
    EmptyDocument(String),

    #[error("annotation mismatch at token {index}: {detail}")]
    AnnotationMismatch { index: usize, detail: String },

    #[error("unknown POS tag {0:?}")]
    UnknownTag(String),

    #[error("invalid annotation: {0}")]
    InvalidAnnotation(String),

    #[error("author {author} has {found} book(s), {needed} required")]
    InsufficientBooks {
        author: String,
        found: usize,
        needed: usize,
    },

    #[error("author {author} has {found} eligible sentence(s), {needed} required")]
    InsufficientSentences {
        author: String,
        found: usize,
        needed: usize,
    },

    #[error("subsample fraction {0} is outside (0, 1]")]
    InvalidFraction(f64),

    #[error("invalid split ratios: {0}")]
    InvalidRatios(String),

    #[error("duplicate document ({author}, {book})")]
    DuplicateDocument { author: String, book: String },

    #[error("invalid lexicon {source_name} line {line}: {detail}")]
    InvalidLexicon {
        source_name: String,
        line: usize,
        detail: String,
    },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("zero-norm vector")]
    ZeroVector,

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("label lists differ in length ({gold} gold, {pred} predicted)")]
    LengthMismatch { gold: usize, pred: usize },

    #[error("unknown author {0:?}")]
    UnknownAuthor(String),

    #[error("safetensors buffer truncated: {0}")]
    Truncated(String),

    #[error("corrupt safetensors header: {0}")]
    CorruptHeader(String),

    #[error("unsupported dtype {0:?}")]
    UnsupportedDtype(String),

    #[error("unpaired LoRA tensor for target {0:?}")]
    UnpairedTensor(String),

    #[error("shape mismatch for {target}: {detail}")]
    ShapeMismatch { target: String, detail: String },

    #[error("unknown target {0:?}")]
    UnknownTarget(String),

    #[error("incompatible adapters: {0}")]
    IncompatibleAdapters(String),

    #[error("invalid merge spec: {0}")]
    InvalidSpec(String),

    #[error("span {start}..{end} out of range for {len} tokens")]
    SpanOutOfRange { start: usize, end: usize, len: usize },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    /// True when the failure is caused by the caller's inputs rather than the
    /// environment.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Io(e) => e.kind() == io::ErrorKind::NotFound,
            _ => true,
        }
    }
}
