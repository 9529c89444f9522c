use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use clap::Args;
use idiolect::annotate::external::{self, truncate_records};
use idiolect::annotate::{AnnotatedDocument, ExternalAnnotations, LexiconIds, Lexicons, SentenceRecord};
use idiolect::corpus::{Chunk, TokenStream};
use idiolect::jsonl;

use crate::config::{LexiconPaths, RunConfig};
use crate::input_error;
use crate::output::CommandMeta;

pub struct Context {
    pub seed: u64,
    pub out: PathBuf,
    pub config: RunConfig,
}

/// Replacement lexicon files shared by the text-processing commands.
#[derive(Debug, Clone, Default, Args)]
pub struct LexiconArgs {
    /// POS lexicon, `word<TAB>tag` per line
    #[arg(long = "pos-lexicon")]
    pub pos: Option<PathBuf>,
    /// Subjectivity scores, `word<TAB>score` in [0, 1]
    #[arg(long)]
    pub subjectivity: Option<PathBuf>,
    /// Concreteness ratings, `word<TAB>rating` in [1, 5]
    #[arg(long)]
    pub concreteness: Option<PathBuf>,
    #[arg(long)]
    pub abbreviations: Option<PathBuf>,
    #[arg(long)]
    pub honorifics: Option<PathBuf>,
    #[arg(long = "reporting-verbs")]
    pub reporting_verbs: Option<PathBuf>,
    #[arg(long = "first-names")]
    pub first_names: Option<PathBuf>,
    #[arg(long)]
    pub places: Option<PathBuf>,
}

impl LexiconArgs {
    fn paths(&self) -> LexiconPaths {
        LexiconPaths {
            pos: self.pos.clone(),
            subjectivity: self.subjectivity.clone(),
            concreteness: self.concreteness.clone(),
            abbreviations: self.abbreviations.clone(),
            honorifics: self.honorifics.clone(),
            reporting_verbs: self.reporting_verbs.clone(),
            first_names: self.first_names.clone(),
            places: self.places.clone(),
        }
    }

    /// Builtin lexicons with any configured replacements applied.
    pub fn load(&self, config: &RunConfig) -> anyhow::Result<Lexicons> {
        let paths = self.paths().overlay(&config.lexicons);
        let mut lex = Lexicons::builtin();
        let read = |p: &Path| std::fs::read_to_string(p).with_context(|| format!("reading lexicon {}", p.display()));
        let name = |p: &Path| p.display().to_string();
        if let Some(p) = &paths.pos {
            lex.set_pos(&read(p)?, &name(p))?;
        }
        if let Some(p) = &paths.subjectivity {
            lex.set_subjectivity(&read(p)?, &name(p))?;
        }
        if let Some(p) = &paths.concreteness {
            lex.set_concreteness(&read(p)?, &name(p))?;
        }
        if let Some(p) = &paths.abbreviations {
            lex.set_abbreviations(&read(p)?, &name(p));
        }
        if let Some(p) = &paths.honorifics {
            lex.set_honorifics(&read(p)?, &name(p));
        }
        if let Some(p) = &paths.reporting_verbs {
            lex.set_reporting_verbs(&read(p)?, &name(p));
        }
        if let Some(p) = &paths.first_names {
            lex.set_first_names(&read(p)?, &name(p));
        }
        if let Some(p) = &paths.places {
            lex.set_places(&read(p)?, &name(p));
        }
        Ok(lex)
    }
}

pub fn record_lexicons(meta: &mut CommandMeta, ids: &LexiconIds) {
    meta.input("lexicons", ids);
}

/// Flag value, else config value; errors when neither is set.
pub fn required(flag: &Option<PathBuf>, config: &Option<PathBuf>, what: &str) -> anyhow::Result<PathBuf> {
    flag.clone().or_else(|| config.clone()).ok_or_else(|| {
        input_error(format!(
            "missing --{what} (or \"{}\" in the config)",
            what.replace('-', "_")
        ))
    })
}

pub fn read_text(path: &Path) -> anyhow::Result<String> {
    if !path.exists() {
        return Err(input_error(format!("{} does not exist", path.display())));
    }
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn read_chunks(path: &Path) -> anyhow::Result<Vec<Chunk>> {
    let chunks: Vec<Chunk> = jsonl::parse(&read_text(path)?, &path.display().to_string())?;
    Ok(chunks)
}

pub fn load_annotations(path: Option<&Path>) -> anyhow::Result<Option<ExternalAnnotations>> {
    match path {
        None => Ok(None),
        Some(p) => {
            let text = read_text(p)?;
            Ok(Some(ExternalAnnotations::parse(&text, &p.display().to_string())?))
        }
    }
}

/// External records for a book, keyed either `author/book` or `book`.
pub fn annotations_for<'a>(
    annotations: Option<&'a ExternalAnnotations>,
    author: &str,
    book: &str,
) -> Option<&'a [SentenceRecord]> {
    let annotations = annotations?;
    annotations
        .get(&format!("{author}/{book}"))
        .or_else(|| annotations.get(book))
}

/// File-system-safe form of an id such as `PGW/styletuned/3`.
pub fn file_stem(id: &str) -> String {
    id.split('/')
        .map(|part| {
            part.chars()
                .map(|c| {
                    if c.is_alphanumeric() || matches!(c, '-' | '.') {
                        c
                    } else {
                        '_'
                    }
                })
                .collect::<String>()
        })
        .collect::<Vec<_>>()
        .join("__")
}

/// Annotates one book rebuilt from its chunks, using external records when
/// available (cut to the chunked prefix) and the builtin pipeline otherwise.
pub fn annotate_book(
    author: &str,
    book: &str,
    chunks: &[&Chunk],
    annotations: Option<&ExternalAnnotations>,
    lexicons: &Lexicons,
) -> anyhow::Result<AnnotatedDocument> {
    let mut parts = chunks.to_vec();
    parts.sort_by_key(|c| c.index);
    let tokens: Vec<&str> = parts.iter().flat_map(|c| c.tokens.iter().map(String::as_str)).collect();
    match annotations_for(annotations, author, book) {
        Some(records) => {
            let (text, stream) = TokenStream::from_tokens(&tokens);
            let records = truncate_records(records, tokens.len());
            external::apply(author, book, text, stream, &records)
                .with_context(|| format!("applying annotations to {author}/{book}"))
        }
        None => Ok(AnnotatedDocument::builtin_from_tokens(author, book, &tokens, lexicons)),
    }
}

/// Groups chunks by (author, book), in sorted order.
pub fn books_of<'a>(chunks: impl IntoIterator<Item = &'a Chunk>) -> BTreeMap<(&'a str, &'a str), Vec<&'a Chunk>> {
    let mut books: BTreeMap<(&str, &str), Vec<&Chunk>> = BTreeMap::new();
    for chunk in chunks {
        books.entry((&chunk.author_id, &chunk.book_id)).or_default().push(chunk);
    }
    books
}
