use std::collections::BTreeMap;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use idiolect::adapters::{emit_training_recipe, RecipeOverrides};
use idiolect::annotate::{external, AnnotatedDocument, ExternalAnnotations, Lexicons};
use idiolect::corpus::{
    build_continuation_prompts, build_name_elicitation_prompts, chunk_document, ingest_text, read_prompt_file,
    split_books, subsample, tokenize, Chunk, Document, IngestWarning, PromptSet, SidecarRecord, Split, SplitRatios,
    TokenStream, TokenizerScheme,
};
use idiolect::jsonl;
use idiolect::seed::fnv1a;
use serde::Serialize;

use crate::input_error;
use crate::output::{CommandMeta, Staged};
use crate::shared::{annotations_for, load_annotations, read_text, record_lexicons, Context, LexiconArgs};

pub const DEFAULT_CHUNK_SIZE: usize = 256;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Corpus root laid out as `<root>/<author>/<book>.txt`
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Tokens per chunk [default: 256]
    #[arg(long)]
    chunk_size: Option<usize>,
    /// Keep the short final chunk of each book
    #[arg(long)]
    keep_tail: bool,
    /// Split ratios `train,valid,test`; default is one validation and one test book per author
    #[arg(long)]
    ratios: Option<String>,
    /// Keep text outside the START/END boilerplate markers
    #[arg(long)]
    no_strip_boilerplate: bool,
    /// `whitespace_punct` or `external`
    #[arg(long, value_parser = parse_scheme)]
    tokenizer: Option<TokenizerScheme>,
    /// Token sidecar JSONL for the external tokenizer
    #[arg(long)]
    sidecars: Option<PathBuf>,
    /// Restrict to these author directories
    #[arg(long, value_delimiter = ',')]
    authors: Vec<String>,
    /// Continuation prompts drawn from each author's test books
    #[arg(long, default_value_t = 5)]
    prompts_per_author: usize,
    #[arg(long, default_value_t = 6)]
    min_words: usize,
    #[arg(long, default_value_t = 8)]
    max_words: usize,
    /// Name-elicitation prompts drawn from training books
    #[arg(long, default_value_t = 50)]
    name_prompts: usize,
    /// Extra prompts, one per line, passed through verbatim
    #[arg(long)]
    extra_prompts: Option<PathBuf>,
    /// Training-set fractions to subsample, e.g. `0.05,0.35,0.7`
    #[arg(long, value_delimiter = ',')]
    subsample: Vec<f64>,
    /// Sentence annotations JSONL used for prompt selection
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    num_epoch: Option<u32>,
    #[arg(long)]
    per_gpu_batch_size: Option<u32>,
    #[arg(long)]
    input_max_token_length: Option<u32>,
    #[arg(long)]
    generation_length: Option<u32>,
    #[command(flatten)]
    lexicons: LexiconArgs,
}

pub fn parse_scheme(s: &str) -> Result<TokenizerScheme, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown tokenizer scheme {s:?} (expected whitespace_punct or external)"))
}

fn parse_ratios(s: &str) -> anyhow::Result<SplitRatios> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| input_error(format!("invalid --ratios {s:?}: {e}")))?;
    let [train, valid, test] = parts[..] else {
        return Err(input_error(format!("--ratios needs three values, got {s:?}")));
    };
    Ok(SplitRatios::new(train, valid, test)?)
}

/// `(author, book file)` pairs under the corpus root, sorted.
fn discover(root: &Path, authors: &[String]) -> anyhow::Result<Vec<(String, PathBuf)>> {
    if !root.is_dir() {
        return Err(input_error(format!(
            "corpus root {} is not a directory",
            root.display()
        )));
    }
    let mut author_dirs: Vec<(String, PathBuf)> = Vec::new();
    if authors.is_empty() {
        for entry in std::fs::read_dir(root).with_context(|| format!("listing {}", root.display()))? {
            let entry = entry?;
            if entry.file_type()?.is_dir() {
                author_dirs.push((entry.file_name().to_string_lossy().into_owned(), entry.path()));
            }
        }
    } else {
        for author in authors {
            let dir = root.join(author);
            if !dir.is_dir() {
                return Err(input_error(format!(
                    "author directory {} does not exist",
                    dir.display()
                )));
            }
            author_dirs.push((author.clone(), dir));
        }
    }
    author_dirs.sort();
    if author_dirs.is_empty() {
        return Err(input_error(format!("no author directories under {}", root.display())));
    }

    let mut books = Vec::new();
    for (author, dir) in author_dirs {
        let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
            .with_context(|| format!("listing {}", dir.display()))?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()?;
        files.retain(|p| p.extension().is_some_and(|e| e == "txt"));
        files.sort();
        if files.is_empty() {
            return Err(input_error(format!(
                "author directory {} has no .txt books",
                dir.display()
            )));
        }
        books.extend(files.into_iter().map(|f| (author.clone(), f)));
    }
    Ok(books)
}

#[derive(Serialize)]
struct Manifest<'a> {
    author_id: &'a str,
    books: &'a BTreeMap<String, Split>,
    chunks: BTreeMap<&'static str, usize>,
    chunk_size: usize,
}

struct Book {
    document: Document,
    stream: TokenStream,
}

fn annotate_full(
    book: &Book,
    annotations: Option<&ExternalAnnotations>,
    lexicons: &Lexicons,
) -> anyhow::Result<AnnotatedDocument> {
    let doc = &book.document;
    match annotations_for(annotations, &doc.author_id, &doc.book_id) {
        Some(records) => external::apply(
            &doc.author_id,
            &doc.book_id,
            doc.text.clone(),
            book.stream.clone(),
            records,
        )
        .with_context(|| format!("applying annotations to {}/{}", doc.author_id, doc.book_id)),
        None => Ok(AnnotatedDocument::builtin(
            &doc.author_id,
            &doc.book_id,
            doc.text.clone(),
            book.stream.clone(),
            lexicons,
        )),
    }
}

pub fn run(ctx: &Context, args: Args) -> anyhow::Result<()> {
    let config = &ctx.config;
    let root = crate::shared::required(&args.corpus, &config.corpus, "corpus")?;
    let chunk_size = args.chunk_size.or(config.chunk_size).unwrap_or(DEFAULT_CHUNK_SIZE);
    let size = NonZeroUsize::new(chunk_size).ok_or_else(|| input_error("--chunk-size must be positive"))?;
    let scheme = args
        .tokenizer
        .or(config.tokenizer)
        .unwrap_or(TokenizerScheme::WhitespacePunct);
    let ratios = args.ratios.as_deref().map(parse_ratios).transpose()?;
    if args.min_words == 0 || args.min_words > args.max_words {
        return Err(input_error("--min-words must be positive and at most --max-words"));
    }
    let lexicons = args.lexicons.load(config)?;
    let annotation_path = args.annotations.clone().or_else(|| config.annotations.clone());
    let annotations = load_annotations(annotation_path.as_deref())?;

    let sidecar_path = args.sidecars.clone().or_else(|| config.token_sidecars.clone());
    let sidecars: BTreeMap<String, SidecarRecord> = match &sidecar_path {
        Some(p) => jsonl::parse::<SidecarRecord>(&read_text(p)?, &p.display().to_string())?
            .into_iter()
            .map(|r| (r.book_id.clone(), r))
            .collect(),
        None => BTreeMap::new(),
    };

    let strip = !args.no_strip_boilerplate;
    let mut books = Vec::new();
    for (author, path) in discover(&root, &args.authors)? {
        let book_id = path
            .file_stem()
            .expect("book files have a stem")
            .to_string_lossy()
            .into_owned();
        let raw = read_text(&path)?;
        let provenance = path.strip_prefix(&root).unwrap_or(&path).display().to_string();
        let outcome = ingest_text(&raw, &author, &book_id, &provenance, strip)
            .with_context(|| format!("ingesting {}", path.display()))?;
        match outcome.warning {
            Some(IngestWarning::MarkersMissing) => log::warn!("{provenance}: no boilerplate markers, kept full text"),
            Some(IngestWarning::MalformedBoilerplate) => {
                log::warn!("{provenance}: unmatched boilerplate markers, kept full text")
            }
            None => {}
        }
        let sidecar = sidecars
            .get(&format!("{author}/{book_id}"))
            .or_else(|| sidecars.get(&book_id));
        let stream = tokenize(&outcome.document.text, scheme, sidecar)
            .with_context(|| format!("tokenizing {}", path.display()))?;
        books.push(Book {
            document: outcome.document,
            stream,
        });
    }

    let documents: Vec<Document> = books.iter().map(|b| b.document.clone()).collect();
    let assignment = split_books(&documents, ratios, ctx.seed)?;

    let mut chunks: Vec<Chunk> = Vec::new();
    for book in &books {
        let doc = &book.document;
        let split = assignment[&doc.author_id][&doc.book_id];
        chunks.extend(chunk_document(
            &book.stream,
            &doc.author_id,
            &doc.book_id,
            split,
            size,
            args.keep_tail,
        ));
    }

    let mut prompts = PromptSet::default();
    let extra_path = args.extra_prompts.clone();
    if let Some(p) = &extra_path {
        prompts.extend(read_prompt_file(&read_text(p)?));
    }
    let mut test_docs = Vec::new();
    let mut train_docs = Vec::new();
    for book in &books {
        let doc = &book.document;
        match assignment[&doc.author_id][&doc.book_id] {
            Split::Test if args.prompts_per_author > 0 => {
                test_docs.push(annotate_full(book, annotations.as_ref(), &lexicons)?)
            }
            Split::Train if args.name_prompts > 0 => {
                train_docs.push(annotate_full(book, annotations.as_ref(), &lexicons)?)
            }
            _ => {}
        }
    }
    if args.prompts_per_author > 0 {
        prompts.extend(build_continuation_prompts(
            &test_docs,
            args.prompts_per_author,
            args.min_words..=args.max_words,
            ctx.seed,
        )?);
    }
    if args.name_prompts > 0 {
        let outcome = build_name_elicitation_prompts(&train_docs, args.name_prompts, ctx.seed);
        if outcome.is_short() {
            log::warn!(
                "only {} name-elicitation sentences found, {} requested",
                outcome.found,
                outcome.requested
            );
        }
        prompts.extend(outcome.prompts);
    }

    let overrides = RecipeOverrides {
        learning_rate: args.learning_rate,
        num_epoch: args.num_epoch,
        per_gpu_batch_size: args.per_gpu_batch_size,
        input_max_token_length: args.input_max_token_length,
        generation_length: args.generation_length,
    };

    let mut meta = CommandMeta::new("ingest", ctx.seed);
    meta.input("corpus", root.display().to_string());
    meta.input("chunk_size", chunk_size);
    meta.input("keep_tail", args.keep_tail);
    meta.input("ratios", &args.ratios);
    meta.input("strip_boilerplate", strip);
    meta.input("tokenizer", scheme);
    meta.input("sidecars", sidecar_path.as_ref().map(|p| p.display().to_string()));
    meta.input("authors", &args.authors);
    meta.input("prompts_per_author", args.prompts_per_author);
    meta.input("prompt_words", [args.min_words, args.max_words]);
    meta.input("name_prompts", args.name_prompts);
    meta.input("extra_prompts", extra_path.as_ref().map(|p| p.display().to_string()));
    meta.input("subsample", &args.subsample);
    meta.input("annotations", annotation_path.as_ref().map(|p| p.display().to_string()));
    meta.input(
        "annotation_source",
        if annotations.is_some() { "external" } else { "builtin" },
    );
    meta.input("recipe_overrides", &overrides);
    record_lexicons(&mut meta, &lexicons.ids);

    let mut staged = Staged::new(meta);
    staged.add("chunks.jsonl", jsonl::to_string(&chunks)?);
    staged.add("prompts.jsonl", jsonl::to_string(&prompts.prompts)?);

    for (author, per_book) in &assignment {
        let mine: Vec<&Chunk> = chunks.iter().filter(|c| &c.author_id == author).collect();
        let count = |split: Split| mine.iter().filter(|c| c.split == split).count();
        let manifest = Manifest {
            author_id: author,
            books: per_book,
            chunks: Split::ALL.into_iter().map(|s| (s.as_str(), count(s))).collect(),
            chunk_size,
        };
        staged.add_json(format!("manifests/{author}.json"), &manifest);

        let valid = (count(Split::Valid) > 0).then(|| format!("masked/{author}/valid.jsonl"));
        let recipe = emit_training_recipe(
            author,
            &format!("masked/{author}/train.jsonl"),
            valid.as_deref(),
            &overrides,
        );
        staged.add(format!("recipes/{author}.json"), recipe.to_json());

        let train: Vec<Chunk> = mine
            .iter()
            .filter(|c| c.split == Split::Train)
            .map(|c| (*c).clone())
            .collect();
        for &fraction in &args.subsample {
            let kept = subsample(&train, fraction, ctx.seed ^ fnv1a(author.as_bytes()))?;
            staged.add(
                format!("subsamples/{author}/train_{fraction}.jsonl"),
                jsonl::to_string(&kept)?,
            );
        }
    }

    let n = staged.len();
    staged.commit(&ctx.out)?;
    println!(
        "ingested {} books from {} authors: {} chunks, {} prompts, {n} files",
        books.len(),
        assignment.len(),
        chunks.len(),
        prompts.len()
    );
    Ok(())
}
