use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use idiolect::annotate::{external, AnnotatedDocument};
use idiolect::corpus::{tokenize, Split, TokenizerScheme};
use idiolect::features::{pooled_profile, profile, StyleProfile};
use idiolect::metrics::{name_overlap, person_names, NameOverlapStats};
use idiolect::{jsonl, Error};
use serde::{Deserialize, Serialize};

use crate::input_error;
use crate::output::{CommandMeta, Staged};
use crate::shared::{
    annotate_book, books_of, file_stem, load_annotations, read_chunks, read_text, record_lexicons, Context, LexiconArgs,
};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Chunk JSONL from `ingest`; profiles each author's reference split
    #[arg(long)]
    chunks: Option<PathBuf>,
    /// Generations JSONL: `{"id", "author_id", "method", "text"}` per line
    #[arg(long)]
    generations: Option<PathBuf>,
    /// Split used for reference profiles
    #[arg(long, default_value = "test", value_parser = parse_split)]
    split: Split,
    /// Sentence annotations JSONL keyed by book or generation id
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[command(flatten)]
    lexicons: LexiconArgs,
}

fn parse_split(s: &str) -> Result<Split, String> {
    Split::ALL
        .into_iter()
        .find(|split| split.as_str() == s)
        .ok_or_else(|| format!("unknown split {s:?} (expected train, valid or test)"))
}

/// One generated text, as written by the generation exporter.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct Generation {
    pub id: String,
    #[serde(default)]
    pub prompt_id: Option<String>,
    pub author_id: String,
    pub method: String,
    pub text: String,
}

fn skip_empty<T>(result: idiolect::Result<T>, what: &str) -> anyhow::Result<Option<T>> {
    match result {
        Ok(v) => Ok(Some(v)),
        Err(Error::EmptyDocument(_)) => {
            log::warn!("skipping {what}: no sentences");
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn run(ctx: &Context, args: Args) -> anyhow::Result<()> {
    let config = &ctx.config;
    let chunks_path = args.chunks.clone().or_else(|| config.chunks.clone());
    let generations_path = args.generations.clone().or_else(|| config.generations.clone());
    if chunks_path.is_none() && generations_path.is_none() {
        return Err(input_error("profile needs --chunks, --generations or both"));
    }
    let lexicons = args.lexicons.load(config)?;
    let annotation_path = args.annotations.clone().or_else(|| config.annotations.clone());
    let annotations = load_annotations(annotation_path.as_deref())?;

    let mut meta = CommandMeta::new("profile", ctx.seed);
    meta.input("chunks", chunks_path.as_ref().map(|p| p.display().to_string()));
    meta.input(
        "generations",
        generations_path.as_ref().map(|p| p.display().to_string()),
    );
    meta.input("split", args.split.as_str());
    meta.input("annotations", annotation_path.as_ref().map(|p| p.display().to_string()));
    meta.input(
        "annotation_source",
        if annotations.is_some() { "external" } else { "builtin" },
    );
    meta.input("tokenizer", TokenizerScheme::WhitespacePunct);
    record_lexicons(&mut meta, &lexicons.ids);
    let mut staged = Staged::new(meta);

    let mut attempted = 0usize;
    let mut written = 0usize;
    let mut training_names: BTreeMap<String, HashSet<String>> = BTreeMap::new();

    if let Some(path) = &chunks_path {
        let chunks = read_chunks(path)?;
        if chunks.is_empty() {
            return Err(input_error(format!("{} has no chunks", path.display())));
        }
        let mut references: BTreeMap<&str, Vec<AnnotatedDocument>> = BTreeMap::new();
        let mut training: BTreeMap<&str, Vec<AnnotatedDocument>> = BTreeMap::new();
        for ((author, book), parts) in books_of(&chunks) {
            let split = parts[0].split;
            let wanted_reference = split == args.split;
            let wanted_training = generations_path.is_some() && split == Split::Train;
            if !wanted_reference && !wanted_training {
                continue;
            }
            let doc = annotate_book(author, book, &parts, annotations.as_ref(), &lexicons)?;
            if wanted_training {
                training.entry(author).or_default().push(doc.clone());
            }
            if wanted_reference {
                references.entry(author).or_default().push(doc);
            }
        }
        for (author, docs) in &training {
            let names = person_names(docs.iter()).into_iter().collect();
            training_names.insert(author.to_string(), names);
        }
        for (author, docs) in &references {
            attempted += 1;
            let refs: Vec<&AnnotatedDocument> = docs.iter().collect();
            if let Some(p) = skip_empty(pooled_profile(&refs, &lexicons, author), &format!("author {author}"))? {
                staged.add_json(format!("profiles/references/{}.json", file_stem(author)), &p);
                written += 1;
            }
        }
    }

    if let Some(path) = &generations_path {
        let generations: Vec<Generation> = jsonl::parse(&read_text(path)?, &path.display().to_string())?;
        if generations.is_empty() {
            return Err(input_error(format!("{} has no generations", path.display())));
        }
        let mut groups: BTreeMap<(String, String), Vec<AnnotatedDocument>> = BTreeMap::new();
        let mut seen = HashSet::new();
        for g in &generations {
            if !seen.insert(g.id.as_str()) {
                return Err(input_error(format!("duplicate generation id {:?}", g.id)));
            }
            let stream = tokenize(&g.text, TokenizerScheme::WhitespacePunct, None)?;
            let doc = match annotations.as_ref().and_then(|a| a.get(&g.id)) {
                Some(records) => external::apply(&g.author_id, &g.id, g.text.clone(), stream, records)?,
                None => AnnotatedDocument::builtin(&g.author_id, &g.id, g.text.clone(), stream, &lexicons),
            };
            attempted += 1;
            if let Some(p) = skip_empty(profile(&doc, &lexicons, &g.id), &format!("generation {}", g.id))? {
                staged.add_json(format!("profiles/generations/{}.json", file_stem(&g.id)), &p);
                written += 1;
                groups
                    .entry((g.author_id.clone(), g.method.clone()))
                    .or_default()
                    .push(doc);
            }
        }

        let mut names: BTreeMap<String, NameOverlapStats> = BTreeMap::new();
        for ((author, method), docs) in &groups {
            let label = format!("{author}/{method}");
            let refs: Vec<&AnnotatedDocument> = docs.iter().collect();
            let pooled: StyleProfile = pooled_profile(&refs, &lexicons, &label)?;
            staged.add_json(format!("profiles/pooled/{}.json", file_stem(&label)), &pooled);
            if let Some(train) = training_names.get(author) {
                names.insert(label, name_overlap(docs.iter(), train));
            }
        }
        if !names.is_empty() {
            staged.add_json("profiles/names.json", &names);
        }
    }

    if written == 0 {
        return Err(input_error(format!(
            "all {attempted} documents were empty; nothing profiled"
        )));
    }
    staged.commit(&ctx.out)?;
    println!("profiled {written} of {attempted} documents");
    Ok(())
}
