use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;
use std::path::PathBuf;

use anyhow::Context as _;
use idiolect::adapters::{mask_labels, spans_from_mask, MaskedExample, Vocab};
use idiolect::corpus::{Chunk, Split};
use idiolect::jsonl;
use serde::{Deserialize, Serialize};

use crate::input_error;
use crate::output::{CommandMeta, Staged};
use crate::shared::{
    annotate_book, books_of, load_annotations, read_chunks, read_text, record_lexicons, Context, LexiconArgs,
};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Chunk JSONL from `ingest`
    #[arg(long)]
    chunks: Option<PathBuf>,
    /// Splits to write
    #[arg(long, value_delimiter = ',', default_values = ["train", "valid"])]
    split: Vec<String>,
    /// Sentence annotations JSONL supplying person flags
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Explicit person spans, `{"chunk_id", "spans": [[start, end], ...]}` per line,
    /// used instead of detected names
    #[arg(long)]
    spans: Option<PathBuf>,
    /// Token → id map (JSON object); built from the chunks when absent
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Keep every label (no person masking)
    #[arg(long)]
    no_mask: bool,
    #[command(flatten)]
    lexicons: LexiconArgs,
}

#[derive(Debug, Deserialize)]
struct SpanRecord {
    chunk_id: String,
    spans: Vec<[usize; 2]>,
}

#[derive(Serialize)]
struct Row<'a> {
    chunk_id: String,
    #[serde(flatten)]
    example: &'a MaskedExample,
}

fn parse_split(s: &str) -> anyhow::Result<Split> {
    Split::ALL
        .into_iter()
        .find(|split| split.as_str() == s)
        .ok_or_else(|| input_error(format!("unknown split {s:?} (expected train, valid or test)")))
}

pub fn run(ctx: &Context, args: Args) -> anyhow::Result<()> {
    let config = &ctx.config;
    let chunks_path = crate::shared::required(&args.chunks, &config.chunks, "chunks")?;
    let chunks = read_chunks(&chunks_path)?;
    let splits: BTreeSet<Split> = args
        .split
        .iter()
        .map(|s| parse_split(s))
        .collect::<anyhow::Result<_>>()?;
    let lexicons = args.lexicons.load(config)?;
    let annotation_path = args.annotations.clone().or_else(|| config.annotations.clone());
    let annotations = load_annotations(annotation_path.as_deref())?;

    let vocab = match &args.vocab {
        Some(p) => {
            let map: BTreeMap<String, u32> =
                serde_json::from_str(&read_text(p)?).with_context(|| format!("parsing vocabulary {}", p.display()))?;
            Vocab::from_map(map)
        }
        None => Vocab::from_tokens(chunks.iter().flat_map(|c| c.tokens.iter().map(String::as_str))),
    };

    let explicit: Option<BTreeMap<String, Vec<Range<usize>>>> = match &args.spans {
        Some(p) => {
            let records: Vec<SpanRecord> = jsonl::parse(&read_text(p)?, &p.display().to_string())?;
            let mut map: BTreeMap<String, Vec<Range<usize>>> = BTreeMap::new();
            for r in records {
                map.entry(r.chunk_id)
                    .or_default()
                    .extend(r.spans.iter().map(|&[s, e]| s..e));
            }
            Some(map)
        }
        None => None,
    };

    let mut outputs: BTreeMap<(String, Split), Vec<String>> = BTreeMap::new();
    let (mut masked, mut total) = (0usize, 0usize);
    for ((author, book), mut parts) in books_of(chunks.iter().filter(|c| splits.contains(&c.split))) {
        parts.sort_by_key(|c| c.index);
        let person_mask = match (&explicit, args.no_mask) {
            (None, false) => annotate_book(author, book, &parts, annotations.as_ref(), &lexicons)?.person_mask(),
            _ => Vec::new(),
        };
        let mut offset = 0;
        for chunk in parts {
            let id = chunk.id();
            let ids = vocab
                .encode(&chunk.tokens)
                .with_context(|| format!("encoding chunk {id}"))?;
            let spans = if args.no_mask {
                Vec::new()
            } else if let Some(map) = &explicit {
                map.get(&id).cloned().unwrap_or_default()
            } else {
                spans_from_mask(&person_mask[offset..offset + chunk.tokens.len()])
            };
            offset += chunk.tokens.len();
            let example = mask_labels(&ids, &spans).with_context(|| format!("masking chunk {id}"))?;
            masked += example.masked_count();
            total += ids.len();
            outputs
                .entry((chunk.author_id.clone(), chunk.split))
                .or_default()
                .push(serde_json::to_string(&Row {
                    chunk_id: id,
                    example: &example,
                })?);
        }
    }
    if outputs.is_empty() {
        return Err(input_error(format!(
            "no chunks in the requested splits in {}",
            chunks_path.display()
        )));
    }
    if let Some(map) = &explicit {
        let known: BTreeSet<String> = chunks.iter().map(Chunk::id).collect();
        if let Some(unknown) = map.keys().find(|id| !known.contains(*id)) {
            return Err(input_error(format!("span file names unknown chunk {unknown}")));
        }
    }

    let mut meta = CommandMeta::new("mask", ctx.seed);
    meta.input("chunks", chunks_path.display().to_string());
    meta.input("splits", &args.split);
    meta.input("annotations", annotation_path.as_ref().map(|p| p.display().to_string()));
    meta.input(
        "annotation_source",
        if annotations.is_some() { "external" } else { "builtin" },
    );
    meta.input("spans", args.spans.as_ref().map(|p| p.display().to_string()));
    meta.input("vocab", args.vocab.as_ref().map(|p| p.display().to_string()));
    meta.input("no_mask", args.no_mask);
    record_lexicons(&mut meta, &lexicons.ids);
    let mut staged = Staged::new(meta);
    for ((author, split), lines) in outputs {
        let mut text = lines.join("\n");
        text.push('\n');
        staged.add(format!("masked/{author}/{}.jsonl", split.as_str()), text);
    }
    if args.vocab.is_none() {
        staged.add_json("vocab.json", &vocab);
    }
    staged.commit(&ctx.out)?;

    let pct = if total == 0 {
        0.0
    } else {
        100.0 * masked as f64 / total as f64
    };
    println!("masked {masked}/{total} ({pct:.2}%)");
    Ok(())
}
