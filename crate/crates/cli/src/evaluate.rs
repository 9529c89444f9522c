use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use idiolect::features::StyleProfile;
use idiolect::metrics::{
    alignment_report, AlignmentReport, EmbeddingRecord, NameOverlapStats, NllDump, PredictionRecord, ReportInputs,
    ReportMetadata,
};
use serde_json::Value;

use crate::input_error;
use crate::output::{CommandMeta, Staged};
use crate::shared::{read_text, Context};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Directory of reference profiles [default: <out>/profiles/references]
    #[arg(long)]
    references: Option<PathBuf>,
    /// Directory of pooled generation profiles labelled `author/method` [default: <out>/profiles/pooled]
    #[arg(long)]
    generations: Option<PathBuf>,
    /// Embedding JSONL for reference texts, labelled by author
    #[arg(long)]
    reference_embeddings: Option<PathBuf>,
    /// Embedding JSONL for generations, labelled `author/method/...`
    #[arg(long)]
    generation_embeddings: Option<PathBuf>,
    /// Authorship classifier predictions JSONL
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Per-token NLL dumps; repeat for several files
    #[arg(long)]
    nll: Vec<PathBuf>,
    /// Method whose perplexity is the baseline for the reduction column
    #[arg(long)]
    baseline_method: Option<String>,
    /// Name-overlap statistics keyed `author/method` [default: <out>/profiles/names.json if present]
    #[arg(long)]
    names: Option<PathBuf>,
    /// Also render SVG bar charts
    #[arg(long)]
    svg: bool,
}

#[derive(Debug, clap::Args)]
pub struct ReportArgs {
    /// Report JSON written by `evaluate`
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    svg: bool,
}

fn read_profiles(dir: &Path) -> anyhow::Result<Vec<(PathBuf, StyleProfile)>> {
    if !dir.is_dir() {
        return Err(input_error(format!(
            "profile directory {} does not exist",
            dir.display()
        )));
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    paths.retain(|p| {
        let name = p.file_name().unwrap_or_default().to_string_lossy();
        name.ends_with(".json") && !name.ends_with(".meta.json")
    });
    paths.sort();
    if paths.is_empty() {
        return Err(input_error(format!("no profiles in {}", dir.display())));
    }
    paths
        .into_iter()
        .map(|p| {
            let profile = serde_json::from_str(&read_text(&p)?).with_context(|| format!("parsing {}", p.display()))?;
            Ok((p, profile))
        })
        .collect()
}

/// Annotation and lexicon details recorded by `profile`, when available.
fn profile_metadata(paths: &[&Path], seed: u64) -> ReportMetadata {
    let mut metadata = ReportMetadata::default();
    let mut seeds = BTreeSet::new();
    for path in paths {
        let mut companion = path.as_os_str().to_owned();
        companion.push(".meta.json");
        let Ok(text) = std::fs::read_to_string(&companion) else {
            continue;
        };
        let Ok(meta) = serde_json::from_str::<Value>(&text) else {
            continue;
        };
        if let Some(s) = meta["seed"].as_u64() {
            seeds.insert(s);
        }
        let inputs = &meta["inputs"];
        if let Some(source) = inputs["annotation_source"].as_str() {
            metadata.annotation_source = source.to_string();
        }
        if let Some(scheme) = inputs["tokenizer"].as_str() {
            metadata.tokenizer_scheme = scheme.to_string();
        }
        if let Some(ids) = inputs["lexicons"].as_object() {
            metadata.lexicon_ids = ids
                .iter()
                .filter_map(|(k, v)| v.as_str().map(|v| (k.clone(), v.to_string())))
                .collect();
        }
    }
    if seeds.is_empty() {
        seeds.insert(seed);
    }
    metadata.seeds = seeds.into_iter().collect();
    metadata
}

fn optional_path(flag: &Option<PathBuf>, config: &Option<PathBuf>) -> Option<PathBuf> {
    flag.clone().or_else(|| config.clone())
}

fn read_jsonl<T>(path: &Option<PathBuf>, parse: fn(&str, &str) -> idiolect::Result<Vec<T>>) -> anyhow::Result<Vec<T>> {
    match path {
        Some(p) => Ok(parse(&read_text(p)?, &p.display().to_string())?),
        None => Ok(Vec::new()),
    }
}

fn stage_renderings(staged: &mut Staged, report: &AlignmentReport, svg: bool) {
    staged.add("report/report.csv", report.to_csv());
    staged.add("report/summary.csv", report.summary_csv());
    if svg {
        if let Some(chart) = report.ppl_reduction_svg() {
            staged.add("report/ppl_reduction.svg", chart);
        }
        if let Some(chart) = report.cosine_svg() {
            staged.add("report/cosine.svg", chart);
        }
    }
}

pub fn run(ctx: &Context, args: Args) -> anyhow::Result<()> {
    let config = &ctx.config;
    let references_dir = optional_path(&args.references, &config.reference_profiles)
        .unwrap_or_else(|| ctx.out.join("profiles/references"));
    let generations_dir = optional_path(&args.generations, &config.generation_profiles)
        .unwrap_or_else(|| ctx.out.join("profiles/pooled"));
    let references = read_profiles(&references_dir)?;
    let generations = read_profiles(&generations_dir)?;

    let reference_embeddings_path = optional_path(&args.reference_embeddings, &config.reference_embeddings);
    let generation_embeddings_path = optional_path(&args.generation_embeddings, &config.generation_embeddings);
    let predictions_path = optional_path(&args.predictions, &config.predictions);
    let nll_paths = if args.nll.is_empty() {
        config.nll.clone()
    } else {
        args.nll.clone()
    };
    let names_path = optional_path(&args.names, &config.names).or_else(|| {
        let default = ctx.out.join("profiles/names.json");
        default.exists().then_some(default)
    });

    let reference_embeddings = read_jsonl(&reference_embeddings_path, EmbeddingRecord::parse_jsonl)?;
    let generation_embeddings = read_jsonl(&generation_embeddings_path, EmbeddingRecord::parse_jsonl)?;
    if reference_embeddings.is_empty() != generation_embeddings.is_empty() {
        return Err(input_error(
            "cosine needs both --reference-embeddings and --generation-embeddings",
        ));
    }
    let predictions = read_jsonl(&predictions_path, PredictionRecord::parse_jsonl)?;
    let mut nll_dumps = Vec::new();
    for p in &nll_paths {
        nll_dumps.extend(NllDump::parse_jsonl(&read_text(p)?, &p.display().to_string())?);
    }
    let name_stats = match &names_path {
        Some(p) => {
            let by_label: BTreeMap<String, NameOverlapStats> =
                serde_json::from_str(&read_text(p)?).with_context(|| format!("parsing {}", p.display()))?;
            by_label
                .into_iter()
                .map(|(label, stats)| match label.split_once('/') {
                    Some((author, method)) => Ok(((author.to_string(), method.to_string()), stats)),
                    None => Err(input_error(format!(
                        "name statistics label {label:?} is not author/method"
                    ))),
                })
                .collect::<anyhow::Result<_>>()?
        }
        None => BTreeMap::new(),
    };

    let inputs = ReportInputs {
        reference_embeddings: &reference_embeddings,
        generation_embeddings: &generation_embeddings,
        predictions: &predictions,
        nll_dumps: &nll_dumps,
        baseline_method: args.baseline_method.as_deref(),
        name_stats,
    };
    let profile_paths: Vec<&Path> = references
        .iter()
        .chain(&generations)
        .map(|(p, _)| p.as_path())
        .collect();
    let metadata = profile_metadata(&profile_paths, ctx.seed);
    let references: Vec<StyleProfile> = references.into_iter().map(|(_, p)| p).collect();
    let generations: Vec<StyleProfile> = generations.into_iter().map(|(_, p)| p).collect();
    let report =
        alignment_report(&generations, &references, &inputs, metadata).context("building the alignment report")?;

    let display = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    let mut meta = CommandMeta::new("evaluate", ctx.seed);
    meta.input("references", references_dir.display().to_string());
    meta.input("generations", generations_dir.display().to_string());
    meta.input("reference_embeddings", display(&reference_embeddings_path));
    meta.input("generation_embeddings", display(&generation_embeddings_path));
    meta.input("predictions", display(&predictions_path));
    meta.input(
        "nll",
        nll_paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    );
    meta.input("names", display(&names_path));
    meta.input("baseline_method", &args.baseline_method);
    meta.input("report_metadata", &report.metadata);
    let mut staged = Staged::new(meta);
    staged.add("report/report.json", report.to_json());
    stage_renderings(&mut staged, &report, args.svg);
    staged.commit(&ctx.out)?;
    println!(
        "evaluated {} generation profiles against {} references",
        report.rows.len(),
        references.len()
    );
    Ok(())
}

pub fn run_report(ctx: &Context, args: ReportArgs) -> anyhow::Result<()> {
    let report: AlignmentReport = serde_json::from_str(&read_text(&args.report)?)
        .with_context(|| format!("parsing {}", args.report.display()))?;
    let report = AlignmentReport::new(report.rows, report.classification, report.metadata)?;
    let mut meta = CommandMeta::new("report", ctx.seed);
    meta.input("report", args.report.display().to_string());
    let mut staged = Staged::new(meta);
    stage_renderings(&mut staged, &report, args.svg);
    staged.commit(&ctx.out)?;
    println!("rendered {} rows", report.rows.len());
    Ok(())
}
