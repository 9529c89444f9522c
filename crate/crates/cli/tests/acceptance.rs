//! Acceptance suite: one PASS/FAIL line per criterion.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

mod common;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::num::NonZeroUsize;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use common::*;
use idiolect::adapters::{
    emit_training_recipe, load_adapter, merge, read_safetensors, write_safetensors, Dtype, MergeSpec, RecipeOverrides,
    Tensor, TensorFile, TensorNaming,
};
use idiolect::annotate::{AnnotatedDocument, Lexicons};
use idiolect::corpus::{chunk_document, split_books, subsample, tokenize, Document, Split, TokenizerScheme};
use idiolect::features::{classify_sentence, profile, surface_vector};
use idiolect::metrics::{
    alignment_report, cosine, jsd, mse, perplexity, AlignmentReport, NameOverlapStats, PredictionRecord, ReportInputs,
    ReportMetadata, ReportRow,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tempfile::TempDir;

type Outcome = Result<String, String>;

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn main() {
    let start = Instant::now();
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("merge-sum identity", merge_sum_identity),
        ("safetensors round trip", safetensors_round_trip),
        ("masking contract", masking_contract),
        ("metric properties", metric_properties),
        ("self-alignment zero", self_alignment_zero),
        ("feature golden vectors", feature_golden_vectors),
        ("corpus invariants", corpus_invariants),
        ("report fixtures", report_fixtures),
    ];
    let mut failed = 0;
    let mut report = |name: &str, outcome: Outcome, elapsed: Duration| match &outcome {
        Ok(detail) => println!("PASS {name}: {detail} [{} ms]", elapsed.as_millis()),
        Err(detail) => {
            failed += 1;
            println!("FAIL {name}: {detail} [{} ms]", elapsed.as_millis());
        }
    };
    for (name, criterion) in criteria {
        let t = Instant::now();
        report(name, guarded(criterion), t.elapsed());
    }
    let t = Instant::now();
    let outcome = guarded(determinism).and_then(|detail| {
        let total = start.elapsed();
        if total < Duration::from_secs(60) {
            Ok(format!("{detail}; full suite {} ms", total.as_millis()))
        } else {
            Err(format!(
                "{detail}; full suite took {} ms (limit 60000)",
                total.as_millis()
            ))
        }
    });
    report("determinism", outcome, t.elapsed());
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}

fn guarded(f: fn() -> Outcome) -> Outcome {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(outcome) => outcome,
        Err(panic) => Err(panic
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    }
}

/// Brute-force Σ ρ·(α/r)·B·A with explicit loops in f64.
fn naive_weighted_sum(operands: &[(&idiolect::adapters::LoraAdapter, f64)], target: &str) -> Vec<Vec<f64>> {
    let first = &operands[0].0.modules[target];
    let (d, k) = (first.b.rows(), first.a.cols());
    let mut sum = vec![vec![0.0f64; k]; d];
    for (adapter, ratio) in operands {
        let m = &adapter.modules[target];
        let scale = ratio * adapter.alpha / adapter.rank as f64;
        for (i, row) in sum.iter_mut().enumerate() {
            for (l, cell) in row.iter_mut().enumerate() {
                let mut dot = 0.0f64;
                for j in 0..adapter.rank {
                    dot += m.b.get(i, j) as f64 * m.a.get(j, l) as f64;
                }
                *cell += scale * dot;
            }
        }
    }
    sum
}

fn merge_sum_identity() -> Outcome {
    const RATIOS: [f64; 4] = [0.0, 0.8, 0.9, 1.0];
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for spec_index in 0..100 {
        let n_targets = rng.gen_range(1..=2);
        let shapes: Vec<(String, usize, usize)> = (0..n_targets)
            .map(|t| {
                (
                    format!("layers.{t}.q_proj"),
                    rng.gen_range(1..=16),
                    rng.gen_range(1..=16),
                )
            })
            .collect();
        let shape_refs: Vec<(&str, usize, usize)> = shapes.iter().map(|(t, d, k)| (t.as_str(), *d, *k)).collect();
        let n_operands = rng.gen_range(2..=3);
        let adapters: Vec<_> = (0..n_operands)
            .map(|_| {
                let r = rng.gen_range(1..=4);
                let alpha = if rng.gen_bool(0.5) { r as f64 } else { 2.0 * r as f64 };
                random_adapter(&mut rng, &shape_refs, r, alpha)
            })
            .collect();
        let mut ratios: Vec<f64> = (0..n_operands).map(|_| RATIOS[rng.gen_range(0..4)]).collect();
        if ratios.iter().all(|&r| r == 0.0) {
            ratios[0] = RATIOS[rng.gen_range(1..4)];
        }
        let operands: Vec<_> = adapters.iter().zip(ratios.iter().copied()).collect();
        let merged = merge(&MergeSpec {
            operands: operands.clone(),
        })
        .map_err(|e| format!("spec {spec_index}: {e}"))?;
        let bytes = write_safetensors(&merged.to_tensor_file(&TensorNaming::default())).map_err(|e| e.to_string())?;
        let reread = load_adapter(
            &read_safetensors(&bytes).map_err(|e| e.to_string())?,
            &merged.config(),
            &TensorNaming::default(),
        )
        .map_err(|e| e.to_string())?;
        for (target, _, _) in &shape_refs {
            let oracle = naive_weighted_sum(&operands, target);
            for adapter in [&merged, &reread] {
                let delta = adapter.effective_delta(target).map_err(|e| e.to_string())?;
                for (i, row) in oracle.iter().enumerate() {
                    for (l, &expected) in row.iter().enumerate() {
                        worst = worst.max((delta.get(i, l) - expected).abs());
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    check!(worst < 1e-6, "max residual {worst:e} >= 1e-6");
    check!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!(
        "100 specs, max residual {worst:.2e}, {} ms",
        elapsed.as_millis()
    ))
}

fn tensor_fixture(rng: &mut ChaCha8Rng, index: usize) -> TensorFile<'static> {
    let dtypes = [Dtype::F32, Dtype::F16, Dtype::BF16];
    let mut tensors = BTreeMap::new();
    for t in 0..=index % 4 {
        let shape: Vec<usize> = match (index + t) % 4 {
            0 => vec![rng.gen_range(1..6)],
            1 => vec![rng.gen_range(1..6), rng.gen_range(1..6)],
            2 => vec![2, rng.gen_range(1..4), 3],
            _ => vec![0, 4],
        };
        let n: usize = shape.iter().product();
        let values: Vec<f32> = (0..n).map(|_| rng.gen_range(-4.0f32..4.0)).collect();
        let dtype = dtypes[(index + t) % 3];
        tensors.insert(
            format!("model.layer{t}.weight"),
            Tensor::from_f32(dtype, shape, &values),
        );
    }
    let metadata = index.is_multiple_of(2).then(|| {
        BTreeMap::from([
            ("format".to_string(), "pt".to_string()),
            ("fixture".to_string(), index.to_string()),
        ])
    });
    TensorFile { tensors, metadata }
}

fn safetensors_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut dtypes_seen = BTreeSet::new();
    let fixtures: Vec<TensorFile> = (0..12).map(|i| tensor_fixture(&mut rng, i)).collect();
    for (i, file) in fixtures.iter().enumerate() {
        dtypes_seen.extend(file.tensors.values().map(|t| t.dtype.as_str()));
        let bytes = write_safetensors(file).map_err(|e| format!("fixture {i}: {e}"))?;
        let parsed = read_safetensors(&bytes).map_err(|e| format!("fixture {i}: {e}"))?;
        check!(&parsed == file, "fixture {i}: read(write(f)) differs structurally");
        let again = write_safetensors(&parsed).map_err(|e| e.to_string())?;
        check!(
            again == bytes,
            "fixture {i}: write(read(write(f))) is not byte-identical"
        );
    }
    check!(dtypes_seen.len() == 3, "dtypes covered: {dtypes_seen:?}");

    let header = br#"{"w":{"dtype":"F32","shape":[2,2],"data_offsets":[0,16]}}"#;
    let mut minimal = (header.len() as u64).to_le_bytes().to_vec();
    minimal.extend_from_slice(header);
    for v in [1.0f32, 2.0, 3.0, 4.0] {
        minimal.extend_from_slice(&v.to_le_bytes());
    }
    let parsed = read_safetensors(&minimal).map_err(|e| e.to_string())?;
    check!(
        parsed.tensors.len() == 1,
        "minimal fixture has {} tensors",
        parsed.tensors.len()
    );
    let w = &parsed.tensors["w"];
    check!(
        w.dtype == Dtype::F32 && w.shape == [2, 2],
        "minimal fixture parsed as {:?} {:?}",
        w.dtype,
        w.shape
    );
    check!(
        w.to_f32() == [1.0, 2.0, 3.0, 4.0],
        "minimal fixture values {:?}",
        w.to_f32()
    );
    check!(
        write_safetensors(&parsed).map_err(|e| e.to_string())? == minimal,
        "minimal fixture not canonical"
    );
    Ok(format!(
        "{} fixtures over {:?} plus the minimal 2x2 F32 file",
        fixtures.len(),
        dtypes_seen
    ))
}

fn masking_contract() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut chunks = Vec::new();
    let mut spans_file = String::new();
    let mut injected: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    for author in 0..10 {
        for book in 0..4 {
            for index in 0..25 {
                let tokens: Vec<String> = (0..256).map(|_| format!("t{}", rng.gen_range(0..500))).collect();
                let chunk = idiolect::corpus::Chunk {
                    author_id: format!("a{author}"),
                    book_id: format!("b{book}"),
                    split: Split::Train,
                    index,
                    tokens,
                };
                let id = chunk.id();
                let mut spans = Vec::new();
                for segment in 0..4 {
                    if rng.gen_bool(0.5) {
                        let start = segment * 64 + rng.gen_range(0..60);
                        let len = rng.gen_range(1..=3);
                        spans.push([start, start + len]);
                        injected.entry(id.clone()).or_default().extend(start..start + len);
                    }
                }
                spans_file.push_str(&json!({"chunk_id": id, "spans": spans}).to_string());
                spans_file.push('\n');
                chunks.push(chunk);
            }
        }
    }
    std::fs::write(
        dir.path().join("chunks.jsonl"),
        idiolect::jsonl::to_string(&chunks).unwrap(),
    )
    .unwrap();
    std::fs::write(dir.path().join("spans.jsonl"), spans_file).unwrap();
    let stdout = run_ok(
        dir.path(),
        &[
            "--out",
            "out",
            "mask",
            "--chunks",
            "chunks.jsonl",
            "--spans",
            "spans.jsonl",
        ],
    );

    let n_injected: usize = injected.values().map(BTreeSet::len).sum();
    let total = chunks.len() * 256;
    let expected = format!(
        "masked {n_injected}/{total} ({:.2}%)",
        100.0 * n_injected as f64 / total as f64
    );
    check!(
        stdout.trim() == expected,
        "summary {:?}, expected {expected:?}",
        stdout.trim()
    );

    let vocab: BTreeMap<String, i64> =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/vocab.json")).unwrap()).unwrap();
    let by_id: BTreeMap<String, &idiolect::corpus::Chunk> = chunks.iter().map(|c| (c.id(), c)).collect();
    let mut rows = 0;
    for author in 0..10 {
        let text = std::fs::read_to_string(dir.path().join(format!("out/masked/a{author}/train.jsonl"))).unwrap();
        for line in text.lines() {
            rows += 1;
            let row: Value = serde_json::from_str(line).unwrap();
            let id = row["chunk_id"].as_str().unwrap();
            let chunk = by_id[id];
            let spans = injected.get(id).cloned().unwrap_or_default();
            for (i, token) in chunk.tokens.iter().enumerate() {
                let input = row["input_ids"][i].as_i64().unwrap();
                let label = row["labels"][i].as_i64().unwrap();
                check!(
                    input == vocab[token],
                    "{id}[{i}]: input id {input} is not the vocabulary id"
                );
                check!(row["attention_mask"][i] == 1, "{id}[{i}]: attention mask not 1");
                if spans.contains(&i) {
                    check!(label == -100, "{id}[{i}]: span token label {label}");
                } else {
                    check!(label == input, "{id}[{i}]: label {label} != input {input}");
                }
            }
        }
    }
    check!(rows == 1000, "{rows} masked rows");
    Ok(format!("1000 chunks, {expected}"))
}

fn random_distribution(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen::<f64>() })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        v[0] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

fn metric_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let err = |e: idiolect::Error| e.to_string();
    for trial in 0..1000 {
        let n = rng.gen_range(2..=8);
        let p = random_distribution(&mut rng, n);
        let q = random_distribution(&mut rng, n);
        let r = random_distribution(&mut rng, n);
        let pq = jsd(&p, &q).map_err(err)?;
        check!(pq == jsd(&q, &p).map_err(err)?, "trial {trial}: JSD not symmetric");
        check!((0.0..=1.0).contains(&pq), "trial {trial}: JSD {pq} outside [0, 1]");
        check!(jsd(&p, &p).map_err(err)?.abs() < 1e-12, "trial {trial}: JSD(p, p) != 0");
        if p.iter().zip(&q).any(|(a, b)| (a - b).abs() > 1e-6) {
            check!(pq > 0.0, "trial {trial}: JSD of distinct distributions is 0");
        }
        let (pr, rq) = (jsd(&p, &r).map_err(err)?, jsd(&r, &q).map_err(err)?);
        check!(
            pq.sqrt() <= pr.sqrt() + rq.sqrt() + 1e-12,
            "trial {trial}: sqrt-JSD triangle inequality fails"
        );

        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        check!(mse(&a, &a).map_err(err)? == 0.0, "trial {trial}: MSE(a, a) != 0");
        check!(
            mse(&a, &b).map_err(err)? == mse(&b, &a).map_err(err)?,
            "trial {trial}: MSE not symmetric"
        );
        let manual = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n as f64;
        check!(
            (mse(&a, &b).map_err(err)? - manual).abs() < 1e-12,
            "trial {trial}: MSE differs from definition"
        );
        if a.iter().any(|&x| x != 0.0) {
            check!(
                (cosine(&a, &a).map_err(err)? - 1.0).abs() < 1e-12,
                "trial {trial}: cos(a, a) != 1"
            );
            let scaled: Vec<f64> = a.iter().map(|x| 3.5 * x).collect();
            check!(
                (cosine(&a, &scaled).map_err(err)? - 1.0).abs() < 1e-12,
                "trial {trial}: cosine not scale-invariant"
            );
        }
        let nlls: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..6.0)).collect();
        let expected = (nlls.iter().sum::<f64>() / n as f64).exp();
        check!(
            (perplexity(&nlls).map_err(err)? - expected).abs() < 1e-9 * expected,
            "trial {trial}: PPL differs from exp(mean NLL)"
        );
    }
    let ln2 = std::f64::consts::LN_2;
    let ppl = perplexity(&[ln2, ln2]).map_err(err)?;
    check!(ppl == 2.0, "PPL(ln 2, ln 2) = {ppl:?}");
    Ok("1000 random pairs; PPL(ln 2, ln 2) = 2".into())
}

fn self_alignment_zero() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    write_corpus(&dir.path().join("corpus"), &AUTHORS, 120);
    run_ok(
        dir.path(),
        &["--out", "out", "ingest", "--corpus", "corpus", "--name-prompts", "0"],
    );
    run_ok(dir.path(), &["--out", "out", "profile", "--chunks", "out/chunks.jsonl"]);
    run_ok(
        dir.path(),
        &[
            "--out",
            "out",
            "evaluate",
            "--references",
            "out/profiles/references",
            "--generations",
            "out/profiles/references",
        ],
    );
    let report: AlignmentReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/report/report.json")).unwrap()).unwrap();
    let authors: BTreeSet<&str> = report.rows.iter().map(|r| r.author.as_str()).collect();
    check!(authors == AUTHORS.into_iter().collect(), "report authors {authors:?}");
    for row in &report.rows {
        check!(
            row.lexical_mse == 0.0 && row.syntactic_jsd == 0.0 && row.surface_mse == 0.0,
            "{}: ({}, {}, {})",
            row.author,
            row.lexical_mse,
            row.syntactic_jsd,
            row.surface_mse
        );
    }
    Ok(format!("{} authors, all linguistic columns 0", report.rows.len()))
}

fn feature_golden_vectors() -> Outcome {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/golden");
    let read = |f: &str| std::fs::read_to_string(golden.join(f)).unwrap();
    let mut lex = Lexicons::empty();
    lex.set_pos(&read("pos.tsv"), "pos.tsv").map_err(|e| e.to_string())?;
    lex.set_subjectivity(&read("subjectivity.tsv"), "subjectivity.tsv")
        .map_err(|e| e.to_string())?;
    lex.set_concreteness(&read("concreteness.tsv"), "concreteness.tsv")
        .map_err(|e| e.to_string())?;
    let expected: Value = serde_json::from_str(&read("expected.json")).unwrap();
    let text = read("text.txt");
    let stream = tokenize(&text, TokenizerScheme::WhitespacePunct, None).map_err(|e| e.to_string())?;
    let doc = AnnotatedDocument::builtin("fixture", "golden", text, stream, &lex);

    let n = expected["n_sentences"].as_u64().unwrap() as usize;
    check!(
        doc.sentences.len() == n,
        "{} sentences, expected {n}",
        doc.sentences.len()
    );
    let categories: Vec<String> = doc
        .sentences
        .iter()
        .map(|s| classify_sentence(&s.tokens).as_str().to_string())
        .collect();
    let expected_categories: Vec<String> = serde_json::from_value(expected["categories"].clone()).unwrap();
    check!(categories == expected_categories, "categories {categories:?}");
    let distinct: BTreeSet<&String> = categories.iter().collect();
    check!(distinct.len() == 5, "only {} categories exercised", distinct.len());

    let nums = |v: &Value| -> Vec<f64> { serde_json::from_value(v.clone()).unwrap() };
    let per = |v: Vec<f64>| v.into_iter().map(|x| x / n as f64).collect::<Vec<_>>();
    let p = profile(&doc, &lex, "fixture").map_err(|e| e.to_string())?;
    let words = expected["words"].as_f64().unwrap();
    let mut surface = per(nums(&expected["punctuation_sums"]));
    surface.extend([words / n as f64, expected["letters"].as_f64().unwrap() / words]);
    let pairs: [(&str, &[f64], Vec<f64>); 3] = [
        ("lexical", &p.lexical.0, per(nums(&expected["lexical_sums"]))),
        ("syntactic", &p.syntactic.0, per(nums(&expected["category_counts"]))),
        ("surface", &p.surface.0, surface),
    ];
    for (name, actual, wanted) in pairs {
        for (i, (a, w)) in actual.iter().zip(&wanted).enumerate() {
            check!((a - w).abs() < 1e-9, "{name}[{i}] = {a}, expected {w}");
        }
    }

    let i = expected["surface_example"]["sentence"].as_u64().unwrap() as usize;
    let mut single = doc.clone();
    single.sentences = vec![doc.sentences[i].clone()];
    let v = surface_vector(&single).map_err(|e| e.to_string())?;
    let wanted = [1.0, 1.0, 0.0, 6.0, 14.0 / 6.0];
    for (k, (a, w)) in v.0.iter().zip(wanted).enumerate() {
        check!((a - w).abs() < 1e-9, "surface example[{k}] = {a}, expected {w}");
    }
    Ok("10-sentence fixture matches hand-derived vectors to 1e-9; all five categories".into())
}

fn corpus_invariants() -> Outcome {
    let size = NonZeroUsize::new(256).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut documents = Vec::new();
    for author in 0..10 {
        for book in 0..rng.gen_range(3..=7) {
            let n_words = rng.gen_range(300..3000);
            let text: String = (0..n_words)
                .map(|w| if w % 9 == 8 { "end. " } else { "word " })
                .collect();
            documents.push(Document {
                author_id: format!("author{author}"),
                book_id: format!("book{book}"),
                text,
                provenance: String::new(),
            });
        }
    }
    let streams: Vec<_> = documents
        .iter()
        .map(|d| tokenize(&d.text, TokenizerScheme::WhitespacePunct, None).unwrap())
        .collect();

    for seed in 0..100u64 {
        let assignment = split_books(&documents, None, seed).map_err(|e| e.to_string())?;
        let mut books_per_split: BTreeMap<Split, HashSet<(String, String)>> = BTreeMap::new();
        for (doc, stream) in documents.iter().zip(&streams) {
            let split = assignment[&doc.author_id][&doc.book_id];
            for chunk in chunk_document(stream, &doc.author_id, &doc.book_id, split, size, false) {
                check!(
                    chunk.tokens.len() == 256,
                    "seed {seed}: chunk {} has {} tokens",
                    chunk.id(),
                    chunk.tokens.len()
                );
                books_per_split
                    .entry(chunk.split)
                    .or_default()
                    .insert((chunk.author_id, chunk.book_id));
            }
        }
        for (a, sa) in &books_per_split {
            for (b, sb) in &books_per_split {
                check!(
                    a == b || sa.is_disjoint(sb),
                    "seed {seed}: {a:?} and {b:?} share a book"
                );
            }
        }
        for author in assignment.values() {
            for split in Split::ALL {
                check!(
                    author.values().any(|&s| s == split),
                    "seed {seed}: an author lacks a {split:?} book"
                );
            }
        }
    }

    let text: String = (0..80_000)
        .map(|w| if w % 12 == 11 { "done. " } else { "token " })
        .collect();
    let stream = tokenize(&text, TokenizerScheme::WhitespacePunct, None).unwrap();
    let chunks = chunk_document(&stream, "a", "b", Split::Train, size, false);
    let n = chunks.len();
    for percent in [5usize, 35, 70, 100] {
        let f = percent as f64 / 100.0;
        let kept = subsample(&chunks, f, 42).map_err(|e| e.to_string())?;
        let expected = (percent * n).div_ceil(100);
        check!(
            kept.len() == expected,
            "fraction {f}: {} chunks, expected {expected}",
            kept.len()
        );
        check!(
            kept == subsample(&chunks, f, 42).unwrap(),
            "fraction {f}: not deterministic"
        );
        check!(
            kept.windows(2).all(|w| w[0].index < w[1].index),
            "fraction {f}: order not preserved"
        );
    }
    Ok(format!(
        "100 seeds book-disjoint, all chunks 256 tokens; subsamples of {n} chunks exact"
    ))
}

fn report_fixtures() -> Outcome {
    let mut row = ReportRow::linguistic("PGW", "w/o masking", 0.18, 0.07, 0.01);
    row.set_name_stats(NameOverlapStats {
        pct_in_training: 0.50,
        n_unique_names: 68,
    });
    row.ppl = Some(9.68);
    row.cosine = Some(1.0);
    row.accuracy = Some(1.0);
    let report =
        AlignmentReport::new(vec![row], BTreeMap::new(), ReportMetadata::default()).map_err(|e| e.to_string())?;
    let expected_csv = "author,method,pct_in_training,n_names,ppl,cosine,accuracy,lexical_mse,syntactic_jsd,surface_mse,ppl_reduction_pct\n\
PGW,w/o masking,0.5000,68,9.6800,1.0000,1.0000,0.1800,0.0700,0.0100,\n\
AVERAGE,w/o masking,0.5000,68,9.6800,1.0000,1.0000,0.1800,0.0700,0.0100,\n";
    check!(report.to_csv() == expected_csv, "CSV differs:\n{}", report.to_csv());

    let profile = |label: &str| idiolect::features::StyleProfile {
        label: label.into(),
        n_sentences: 1,
        lexical: idiolect::features::LexicalVector([1.0; 6]),
        syntactic: idiolect::features::SyntacticDistribution([1.0, 0.0, 0.0, 0.0, 0.0]),
        surface: idiolect::features::SurfaceVector([1.0; 5]),
    };
    let predictions: Vec<PredictionRecord> = (0..1000)
        .map(|i| PredictionRecord {
            unit_id: format!("PGW/styletuned/{i}"),
            gold: "PGW".into(),
            pred: if i < 879 { "PGW" } else { "JA" }.into(),
        })
        .collect();
    let inputs = ReportInputs {
        predictions: &predictions,
        ..ReportInputs::default()
    };
    let report = alignment_report(
        &[profile("PGW/styletuned")],
        &[profile("PGW"), profile("JA")],
        &inputs,
        ReportMetadata::default(),
    )
    .map_err(|e| e.to_string())?;
    check!(
        report.classification["styletuned"].accuracy == 0.879,
        "classifier accuracy {}",
        report.classification["styletuned"].accuracy
    );
    let summary = report.summary_csv();
    check!(
        summary == "method,lexical_mse,syntactic_jsd,surface_mse,accuracy\nstyletuned,0.0000,0.0000,0.0000,0.8790\n",
        "summary differs:\n{summary}"
    );

    let recipe = emit_training_recipe("PGW", "masked/PGW/train.jsonl", None, &RecipeOverrides::default());
    let json: Value = serde_json::from_str(&recipe.to_json()).unwrap();
    check!(
        json["learning_rate"] == json!(5e-5),
        "learning_rate {}",
        json["learning_rate"]
    );
    check!(json["num_epoch"] == 3, "num_epoch {}", json["num_epoch"]);
    check!(
        json["per_gpu_batch_size"] == 4,
        "per_gpu_batch_size {}",
        json["per_gpu_batch_size"]
    );
    check!(
        json["input_max_token_length"] == 256,
        "input_max_token_length {}",
        json["input_max_token_length"]
    );
    Ok("PGW row CSV byte-exact, accuracy 0.8790, recipe defaults".into())
}

/// Writes every input of the full pipeline under `root`, identically for a
/// given call.
fn pipeline_inputs(root: &Path) {
    write_corpus(&root.join("corpus"), &AUTHORS[..3], 120);
    let mut gens = String::new();
    let mut gen_embeddings = String::new();
    let mut ref_embeddings = String::new();
    let mut predictions = String::new();
    let mut nll = String::new();
    for (a, author) in AUTHORS[..3].iter().enumerate() {
        ref_embeddings.push_str(&format!(
            "{}\n",
            json!({"label": author, "vector": [1.0, a as f64, 0.5]})
        ));
        for method in ["base", "styletuned"] {
            for i in 0..4 {
                let id = format!("{author}/{method}/{i}");
                let text = format!("He said nothing, and {author} waited {i} hours; then Mary came home.");
                gens.push_str(&format!(
                    "{}\n",
                    json!({"id": id, "author_id": author, "method": method, "text": text})
                ));
                gen_embeddings.push_str(&format!(
                    "{}\n",
                    json!({"label": id, "vector": [1.0, i as f64, a as f64]})
                ));
                let pred = if i == 0 { AUTHORS[(a + 1) % 3] } else { author };
                predictions.push_str(&format!("{}\n", json!({"unit_id": id, "gold": author, "pred": pred})));
                let scale = if method == "base" { 3.0 } else { 2.0 };
                nll.push_str(&format!(
                    "{}\n",
                    json!({"unit_id": id, "nlls": [scale, scale + 0.5, scale - 0.5]})
                ));
            }
        }
    }
    for (name, content) in [
        ("gens.jsonl", gens),
        ("gen_emb.jsonl", gen_embeddings),
        ("ref_emb.jsonl", ref_embeddings),
        ("pred.jsonl", predictions),
        ("nll.jsonl", nll),
    ] {
        std::fs::write(root.join(name), content).unwrap();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let shapes = [("layers.0.q_proj", 6, 5)];
    write_adapter_dir(&root.join("vw"), &random_adapter(&mut rng, &shapes, 4, 8.0));
    write_adapter_dir(&root.join("lima"), &random_adapter(&mut rng, &shapes, 2, 4.0));
}

fn run_pipeline(root: &Path) {
    let seed = ["--seed", "1234", "--out", "out"];
    let with = |rest: &[&str]| -> Vec<String> { seed.iter().chain(rest).map(|s| s.to_string()).collect() };
    let commands: [Vec<String>; 6] = [
        with(&["ingest", "--corpus", "corpus", "--subsample", "0.35,0.7"]),
        with(&["profile", "--chunks", "out/chunks.jsonl", "--generations", "gens.jsonl"]),
        with(&["mask", "--chunks", "out/chunks.jsonl"]),
        with(&["merge", "--adapter", "vw", "--adapter", "lima", "--ratios", "0.9,1"]),
        with(&[
            "evaluate",
            "--reference-embeddings",
            "ref_emb.jsonl",
            "--generation-embeddings",
            "gen_emb.jsonl",
            "--predictions",
            "pred.jsonl",
            "--nll",
            "nll.jsonl",
            "--baseline-method",
            "base",
            "--svg",
        ]),
        vec![
            "--out".into(),
            "rendered".into(),
            "report".into(),
            "--report".into(),
            "out/report/report.json".into(),
            "--svg".into(),
        ],
    ];
    for args in commands {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        run_ok(root, &args);
    }
}

fn determinism() -> Outcome {
    let first = TempDir::new().map_err(|e| e.to_string())?;
    let second = TempDir::new().map_err(|e| e.to_string())?;
    let mut snapshots = Vec::new();
    for dir in [&first, &second] {
        pipeline_inputs(dir.path());
        run_pipeline(dir.path());
        let mut snap = snapshot(&dir.path().join("out"));
        snap.extend(
            snapshot(&dir.path().join("rendered"))
                .into_iter()
                .map(|(p, b)| (Path::new("rendered").join(p), b)),
        );
        snapshots.push(snap);
    }
    let (a, b) = (&snapshots[0], &snapshots[1]);
    check!(a.keys().eq(b.keys()), "file sets differ");
    if let Some(path) = a.keys().find(|p| a[*p] != b[*p]) {
        return Err(format!("{} differs between runs", path.display()));
    }
    let report: Value = serde_json::from_slice(&a[Path::new("report/report.json")]).unwrap();
    let row = report["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["method"] == "styletuned")
        .unwrap();
    for column in ["ppl", "ppl_reduction_pct", "cosine", "accuracy", "pct_in_training"] {
        check!(!row[column].is_null(), "column {column} not populated");
    }
    Ok(format!("6 commands, {} files byte-identical across runs", a.len()))
}
