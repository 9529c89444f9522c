#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use idiolect::adapters::{write_safetensors, AdapterConfig, Dtype, LoraAdapter, LoraModule, Matrix, TensorNaming};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const AUTHORS: [&str; 10] = [
    "austen", "bronte", "conrad", "dickens", "eliot", "forster", "gaskell", "hardy", "irving", "james",
];

const NAMES: [&str; 8] = [
    "John",
    "Mary",
    "Elizabeth",
    "Henry",
    "Anna",
    "Thomas",
    "Margaret",
    "George",
];
const SUBJECTS: [&str; 6] = ["The old man", "She", "He", "The girl", "My father", "The stranger"];
const VERBS: [&str; 6] = ["walked", "waited", "looked", "turned", "listened", "smiled"];
const PLACES: [&str; 6] = [
    "to the river",
    "by the door",
    "at the window",
    "in the garden",
    "on the hill",
    "near the road",
];
const MEETS: [&str; 4] = ["saw", "met", "told", "called"];

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_idiolect"))
}

pub fn run(cwd: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(cwd)
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn run_ok(cwd: &Path, args: &[&str]) -> String {
    let out = run(cwd, args);
    assert!(
        out.status.success(),
        "idiolect {args:?} failed ({:?}): {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// One sentence in an author's habitual style; `style` shifts the mix of
/// structures and punctuation.
fn sentence(rng: &mut ChaCha8Rng, style: usize) -> String {
    let s = SUBJECTS.choose(rng).unwrap();
    let v = VERBS.choose(rng).unwrap();
    let p = PLACES.choose(rng).unwrap();
    let n = NAMES.choose(rng).unwrap();
    let m = MEETS.choose(rng).unwrap();
    match (rng.gen_range(0..10) + style) % 7 {
        0 => format!("{s} {v} {p}."),
        1 => format!("{s} {v} {p}, and then {m} {n}."),
        2 => format!("Although it was late, {} {v} {p}.", s.to_lowercase()),
        3 => format!("\"I shall stay here,\" said {n}."),
        4 => format!("{s} {v}; the wind was cold and the night was dark."),
        5 => format!("It was quiet {p}: nobody {v}, and nobody spoke."),
        _ => format!("{s} {v} {p} because {n} {v} there too."),
    }
}

/// A corpus of `<root>/<author>/<book>.txt` with four books per author, each
/// wrapped in START/END markers.
pub fn write_corpus(root: &Path, authors: &[&str], sentences_per_book: usize) {
    for (style, author) in authors.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(style as u64 + 1);
        for book in 0..4 {
            let mut lines = vec![
                "Preface that is stripped.".to_string(),
                "*** START OF THE BOOK ***".to_string(),
            ];
            lines.extend((0..sentences_per_book).map(|_| sentence(&mut rng, style)));
            lines.push("*** END OF THE BOOK ***".to_string());
            let dir = root.join(author);
            std::fs::create_dir_all(&dir).unwrap();
            std::fs::write(dir.join(format!("book{book}.txt")), lines.join("\n")).unwrap();
        }
    }
}

/// All files under `dir`, relative path → bytes.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(base, &path, out);
            } else {
                out.insert(
                    path.strip_prefix(base).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                );
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<f32> {
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0f32..=1.0)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// Random adapter over the given `(target, d, k)` shapes.
pub fn random_adapter(rng: &mut ChaCha8Rng, shapes: &[(&str, usize, usize)], rank: usize, alpha: f64) -> LoraAdapter {
    LoraAdapter {
        modules: shapes
            .iter()
            .map(|&(t, d, k)| {
                let module = LoraModule {
                    a: random_matrix(rng, rank, k),
                    b: random_matrix(rng, d, rank),
                };
                (t.to_string(), module)
            })
            .collect(),
        rank,
        alpha,
        base_model_tag: "llama-2-7b".into(),
        target_modules: shapes.iter().map(|s| s.0.to_string()).collect(),
        dtype: Dtype::F32,
        extras: BTreeMap::new(),
        metadata: BTreeMap::new(),
    }
}

pub fn write_adapter_dir(dir: &Path, adapter: &LoraAdapter) {
    std::fs::create_dir_all(dir).unwrap();
    let bytes = write_safetensors(&adapter.to_tensor_file(&TensorNaming::default())).unwrap();
    std::fs::write(dir.join("adapter_model.safetensors"), bytes).unwrap();
    let config: AdapterConfig = adapter.config();
    std::fs::write(
        dir.join("adapter_config.json"),
        serde_json::to_string_pretty(&config).unwrap(),
    )
    .unwrap();
}
