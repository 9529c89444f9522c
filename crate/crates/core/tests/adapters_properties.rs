use std::collections::BTreeMap;
use std::ops::Range;

use idiolect::adapters::{
    mask_labels, merge, read_safetensors, write_safetensors, Dtype, LoraAdapter, LoraModule, Matrix, MergeSpec, Tensor,
    TensorFile, IGNORE_INDEX,
};
use proptest::prelude::*;

/// Operand description: rank, alpha, ratio and per-target (A, B) entries.
#[derive(Debug, Clone)]
struct Operand {
    rank: usize,
    alpha: f64,
    ratio: f64,
    a: Vec<Vec<f32>>,
    b: Vec<Vec<f32>>,
}

fn operand(d: usize, k: usize, targets: usize) -> impl Strategy<Value = Operand> {
    (1usize..=3, 0.0f64..=1.0).prop_flat_map(move |(rank, ratio)| {
        let entries = move |n| proptest::collection::vec(proptest::collection::vec(-1.0f32..1.0, n), targets);
        (0.25f64..=2.0, entries(rank * k), entries(d * rank)).prop_map(move |(alpha_per_rank, a, b)| Operand {
            rank,
            alpha: alpha_per_rank * rank as f64,
            ratio,
            a,
            b,
        })
    })
}

fn spec() -> impl Strategy<Value = (usize, usize, Vec<Operand>)> {
    (1usize..=8, 1usize..=8, 1usize..=3, 1usize..=4)
        .prop_flat_map(|(d, k, targets, n)| (Just(d), Just(k), proptest::collection::vec(operand(d, k, targets), n)))
        .prop_filter("some ratio must be positive", |(_, _, ops)| {
            ops.iter().any(|o| o.ratio > 0.0)
        })
}

fn build(d: usize, k: usize, op: &Operand) -> LoraAdapter {
    let modules =
        op.a.iter()
            .zip(&op.b)
            .enumerate()
            .map(|(t, (a, b))| {
                (
                    format!("layers.{t}.q_proj"),
                    LoraModule {
                        a: Matrix::from_vec(op.rank, k, a.clone()).unwrap(),
                        b: Matrix::from_vec(d, op.rank, b.clone()).unwrap(),
                    },
                )
            })
            .collect();
    LoraAdapter {
        modules,
        rank: op.rank,
        alpha: op.alpha,
        base_model_tag: "base".into(),
        target_modules: vec!["q_proj".into()],
        dtype: Dtype::F32,
        extras: BTreeMap::new(),
        metadata: BTreeMap::new(),
    }
}

/// Σ ρᵢ·(αᵢ/rᵢ)·BᵢAᵢ with a naive triple loop in f64.
fn oracle(d: usize, k: usize, ops: &[Operand], target: usize) -> Vec<f64> {
    let mut sum = vec![0.0; d * k];
    for op in ops {
        let scale = op.ratio * op.alpha / op.rank as f64;
        let (a, b) = (&op.a[target], &op.b[target]);
        for i in 0..d {
            for j in 0..k {
                let mut dot = 0.0;
                for p in 0..op.rank {
                    dot += f64::from(b[i * op.rank + p]) * f64::from(a[p * k + j]);
                }
                sum[i * k + j] += scale * dot;
            }
        }
    }
    sum
}

fn max_diff(m: &Matrix<f64>, v: &[f64]) -> f64 {
    m.as_slice()
        .iter()
        .zip(v)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn merge_sum_identity((d, k, ops) in spec()) {
        let adapters: Vec<LoraAdapter> = ops.iter().map(|o| build(d, k, o)).collect();
        let merged = merge(&MergeSpec { operands: adapters.iter().zip(&ops).map(|(a, o)| (a, o.ratio)).collect() }).unwrap();
        prop_assert_eq!(merged.rank, ops.iter().map(|o| o.rank).sum::<usize>());
        prop_assert_eq!(merged.alpha, merged.rank as f64);
        for t in 0..ops[0].a.len() {
            let delta = merged.effective_delta(&format!("layers.{t}.q_proj")).unwrap();
            prop_assert!(max_diff(&delta, &oracle(d, k, &ops, t)) < 1e-6);
        }
    }

    #[test]
    fn zero_ratio_annihilates((d, k, mut ops) in spec()) {
        ops[0].ratio = 0.0;
        prop_assume!(ops.iter().any(|o| o.ratio > 0.0));
        let adapters: Vec<LoraAdapter> = ops.iter().map(|o| build(d, k, o)).collect();
        let full = merge(&MergeSpec { operands: adapters.iter().zip(&ops).map(|(a, o)| (a, o.ratio)).collect() }).unwrap();
        let rest = merge(&MergeSpec { operands: adapters[1..].iter().zip(&ops[1..]).map(|(a, o)| (a, o.ratio)).collect() }).unwrap();
        for target in full.modules.keys() {
            prop_assert_eq!(full.effective_delta(target).unwrap(), rest.effective_delta(target).unwrap());
        }
    }

    #[test]
    fn merge_is_order_equivariant((d, k, ops) in spec()) {
        let adapters: Vec<LoraAdapter> = ops.iter().map(|o| build(d, k, o)).collect();
        let forward: Vec<(&LoraAdapter, f64)> = adapters.iter().zip(&ops).map(|(a, o)| (a, o.ratio)).collect();
        let mut backward = forward.clone();
        backward.reverse();
        let x = merge(&MergeSpec { operands: forward }).unwrap();
        let y = merge(&MergeSpec { operands: backward }).unwrap();
        for target in x.modules.keys() {
            prop_assert!(x.effective_delta(target).unwrap().max_abs_diff(&y.effective_delta(target).unwrap()) < 1e-6);
        }
    }

    #[test]
    fn safetensors_canonical_round_trip(
        tensors in proptest::collection::btree_map(
            "[a-z][a-z0-9_.]{0,12}",
            (prop_oneof![Just(Dtype::F32), Just(Dtype::F16), Just(Dtype::BF16)], proptest::collection::vec(0usize..4, 0..3))
                .prop_flat_map(|(dtype, shape)| {
                    let n = shape.iter().product::<usize>();
                    (Just(dtype), Just(shape), proptest::collection::vec(-1e3f32..1e3, n))
                }),
            0..5,
        ),
        metadata in proptest::option::of(proptest::collection::btree_map("[a-z_]{1,8}", "[ -~]{0,12}", 0..3)),
    ) {
        let file = TensorFile {
            tensors: tensors
                .into_iter()
                .map(|(name, (dtype, shape, values))| (name, Tensor::from_f32(dtype, shape, &values)))
                .collect(),
            metadata,
        };
        let bytes = write_safetensors(&file).unwrap();
        let back = read_safetensors(&bytes).unwrap();
        prop_assert_eq!(&back, &file);
        prop_assert_eq!(write_safetensors(&back).unwrap(), bytes);
    }

    #[test]
    fn masked_count_equals_span_tokens(
        (ids, spans) in (0usize..64).prop_flat_map(|n| {
            let spans = proptest::collection::vec((0..=n, 0..=4usize), 0..6);
            (proptest::collection::vec(0u32..50_000, n), spans)
        })
    ) {
        // Turn (start, len) pairs into disjoint in-range spans.
        let mut covered = vec![false; ids.len()];
        let mut disjoint: Vec<Range<usize>> = Vec::new();
        for (start, len) in spans {
            let end = (start + len).min(ids.len());
            if start < end && !covered[start..end].iter().any(|&c| c) {
                covered[start..end].fill(true);
                disjoint.push(start..end);
            }
        }
        let ex = mask_labels(&ids, &disjoint).unwrap();
        prop_assert_eq!(ex.masked_count(), covered.iter().filter(|&&c| c).count());
        prop_assert!(ex.attention_mask.iter().all(|&m| m == 1));
        prop_assert_eq!(ex.labels.len(), ids.len());
        for (i, (&label, &id)) in ex.labels.iter().zip(&ids).enumerate() {
            prop_assert_eq!(label, if covered[i] { IGNORE_INDEX } else { i64::from(id) });
        }
    }
}
