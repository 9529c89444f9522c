use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::safetensors::{Dtype, Tensor, TensorFile};
use crate::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T = f32> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy + Default> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::default(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Panics on ragged input.
    pub fn from_rows(rows: &[&[T]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

impl Matrix<f32> {
    /// Each entry multiplied by `factor` in f64 and rounded once to f32.
    pub fn scaled(&self, factor: f64) -> Matrix<f32> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| (f64::from(v) * factor) as f32).collect(),
        }
    }

    /// `self · rhs` accumulated in f64.
    pub fn matmul_f64(&self, rhs: &Matrix<f32>) -> Matrix<f64> {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = Matrix::<f64>::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for p in 0..self.cols {
                let a = f64::from(self.get(i, p));
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * f64::from(rhs.get(p, j));
                }
            }
        }
        out
    }

    fn vstack(blocks: &[Matrix<f32>]) -> Matrix<f32> {
        let cols = blocks[0].cols;
        Matrix {
            rows: blocks.iter().map(|b| b.rows).sum(),
            cols,
            data: blocks.iter().flat_map(|b| b.data.iter().copied()).collect(),
        }
    }

    fn hstack(blocks: &[Matrix<f32>]) -> Matrix<f32> {
        let rows = blocks[0].rows;
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for b in blocks {
                data.extend_from_slice(&b.data[i * b.cols..(i + 1) * b.cols]);
            }
        }
        Matrix { rows, cols, data }
    }
}

impl Matrix<f64> {
    pub fn scaled(&self, factor: f64) -> Matrix<f64> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Matrix<f64>) {
        assert_eq!(self.shape(), other.shape(), "shapes differ");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Largest absolute componentwise difference.
    pub fn max_abs_diff(&self, other: &Matrix<f64>) -> f64 {
        assert_eq!(self.shape(), other.shape(), "shapes differ");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Adapter config JSON as stored next to the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterConfig {
    pub r: usize,
    pub lora_alpha: f64,
    pub base_model_tag: String,
    #[serde(default)]
    pub target_modules: Vec<String>,
}

/// Tensor names are `{prefix}{target}{a_suffix}` and `{prefix}{target}{b_suffix}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorNaming {
    pub prefix: String,
    pub a_suffix: String,
    pub b_suffix: String,
}

impl Default for TensorNaming {
    fn default() -> Self {
        TensorNaming {
            prefix: "base_model.model.".into(),
            a_suffix: ".lora_A.weight".into(),
            b_suffix: ".lora_B.weight".into(),
        }
    }
}

impl TensorNaming {
    fn classify<'n>(&self, name: &'n str) -> Option<(&'n str, bool)> {
        let stem = name.strip_prefix(self.prefix.as_str())?;
        if let Some(target) = stem.strip_suffix(self.a_suffix.as_str()) {
            return Some((target, true));
        }
        stem.strip_suffix(self.b_suffix.as_str()).map(|target| (target, false))
    }

    pub fn a_name(&self, target: &str) -> String {
        format!("{}{target}{}", self.prefix, self.a_suffix)
    }

    pub fn b_name(&self, target: &str) -> String {
        format!("{}{target}{}", self.prefix, self.b_suffix)
    }
}

/// One adapted weight: ΔW = (α/r)·B·A with A of shape r×k and B of d×r.
#[derive(Debug, Clone, PartialEq)]
pub struct LoraModule {
    pub a: Matrix<f32>,
    pub b: Matrix<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoraAdapter {
    pub modules: BTreeMap<String, LoraModule>,
    pub rank: usize,
    pub alpha: f64,
    pub base_model_tag: String,
    pub target_modules: Vec<String>,
    /// Storage dtype of the A/B tensors.
    pub dtype: Dtype,
    /// Tensors outside the naming convention, carried through unchanged.
    pub extras: BTreeMap<String, Tensor<'static>>,
    pub metadata: BTreeMap<String, String>,
}

fn to_matrix(name: &str, tensor: &Tensor<'_>) -> Result<Matrix<f32>> {
    let [rows, cols] = tensor.shape[..] else {
        return Err(Error::ShapeMismatch {
            target: name.to_string(),
            detail: format!("expected a 2-D tensor, found shape {:?}", tensor.shape),
        });
    };
    let values = tensor.to_f32();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{name} has non-finite entries")));
    }
    Matrix::from_vec(rows, cols, values)
}

/// Pairs `lora_A`/`lora_B` tensors by target and validates them against the
/// config's rank.
pub fn load_adapter(file: &TensorFile<'_>, config: &AdapterConfig, naming: &TensorNaming) -> Result<LoraAdapter> {
    if config.r == 0 || !(config.lora_alpha > 0.0 && config.lora_alpha.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "invalid rank {} / alpha {}",
            config.r, config.lora_alpha
        )));
    }
    let mut halves: BTreeMap<&str, (Option<&Tensor>, Option<&Tensor>)> = BTreeMap::new();
    let mut extras = BTreeMap::new();
    let mut dtypes = BTreeSet::new();
    for (name, tensor) in &file.tensors {
        match naming.classify(name) {
            Some((target, is_a)) => {
                let slot = halves.entry(target).or_default();
                if is_a {
                    slot.0 = Some(tensor);
                } else {
                    slot.1 = Some(tensor);
                }
                dtypes.insert(tensor.dtype.as_str());
            }
            None => {
                extras.insert(name.clone(), tensor.clone().into_owned());
            }
        }
    }

    let mut modules = BTreeMap::new();
    for (target, pair) in halves {
        let (Some(a), Some(b)) = pair else {
            return Err(Error::UnpairedTensor(target.to_string()));
        };
        let a = to_matrix(target, a)?;
        let b = to_matrix(target, b)?;
        if a.rows() != config.r || b.cols() != config.r {
            return Err(Error::ShapeMismatch {
                target: target.to_string(),
                detail: format!("A is {:?} and B is {:?}, rank {}", a.shape(), b.shape(), config.r),
            });
        }
        modules.insert(target.to_string(), LoraModule { a, b });
    }
    let dtype = dtypes
        .iter()
        .map(|d| Dtype::parse(d).expect("parsed on read"))
        .reduce(Dtype::widest)
        .unwrap_or(Dtype::F32);
    Ok(LoraAdapter {
        modules,
        rank: config.r,
        alpha: config.lora_alpha,
        base_model_tag: config.base_model_tag.clone(),
        target_modules: config.target_modules.clone(),
        dtype,
        extras,
        metadata: file.metadata.clone().unwrap_or_default(),
    })
}

impl LoraAdapter {
    pub fn scaling(&self) -> f64 {
        self.alpha / self.rank as f64
    }

    /// ΔW = (α/r)·B·A for `target`, in f64.
    pub fn effective_delta(&self, target: &str) -> Result<Matrix<f64>> {
        let module = self
            .modules
            .get(target)
            .ok_or_else(|| Error::UnknownTarget(target.to_string()))?;
        Ok(module.b.matmul_f64(&module.a).scaled(self.scaling()))
    }

    pub fn config(&self) -> AdapterConfig {
        AdapterConfig {
            r: self.rank,
            lora_alpha: self.alpha,
            base_model_tag: self.base_model_tag.clone(),
            target_modules: self.target_modules.clone(),
        }
    }

    /// Serializable form in `self.dtype`, extras included unchanged.
    pub fn to_tensor_file(&self, naming: &TensorNaming) -> TensorFile<'static> {
        let mut tensors = self.extras.clone();
        for (target, m) in &self.modules {
            let a = Tensor::from_f32(self.dtype, vec![m.a.rows(), m.a.cols()], m.a.as_slice());
            let b = Tensor::from_f32(self.dtype, vec![m.b.rows(), m.b.cols()], m.b.as_slice());
            tensors.insert(naming.a_name(target), a);
            tensors.insert(naming.b_name(target), b);
        }
        TensorFile {
            tensors,
            metadata: (!self.metadata.is_empty()).then(|| self.metadata.clone()),
        }
    }
}

/// Adapters to merge with their ratios, in block order.
#[derive(Debug, Clone)]
pub struct MergeSpec<'a> {
    pub operands: Vec<(&'a LoraAdapter, f64)>,
}

/// Block-concatenation merge. Per target, A′ stacks ρᵢ·(αᵢ/rᵢ)·Aᵢ vertically
/// and B′ stacks Bᵢ horizontally, so B′A′ = Σ ρᵢ·(αᵢ/rᵢ)·BᵢAᵢ. The merged
/// rank and alpha are both Σrᵢ, giving a scaling of 1.
pub fn merge(spec: &MergeSpec<'_>) -> Result<LoraAdapter> {
    let Some(&(first, _)) = spec.operands.first() else {
        return Err(Error::InvalidSpec("no operands".into()));
    };
    if let Some((_, bad)) = spec.operands.iter().find(|(_, r)| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::InvalidSpec(format!(
            "ratio {bad} must be finite and non-negative"
        )));
    }
    if spec.operands.iter().all(|(_, r)| *r == 0.0) {
        return Err(Error::InvalidSpec("every ratio is zero".into()));
    }
    let targets: BTreeSet<&String> = first.modules.keys().collect();
    for (adapter, _) in &spec.operands[1..] {
        if adapter.base_model_tag != first.base_model_tag {
            return Err(Error::IncompatibleAdapters(format!(
                "base models {:?} and {:?}",
                first.base_model_tag, adapter.base_model_tag
            )));
        }
        if adapter.modules.keys().collect::<BTreeSet<_>>() != targets {
            return Err(Error::IncompatibleAdapters("target sets differ".into()));
        }
    }

    let mut modules = BTreeMap::new();
    for target in targets {
        let parts: Vec<&LoraModule> = spec.operands.iter().map(|(a, _)| &a.modules[target]).collect();
        let (d, k) = (parts[0].b.rows(), parts[0].a.cols());
        if let Some(p) = parts.iter().find(|p| p.b.rows() != d || p.a.cols() != k) {
            return Err(Error::ShapeMismatch {
                target: target.clone(),
                detail: format!(
                    "ΔW is {d}x{k} in one operand and {}x{} in another",
                    p.b.rows(),
                    p.a.cols()
                ),
            });
        }
        let a_blocks: Vec<Matrix<f32>> = spec
            .operands
            .iter()
            .zip(&parts)
            .map(|((adapter, ratio), part)| part.a.scaled(ratio * adapter.scaling()))
            .collect();
        let b_blocks: Vec<Matrix<f32>> = parts.iter().map(|p| p.b.clone()).collect();
        modules.insert(
            target.clone(),
            LoraModule {
                a: Matrix::vstack(&a_blocks),
                b: Matrix::hstack(&b_blocks),
            },
        );
    }

    let rank: usize = spec.operands.iter().map(|(a, _)| a.rank).sum();
    let dtype = spec
        .operands
        .iter()
        .map(|(a, _)| a.dtype)
        .reduce(Dtype::widest)
        .expect("non-empty");
    let extras = first
        .extras
        .iter()
        .filter(|(name, t)| spec.operands.iter().all(|(a, _)| a.extras.get(*name) == Some(t)))
        .map(|(n, t)| (n.clone(), t.clone()))
        .collect();
    let ratios: Vec<String> = spec.operands.iter().map(|(_, r)| r.to_string()).collect();
    let ranks: Vec<String> = spec.operands.iter().map(|(a, _)| a.rank.to_string()).collect();
    let alphas: Vec<String> = spec.operands.iter().map(|(a, _)| a.alpha.to_string()).collect();
    let metadata = BTreeMap::from([
        ("merge_ratios".to_string(), ratios.join(":")),
        ("merge_operand_ranks".to_string(), ranks.join(":")),
        ("merge_operand_alphas".to_string(), alphas.join(":")),
        ("merged_rank".to_string(), rank.to_string()),
        ("merged_alpha".to_string(), rank.to_string()),
    ]);
    let mut target_modules: Vec<String> = spec
        .operands
        .iter()
        .flat_map(|(a, _)| a.target_modules.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    target_modules.sort();
    Ok(LoraAdapter {
        modules,
        rank,
        alpha: rank as f64,
        base_model_tag: first.base_model_tag.clone(),
        target_modules,
        dtype,
        extras,
        metadata,
    })
}
