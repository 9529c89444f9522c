//! Numeric comparisons between generated text and author references.

mod records;
pub mod report;

pub use report::{alignment_report, AlignmentReport, ReportInputs, ReportMetadata, ReportRow};

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

pub use records::{split_unit_id, EmbeddingRecord, LogBase, NllDump, PredictionRecord};

use crate::annotate::AnnotatedDocument;
use crate::{Error, Result};

/// Distributions whose mass is within this distance of 1 are renormalized.
pub const MASS_TOLERANCE: f64 = 1e-6;

fn same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { left: a, right: b });
    }
    Ok(())
}

/// Mean of squared componentwise differences.
pub fn mse(a: &[f64], b: &[f64]) -> Result<f64> {
    same_len(a.len(), b.len())?;
    if a.is_empty() {
        return Err(Error::EmptyInput("mse of empty vectors".into()));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64)
}

fn normalized(p: &[f64], name: &str) -> Result<Vec<f64>> {
    if let Some(bad) = p.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::InvalidDistribution(format!("{name} has component {bad}")));
    }
    let mass: f64 = p.iter().sum();
    if (mass - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::InvalidDistribution(format!("{name} sums to {mass}")));
    }
    Ok(p.iter().map(|x| x / mass).collect())
}

/// Jensen-Shannon divergence with base-2 logarithms, so the result lies in
/// [0, 1]. Terms with zero probability contribute nothing.
pub fn jsd(p: &[f64], q: &[f64]) -> Result<f64> {
    same_len(p.len(), q.len())?;
    let p = normalized(p, "p")?;
    let q = normalized(q, "q")?;
    let kl_to_mixture = |x: f64, m: f64| if x > 0.0 { x * (x / m).log2() } else { 0.0 };
    let value: f64 = p
        .iter()
        .zip(&q)
        .map(|(&pi, &qi)| {
            let m = 0.5 * (pi + qi);
            0.5 * kl_to_mixture(pi, m) + 0.5 * kl_to_mixture(qi, m)
        })
        .sum();
    Ok(value.clamp(0.0, 1.0))
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    same_len(u.len(), v.len())?;
    let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Componentwise mean of the given vectors.
pub fn average_embedding<'a, I>(vectors: I) -> Result<Vec<f64>>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut iter = vectors.into_iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::EmptyInput("no embeddings to average".into()))?;
    let mut sum = first.to_vec();
    let mut n = 1usize;
    for v in iter {
        same_len(sum.len(), v.len())?;
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
        n += 1;
    }
    Ok(sum.into_iter().map(|s| s / n as f64).collect())
}

/// exp of the mean natural-log NLL.
pub fn perplexity(nlls: &[f64]) -> Result<f64> {
    if nlls.is_empty() {
        return Err(Error::EmptyInput("perplexity of zero tokens".into()));
    }
    Ok((nlls.iter().sum::<f64>() / nlls.len() as f64).exp())
}

/// Relative perplexity reduction in percent.
pub fn ppl_reduction(pre: f64, post: f64) -> Result<f64> {
    if pre.is_nan() || pre <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "baseline perplexity {pre} must be positive"
        )));
    }
    Ok(100.0 * (pre - post) / pre)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationStats {
    pub labels: Vec<String>,
    pub accuracy: f64,
    /// `confusion[gold][pred]`, indexed by position in `labels`.
    pub confusion: Vec<Vec<usize>>,
}

pub fn classification_stats<S: AsRef<str>>(labels: &[S], gold: &[S], pred: &[S]) -> Result<ClassificationStats> {
    if gold.len() != pred.len() || gold.is_empty() {
        return Err(Error::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    let index: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_ref(), i)).collect();
    let lookup = |l: &S| {
        index
            .get(l.as_ref())
            .copied()
            .ok_or_else(|| Error::UnknownAuthor(l.as_ref().to_string()))
    };
    let mut confusion = vec![vec![0usize; labels.len()]; labels.len()];
    let mut correct = 0usize;
    for (g, p) in gold.iter().zip(pred) {
        let (gi, pi) = (lookup(g)?, lookup(p)?);
        confusion[gi][pi] += 1;
        correct += usize::from(gi == pi);
    }
    Ok(ClassificationStats {
        labels: labels.iter().map(|l| l.as_ref().to_string()).collect(),
        accuracy: correct as f64 / gold.len() as f64,
        confusion,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NameOverlapStats {
    pub pct_in_training: f64,
    pub n_unique_names: usize,
}

/// Case-folded surface forms of every person span in `docs`.
pub fn person_names<'a, I>(docs: I) -> BTreeSet<String>
where
    I: IntoIterator<Item = &'a AnnotatedDocument>,
{
    let mut names = BTreeSet::new();
    for doc in docs {
        for sentence in &doc.sentences {
            for span in sentence.person_spans() {
                let surface: Vec<&str> = sentence.tokens[span].iter().map(|t| t.text.as_str()).collect();
                names.insert(surface.join(" ").to_lowercase());
            }
        }
    }
    names
}

/// Share of distinct generated person names that also occur in training data.
pub fn name_overlap<'a, I>(generated: I, training_names: &HashSet<String>) -> NameOverlapStats
where
    I: IntoIterator<Item = &'a AnnotatedDocument>,
{
    let names = person_names(generated);
    if names.is_empty() {
        return NameOverlapStats {
            pct_in_training: 0.0,
            n_unique_names: 0,
        };
    }
    let seen = names
        .iter()
        .filter(|n| training_names.contains(&n.to_lowercase()))
        .count();
    NameOverlapStats {
        pct_in_training: seen as f64 / names.len() as f64,
        n_unique_names: names.len(),
    }
}
