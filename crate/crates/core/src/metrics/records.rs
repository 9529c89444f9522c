use serde::{Deserialize, Serialize};

use crate::{jsonl, Error, Result};

/// An externally produced embedding: `{"label", "vector"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub label: String,
    pub vector: Vec<f64>,
}

impl EmbeddingRecord {
    /// Parses an embeddings JSONL file. All vectors must be finite and share
    /// one dimension.
    pub fn parse_jsonl(content: &str, source: &str) -> Result<Vec<EmbeddingRecord>> {
        let records: Vec<EmbeddingRecord> = jsonl::parse(content, source)?;
        let dim = records.first().map(|r| r.vector.len());
        for r in &records {
            if Some(r.vector.len()) != dim {
                return Err(Error::DimensionMismatch {
                    left: dim.unwrap_or(0),
                    right: r.vector.len(),
                });
            }
            if r.vector.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "{source}: non-finite component in {:?}",
                    r.label
                )));
            }
        }
        Ok(records)
    }
}

/// A classifier decision: `{"unit_id","gold","pred"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub unit_id: String,
    pub gold: String,
    pub pred: String,
}

impl PredictionRecord {
    pub fn parse_jsonl(content: &str, source: &str) -> Result<Vec<PredictionRecord>> {
        jsonl::parse(content, source)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogBase {
    #[default]
    #[serde(rename = "e")]
    E,
    #[serde(rename = "2")]
    Two,
}

/// Per-token negative log-likelihoods for one unit of text. After loading,
/// `nlls` are always in natural log and `log_base` is [`LogBase::E`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NllDump {
    pub unit_id: String,
    #[serde(default)]
    pub log_base: LogBase,
    pub nlls: Vec<f64>,
}

impl NllDump {
    /// Validates and converts a dump to natural log.
    pub fn normalized(mut self) -> Result<NllDump> {
        if let Some(bad) = self.nlls.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidInput(format!("unit {:?} has NLL {bad}", self.unit_id)));
        }
        if self.log_base == LogBase::Two {
            for x in &mut self.nlls {
                *x *= std::f64::consts::LN_2;
            }
            self.log_base = LogBase::E;
        }
        Ok(self)
    }

    pub fn parse_jsonl(content: &str, source: &str) -> Result<Vec<NllDump>> {
        jsonl::parse::<NllDump>(content, source)?
            .into_iter()
            .map(NllDump::normalized)
            .collect()
    }

    pub fn perplexity(&self) -> Result<f64> {
        super::perplexity(&self.nlls)
    }
}

/// Splits an id of the form `author/method/...` into its author and, when
/// present, method segments.
pub fn split_unit_id(id: &str) -> (&str, Option<&str>) {
    let mut parts = id.splitn(3, '/');
    let author = parts.next().unwrap_or_default();
    (author, parts.next().filter(|m| !m.is_empty()))
}
