//! Alignment reports: per (author, method) rows, macro averages, and CSV,
//! JSON and SVG renderings.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::records::split_unit_id;
use super::{average_embedding, classification_stats, cosine, jsd, mse, perplexity, ppl_reduction};
use super::{ClassificationStats, EmbeddingRecord, NameOverlapStats, NllDump, PredictionRecord};
use crate::features::StyleProfile;
use crate::{Error, Result};

/// Author column value of the macro-average rows.
pub const AVERAGE_LABEL: &str = "AVERAGE";
/// Method assigned to profiles whose label has no `/method` part.
pub const REFERENCE_METHOD: &str = "reference";

pub const CSV_HEADER: &str =
    "author,method,pct_in_training,n_names,ppl,cosine,accuracy,lexical_mse,syntactic_jsd,surface_mse,ppl_reduction_pct";
pub const SUMMARY_HEADER: &str = "method,lexical_mse,syntactic_jsd,surface_mse,accuracy";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub author: String,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pct_in_training: Option<f64>,
    /// Integral for author rows; may be fractional in average rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_names: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ppl: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ppl_reduction_pct: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cosine: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    pub lexical_mse: f64,
    pub syntactic_jsd: f64,
    pub surface_mse: f64,
}

impl ReportRow {
    /// A row with only the linguistic columns filled.
    pub fn linguistic(author: &str, method: &str, lexical_mse: f64, syntactic_jsd: f64, surface_mse: f64) -> ReportRow {
        ReportRow {
            author: author.to_string(),
            method: method.to_string(),
            pct_in_training: None,
            n_names: None,
            ppl: None,
            ppl_reduction_pct: None,
            cosine: None,
            accuracy: None,
            lexical_mse,
            syntactic_jsd,
            surface_mse,
        }
    }

    pub fn set_name_stats(&mut self, stats: NameOverlapStats) {
        self.pct_in_training = Some(stats.pct_in_training);
        self.n_names = Some(stats.n_unique_names as f64);
    }

    fn optional_values(&self) -> [Option<f64>; 6] {
        [
            self.pct_in_training,
            self.n_names,
            self.ppl,
            self.ppl_reduction_pct,
            self.cosine,
            self.accuracy,
        ]
    }

    fn is_finite(&self) -> bool {
        self.optional_values()
            .iter()
            .flatten()
            .chain([&self.lexical_mse, &self.syntactic_jsd, &self.surface_mse])
            .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub tokenizer_scheme: String,
    pub annotation_source: String,
    /// Lexicon name → content id.
    pub lexicon_ids: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    pub jsd_log_base: u32,
    pub nll_log_base: String,
    pub averaging: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_method: Option<String>,
}

impl Default for ReportMetadata {
    fn default() -> Self {
        ReportMetadata {
            tokenizer_scheme: "whitespace_punct".into(),
            annotation_source: "builtin".into(),
            lexicon_ids: BTreeMap::new(),
            seeds: Vec::new(),
            jsd_log_base: 2,
            nll_log_base: "e".into(),
            averaging: "macro".into(),
            baseline_method: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub rows: Vec<ReportRow>,
    /// One macro-average row per method, author [`AVERAGE_LABEL`].
    pub averages: Vec<ReportRow>,
    /// Classifier statistics per method.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub classification: BTreeMap<String, ClassificationStats>,
    pub metadata: ReportMetadata,
}

/// Optional evidence for the non-linguistic columns. Ids follow the
/// `author/method/...` convention; reference embeddings are labelled with the
/// bare author id.
#[derive(Debug, Clone, Default)]
pub struct ReportInputs<'a> {
    pub reference_embeddings: &'a [EmbeddingRecord],
    pub generation_embeddings: &'a [EmbeddingRecord],
    pub predictions: &'a [PredictionRecord],
    pub nll_dumps: &'a [NllDump],
    /// Method whose perplexity is the baseline for `ppl_reduction_pct`.
    pub baseline_method: Option<&'a str>,
    pub name_stats: BTreeMap<(String, String), NameOverlapStats>,
}

/// Splits a profile label `author/method` (or a bare `author`).
pub fn split_label(label: &str) -> (&str, &str) {
    match label.split_once('/') {
        Some((author, method)) => (author, method),
        None => (label, REFERENCE_METHOD),
    }
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Token-pooled perplexity for every (author, method) in the dumps.
fn pooled_perplexities(dumps: &[NllDump]) -> Result<BTreeMap<(String, String), f64>> {
    let mut pooled: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for dump in dumps {
        let (author, method) = split_unit_id(&dump.unit_id);
        let method = method.unwrap_or(REFERENCE_METHOD);
        pooled
            .entry((author.to_string(), method.to_string()))
            .or_default()
            .extend(&dump.nlls);
    }
    pooled
        .into_iter()
        .map(|(key, nlls)| Ok((key, perplexity(&nlls)?)))
        .collect()
}

/// Mean cosine between each generation embedding and its author's average
/// reference embedding.
fn mean_cosines(
    references: &[EmbeddingRecord],
    generations: &[EmbeddingRecord],
) -> Result<BTreeMap<(String, String), f64>> {
    let mut by_author: BTreeMap<&str, Vec<&[f64]>> = BTreeMap::new();
    for r in references {
        by_author.entry(&r.label).or_default().push(&r.vector);
    }
    let averages: BTreeMap<&str, Vec<f64>> = by_author
        .into_iter()
        .map(|(a, vs)| Ok((a, average_embedding(vs)?)))
        .collect::<Result<_>>()?;

    let mut scores: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for g in generations {
        let (author, method) = split_unit_id(&g.label);
        let Some(reference) = averages.get(author) else {
            return Err(Error::UnknownAuthor(author.to_string()));
        };
        let method = method.unwrap_or(REFERENCE_METHOD);
        scores
            .entry((author.to_string(), method.to_string()))
            .or_default()
            .push(cosine(&g.vector, reference)?);
    }
    Ok(scores
        .into_iter()
        .filter_map(|(k, v)| mean(v).map(|m| (k, m)))
        .collect())
}

/// Classifier statistics per method plus per-(author, method) accuracy over
/// the units whose gold label is that author.
type ClassifierSummary = (BTreeMap<String, ClassificationStats>, BTreeMap<(String, String), f64>);

fn classifier_summary(predictions: &[PredictionRecord]) -> Result<ClassifierSummary> {
    let labels: Vec<&str> = predictions
        .iter()
        .flat_map(|p| [p.gold.as_str(), p.pred.as_str()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut by_method: BTreeMap<&str, Vec<&PredictionRecord>> = BTreeMap::new();
    for p in predictions {
        by_method
            .entry(split_unit_id(&p.unit_id).1.unwrap_or(REFERENCE_METHOD))
            .or_default()
            .push(p);
    }
    let mut stats = BTreeMap::new();
    let mut accuracy = BTreeMap::new();
    for (method, preds) in by_method {
        let gold: Vec<&str> = preds.iter().map(|p| p.gold.as_str()).collect();
        let pred: Vec<&str> = preds.iter().map(|p| p.pred.as_str()).collect();
        let s = classification_stats(&labels, &gold, &pred)?;
        for (i, label) in s.labels.iter().enumerate() {
            let total: usize = s.confusion[i].iter().sum();
            if total > 0 {
                accuracy.insert(
                    (label.clone(), method.to_string()),
                    s.confusion[i][i] as f64 / total as f64,
                );
            }
        }
        stats.insert(method.to_string(), s);
    }
    Ok((stats, accuracy))
}

/// Macro averages per method: each column is the unweighted mean over the
/// author rows where it is present.
pub fn macro_averages(rows: &[ReportRow]) -> Vec<ReportRow> {
    let methods: BTreeSet<&str> = rows.iter().map(|r| r.method.as_str()).collect();
    methods
        .into_iter()
        .map(|method| {
            let group: Vec<&ReportRow> = rows.iter().filter(|r| r.method == method).collect();
            let col = |f: fn(&ReportRow) -> Option<f64>| mean(group.iter().filter_map(|r| f(r)));
            ReportRow {
                author: AVERAGE_LABEL.to_string(),
                method: method.to_string(),
                pct_in_training: col(|r| r.pct_in_training),
                n_names: col(|r| r.n_names),
                ppl: col(|r| r.ppl),
                ppl_reduction_pct: col(|r| r.ppl_reduction_pct),
                cosine: col(|r| r.cosine),
                accuracy: col(|r| r.accuracy),
                lexical_mse: col(|r| Some(r.lexical_mse)).unwrap_or(0.0),
                syntactic_jsd: col(|r| Some(r.syntactic_jsd)).unwrap_or(0.0),
                surface_mse: col(|r| Some(r.surface_mse)).unwrap_or(0.0),
            }
        })
        .collect()
}

/// Compares every generation profile (label `author/method`) with the
/// reference profile of its author (label `author`).
pub fn alignment_report(
    generations: &[StyleProfile],
    references: &[StyleProfile],
    inputs: &ReportInputs<'_>,
    mut metadata: ReportMetadata,
) -> Result<AlignmentReport> {
    let refs: BTreeMap<&str, &StyleProfile> = references.iter().map(|p| (split_label(&p.label).0, p)).collect();
    let ppl = pooled_perplexities(inputs.nll_dumps)?;
    let cosines = mean_cosines(inputs.reference_embeddings, inputs.generation_embeddings)?;
    let (classification, accuracy) = classifier_summary(inputs.predictions)?;

    let mut rows = Vec::with_capacity(generations.len());
    for generation in generations {
        let (author, method) = split_label(&generation.label);
        let reference = refs
            .get(author)
            .ok_or_else(|| Error::UnknownAuthor(author.to_string()))?;
        let mut row = ReportRow::linguistic(
            author,
            method,
            mse(&generation.lexical.0, &reference.lexical.0)?,
            jsd(&generation.syntactic.0, &reference.syntactic.0)?,
            mse(&generation.surface.0, &reference.surface.0)?,
        );
        let key = (author.to_string(), method.to_string());
        row.ppl = ppl.get(&key).copied();
        if let (Some(post), Some(base)) = (row.ppl, inputs.baseline_method) {
            if let Some(&pre) = ppl.get(&(author.to_string(), base.to_string())) {
                row.ppl_reduction_pct = Some(ppl_reduction(pre, post)?);
            }
        }
        row.cosine = cosines.get(&key).copied();
        row.accuracy = accuracy.get(&key).copied();
        if let Some(stats) = inputs.name_stats.get(&key) {
            row.set_name_stats(*stats);
        }
        rows.push(row);
    }
    rows.sort_by(|a, b| (&a.author, &a.method).cmp(&(&b.author, &b.method)));
    if let Some(w) = rows
        .windows(2)
        .find(|w| w[0].author == w[1].author && w[0].method == w[1].method)
    {
        return Err(Error::InvalidInput(format!(
            "duplicate generation profile {}/{}",
            w[0].author, w[0].method
        )));
    }
    metadata.baseline_method = inputs.baseline_method.map(str::to_string);
    AlignmentReport::new(rows, classification, metadata)
}

impl AlignmentReport {
    /// Builds a report from finished rows, computing the averages.
    pub fn new(
        rows: Vec<ReportRow>,
        classification: BTreeMap<String, ClassificationStats>,
        metadata: ReportMetadata,
    ) -> Result<AlignmentReport> {
        if let Some(bad) = rows.iter().find(|r| !r.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value in row {}/{}",
                bad.author, bad.method
            )));
        }
        let averages = macro_averages(&rows);
        Ok(AlignmentReport {
            rows,
            averages,
            classification,
            metadata,
        })
    }

    /// Author rows followed by the average rows, columns as in
    /// [`CSV_HEADER`]. Missing values are empty fields.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        for row in self.rows.iter().chain(&self.averages) {
            let fields = [
                csv_field(&row.author),
                csv_field(&row.method),
                opt(row.pct_in_training),
                count(row.n_names),
                opt(row.ppl),
                opt(row.cosine),
                opt(row.accuracy),
                num(row.lexical_mse),
                num(row.syntactic_jsd),
                num(row.surface_mse),
                opt(row.ppl_reduction_pct),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    /// Per-method averages: linguistic alignment and classifier accuracy.
    pub fn summary_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(SUMMARY_HEADER);
        out.push('\n');
        for row in &self.averages {
            let fields = [
                csv_field(&row.method),
                num(row.lexical_mse),
                num(row.syntactic_jsd),
                num(row.surface_mse),
                opt(row.accuracy),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Horizontal bar chart of PPL reductions per author row, or `None` when
    /// no row has one.
    pub fn ppl_reduction_svg(&self) -> Option<String> {
        let bars: Vec<(String, f64)> = self
            .rows
            .iter()
            .filter_map(|r| r.ppl_reduction_pct.map(|v| (format!("{} ({})", r.author, r.method), v)))
            .collect();
        (!bars.is_empty()).then(|| bar_chart("PPL reduction (%)", &bars))
    }

    /// Horizontal bar chart of mean cosine similarity per author row.
    pub fn cosine_svg(&self) -> Option<String> {
        let bars: Vec<(String, f64)> = self
            .rows
            .iter()
            .filter_map(|r| r.cosine.map(|v| (format!("{} ({})", r.author, r.method), v)))
            .collect();
        (!bars.is_empty()).then(|| bar_chart("Cosine similarity", &bars))
    }
}

fn num(v: f64) -> String {
    format!("{v:.4}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn count(v: Option<f64>) -> String {
    match v {
        Some(v) if v.fract() == 0.0 => format!("{v:.0}"),
        other => opt(other),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn bar_chart(title: &str, bars: &[(String, f64)]) -> String {
    const LABEL_W: f64 = 220.0;
    const PLOT_W: f64 = 400.0;
    const ROW_H: f64 = 24.0;
    const TOP: f64 = 40.0;
    let lo = bars.iter().map(|b| b.1).fold(0.0f64, f64::min);
    let hi = bars.iter().map(|b| b.1).fold(0.0f64, f64::max);
    let span = if hi - lo > 0.0 { hi - lo } else { 1.0 };
    let x = |v: f64| LABEL_W + (v - lo) / span * PLOT_W;
    let height = TOP + ROW_H * bars.len() as f64 + 20.0;
    let width = LABEL_W + PLOT_W + 80.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="10" y="20" font-size="14">{}</text>"#,
        xml_escape(title)
    );
    for (i, (label, value)) in bars.iter().enumerate() {
        let y = TOP + ROW_H * i as f64;
        let (x0, x1) = (x(0.0).min(x(*value)), x(0.0).max(x(*value)));
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            LABEL_W - 6.0,
            y + 15.0,
            xml_escape(label)
        );
        let _ = writeln!(
            svg,
            r##"<rect x="{x0:.2}" y="{y}" width="{:.2}" height="{}" fill="#4c72b0"/>"##,
            x1 - x0,
            ROW_H - 6.0
        );
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{}">{value:.2}</text>"#, x1 + 4.0, y + 15.0);
    }
    let _ = writeln!(
        svg,
        r#"<line x1="{0:.2}" y1="{1}" x2="{0:.2}" y2="{2}" stroke="black"/>"#,
        x(0.0),
        TOP - 4.0,
        height - 16.0
    );
    svg.push_str("</svg>\n");
    svg
}
