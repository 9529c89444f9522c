use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One book of one author.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub author_id: String,
    pub book_id: String,
    pub text: String,
    pub provenance: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestWarning {
    /// Stripping was requested but neither marker line was present.
    MarkersMissing,
    /// Only one marker line was found (or END preceded START); the full text was kept.
    MalformedBoilerplate,
}

#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub document: Document,
    pub warning: Option<IngestWarning>,
}

fn is_marker(line: &str, kind: &str) -> bool {
    let line = line.trim_start();
    line.starts_with("***") && line.to_ascii_uppercase().contains(kind)
}

/// Builds a [`Document`] from raw book text.
///
/// Line endings are normalized to `\n`. With `strip_boilerplate`, everything
/// up to and including the `*** START OF` line and from the `*** END OF` line
/// onwards is removed.
pub fn ingest_text(
    raw: &str,
    author_id: &str,
    book_id: &str,
    provenance: &str,
    strip_boilerplate: bool,
) -> Result<IngestOutcome> {
    let normalized = raw.replace("\r\n", "\n").replace('\r', "\n");
    let mut warning = None;

    let text = if strip_boilerplate {
        let lines: Vec<&str> = normalized.split('\n').collect();
        let start = lines.iter().position(|l| is_marker(l, "START OF"));
        let end = lines.iter().rposition(|l| is_marker(l, "END OF"));
        match (start, end) {
            (Some(s), Some(e)) if s < e => lines[s + 1..e].join("\n"),
            (None, None) => {
                warning = Some(IngestWarning::MarkersMissing);
                normalized
            }
            _ => {
                warning = Some(IngestWarning::MalformedBoilerplate);
                normalized
            }
        }
    } else {
        normalized
    };

    if text.trim().is_empty() {
        return Err(Error::EmptyDocument(format!("{author_id}/{book_id}")));
    }
    if let Some(w) = warning {
        log::warn!("{author_id}/{book_id}: {w:?}, keeping full text");
    }

    Ok(IngestOutcome {
        document: Document {
            author_id: author_id.to_string(),
            book_id: book_id.to_string(),
            text,
            provenance: provenance.to_string(),
        },
        warning,
    })
}
