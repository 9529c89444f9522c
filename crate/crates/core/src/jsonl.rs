//! Line-delimited JSON helpers shared by the sidecar readers and writers.

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{Error, Result};

/// Parses one record per non-blank line. `source` names the input in errors.
pub fn parse<T: DeserializeOwned>(text: &str, source: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| serde_json::from_str(line).map_err(|e| Error::json(format!("{source} line {}", i + 1), e)))
        .collect()
}

/// Compact serialization, one record per line, trailing newline included.
pub fn to_string<T: Serialize>(records: &[T]) -> Result<String> {
    let mut out = String::new();
    for record in records {
        let line = serde_json::to_string(record).map_err(|e| Error::json("serializing record", e))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}
