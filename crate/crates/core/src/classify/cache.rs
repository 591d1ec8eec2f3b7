//! JSONL cache of classifier verdicts so expensive client runs can resume.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::EthicalConcernCategory;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub post_id: String,
    pub is_concern: bool,
    #[serde(default)]
    pub confidence: Option<f64>,
    #[serde(default)]
    pub category: Option<EthicalConcernCategory>,
    pub source: String,
}

/// Reads a label cache. Unparseable lines are skipped with a warning; the
/// last record for a post id wins.
pub fn read_labels<R: BufRead>(reader: R) -> Result<BTreeMap<String, LabelRecord>> {
    let mut out = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::parse("label cache", e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<LabelRecord>(&line) {
            Ok(r) => {
                out.insert(r.post_id.clone(), r);
            }
            Err(e) => log::warn!("label cache line {}: {e}; ignoring", i + 1),
        }
    }
    Ok(out)
}

/// Writes records sorted by post id.
pub fn write_labels<W: Write>(mut w: W, labels: &BTreeMap<String, LabelRecord>) -> Result<()> {
    for r in labels.values() {
        let line = serde_json::to_string(r).map_err(|e| Error::parse("label cache", e))?;
        writeln!(w, "{line}").map_err(|e| Error::io("<labels>", e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_skip_garbage() {
        let mut m = BTreeMap::new();
        m.insert(
            "a".to_string(),
            LabelRecord {
                post_id: "a".into(),
                is_concern: true,
                confidence: Some(1.0),
                category: Some(EthicalConcernCategory::HarmfulAdvertising),
                source: "stub".into(),
            },
        );
        let mut buf = Vec::new();
        write_labels(&mut buf, &m).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\"Harmful Advertising\""));
        let with_garbage = format!("{text}{{broken\n");
        assert_eq!(read_labels(with_garbage.as_bytes()).unwrap(), m);
    }
}
