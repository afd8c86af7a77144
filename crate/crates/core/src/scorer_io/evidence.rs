use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvidenceLabel {
    Supports,
    Dissuades,
    Neutral,
}

/// One claim-check verdict for one evidence passage of a document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceJudgment {
    pub topic_id: u32,
    pub doc_id: String,
    pub evidence_index: u32,
    pub label: EvidenceLabel,
    pub confidence: f64,
}

impl EvidenceJudgment {
    fn check(&self) -> std::result::Result<(), String> {
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(format!("confidence {} outside [0,1]", self.confidence));
        }
        if self.evidence_index == 0 {
            return Err("evidence_index must be >= 1".into());
        }
        Ok(())
    }
}

/// Loads claim-check judgments, one JSON object per line.
pub fn load_evidence(path: &Path) -> Result<Vec<EvidenceJudgment>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut keys = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let j: EvidenceJudgment =
            serde_json::from_str(line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        j.check().map_err(|m| Error::parse(path, i + 1, m))?;
        if !keys.insert((j.topic_id, j.doc_id.clone(), j.evidence_index)) {
            return Err(Error::parse(
                path,
                i + 1,
                format!(
                    "duplicate judgment ({}, {}, {})",
                    j.topic_id, j.doc_id, j.evidence_index
                ),
            ));
        }
        out.push(j);
    }
    Ok(out)
}

pub fn write_evidence(judgments: &[EvidenceJudgment], path: &Path) -> Result<()> {
    let mut out = String::new();
    for j in judgments {
        out.push_str(&serde_json::to_string(j)?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Groups judgments by (topic_id, doc_id), keeping file order within a group.
pub fn group_by_document(
    judgments: &[EvidenceJudgment],
) -> BTreeMap<(u32, String), Vec<EvidenceJudgment>> {
    let mut groups: BTreeMap<(u32, String), Vec<EvidenceJudgment>> = BTreeMap::new();
    for j in judgments {
        groups
            .entry((j.topic_id, j.doc_id.clone()))
            .or_default()
            .push(j.clone());
    }
    groups
}
