use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stance {
    Helpful,
    Unhelpful,
}

/// A health question. Automatic runs only ever read `query` and `description`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub topic_id: u32,
    pub query: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub narrative: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stance: Option<Stance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<String>,
}

impl Topic {
    pub fn new(topic_id: u32, query: impl Into<String>, description: impl Into<String>) -> Self {
        Topic {
            topic_id,
            query: query.into(),
            description: description.into(),
            narrative: None,
            stance: None,
            evidence: None,
        }
    }

    /// Retrieval text: query and description joined by a space.
    pub fn text(&self) -> String {
        format!("{} {}", self.query, self.description)
    }

    pub(crate) fn validate(&self) -> std::result::Result<(), &'static str> {
        if self.query.trim().is_empty() {
            return Err("query required");
        }
        if self.description.trim().is_empty() {
            return Err("description required");
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct RawTopic {
    topic_id: u32,
    #[serde(default)]
    query: String,
    #[serde(default)]
    description: String,
    narrative: Option<String>,
    stance: Option<Stance>,
    evidence: Option<String>,
}

/// Parses one topic per JSONL line, sorted by `topic_id`.
pub fn load_topics(path: &Path) -> Result<Vec<Topic>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut topics = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let t: RawTopic =
            serde_json::from_str(line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        let topic = Topic {
            topic_id: t.topic_id,
            query: t.query,
            description: t.description,
            narrative: t.narrative,
            stance: t.stance,
            evidence: t.evidence,
        };
        topic.validate().map_err(|m| Error::parse(path, i + 1, m))?;
        topics.push(topic);
    }
    topics.sort_by_key(|t| t.topic_id);
    if let Some(w) = topics.windows(2).find(|w| w[0].topic_id == w[1].topic_id) {
        return Err(Error::Invalid(format!(
            "duplicate topic_id {}",
            w[0].topic_id
        )));
    }
    Ok(topics)
}
