//! Known-item grid search over BM25 parameters.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bm25::{score_all, Bm25Params};
use super::index::InvertedIndex;
use crate::corpus::{tokenize, Topic};
use crate::error::{Error, Result};
use crate::par;

/// A generated topic paired with the one document it was generated from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SilverTopic {
    pub topic: Topic,
    pub target_doc_id: String,
}

#[derive(Deserialize)]
struct RawSilver {
    topic_id: u32,
    #[serde(default)]
    query: String,
    #[serde(default)]
    description: String,
    target_doc_id: String,
}

pub fn load_silver(path: &Path) -> Result<Vec<SilverTopic>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawSilver =
            serde_json::from_str(line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        let topic = Topic::new(raw.topic_id, raw.query, raw.description);
        topic.validate().map_err(|m| Error::parse(path, i + 1, m))?;
        out.push(SilverTopic {
            topic,
            target_doc_id: raw.target_doc_id,
        });
    }
    Ok(out)
}

/// k1 ∈ {0.1, 0.3, …, 2.9, 3.0} × b ∈ {0.0, 0.1, …, 1.0}, k1-major.
pub fn default_grid() -> Vec<Bm25Params> {
    let mut k1s: Vec<f64> = (0..15).map(|i| (2 * i + 1) as f64 / 10.0).collect();
    k1s.push(3.0);
    let bs: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    k1s.iter()
        .flat_map(|&k1| bs.iter().map(move |&b| Bm25Params { k1, b }))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub params: Bm25Params,
    pub mrr: f64,
}

/// Picks the grid point with the highest MRR of silver targets.
///
/// A target outside the top `depth`, or with score 0, contributes a
/// reciprocal rank of 0. Equal MRRs keep the earliest grid point.
pub fn tune_params(
    index: &InvertedIndex,
    silver: &[SilverTopic],
    grid: &[Bm25Params],
    depth: usize,
) -> Result<TuneResult> {
    if grid.is_empty() {
        return Err(Error::Invalid("empty parameter grid".into()));
    }
    if silver.is_empty() {
        return Err(Error::Invalid("empty silver topic set".into()));
    }
    let queries = silver
        .iter()
        .map(|s| {
            let target = index
                .doc_number(&s.target_doc_id)
                .ok_or_else(|| Error::UnknownDocument(s.target_doc_id.clone()))?;
            Ok((tokenize(&s.topic.text()).tokens, target))
        })
        .collect::<Result<Vec<_>>>()?;

    let mrrs = par::map(grid, |&params| {
        let total: f64 = queries
            .iter()
            .map(|(tokens, target)| {
                reciprocal_rank(&score_all(index, params, tokens), *target, depth)
            })
            .sum();
        total / queries.len() as f64
    });

    let mut best = 0;
    for (i, &m) in mrrs.iter().enumerate() {
        if m > mrrs[best] {
            best = i;
        }
    }
    Ok(TuneResult {
        params: grid[best],
        mrr: mrrs[best],
    })
}

/// Rank under the search ordering (score desc, doc number asc), without sorting.
fn reciprocal_rank(scores: &[f64], target: u32, depth: usize) -> f64 {
    let t = scores[target as usize];
    if t <= 0.0 {
        return 0.0;
    }
    let ahead = scores
        .iter()
        .enumerate()
        .filter(|&(d, &s)| s > t || (s == t && (d as u32) < target))
        .count();
    let rank = ahead + 1;
    if rank > depth {
        0.0
    } else {
        1.0 / rank as f64
    }
}
