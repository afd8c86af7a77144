use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

impl ScoredDoc {
    pub fn new(doc_id: impl Into<String>, score: f64) -> Self {
        ScoredDoc {
            doc_id: doc_id.into(),
            score,
        }
    }
}

/// Sorts by descending score, ascending doc_id on ties.
pub fn rank_by_score(mut docs: Vec<ScoredDoc>) -> Vec<ScoredDoc> {
    docs.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
    });
    docs
}

/// Per-topic ranked lists. Rank is the 1-based list position.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RankedRun {
    pub tag: String,
    topics: BTreeMap<u32, Vec<ScoredDoc>>,
}

impl RankedRun {
    pub fn new(tag: impl Into<String>) -> Self {
        RankedRun {
            tag: tag.into(),
            topics: BTreeMap::new(),
        }
    }

    /// Installs the list for `topic`, replacing any previous one.
    ///
    /// Fails if scores increase down the list, a score is NaN or a doc_id
    /// repeats.
    pub fn set_topic(&mut self, topic: u32, docs: Vec<ScoredDoc>) -> Result<()> {
        check_ranking(&docs).map_err(|m| Error::Invalid(format!("topic {topic}: {m}")))?;
        self.topics.insert(topic, docs);
        Ok(())
    }

    /// Installs `docs` after sorting them with [`rank_by_score`].
    pub fn set_topic_unsorted(&mut self, topic: u32, docs: Vec<ScoredDoc>) -> Result<()> {
        self.set_topic(topic, rank_by_score(docs))
    }

    pub fn topic(&self, topic: u32) -> Option<&[ScoredDoc]> {
        self.topics.get(&topic).map(Vec::as_slice)
    }

    pub fn topic_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.topics.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &[ScoredDoc])> + '_ {
        self.topics.iter().map(|(&t, d)| (t, d.as_slice()))
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    pub fn num_topics(&self) -> usize {
        self.topics.len()
    }

    /// (rank, score) of `doc_id` within `topic`.
    pub fn rank_of(&self, topic: u32, doc_id: &str) -> Option<(usize, f64)> {
        self.topics
            .get(&topic)?
            .iter()
            .position(|d| d.doc_id == doc_id)
            .map(|i| (i + 1, self.topics[&topic][i].score))
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    /// TREC six-column text, topics ascending.
    pub fn to_trec_string(&self) -> String {
        let mut out = String::new();
        for (topic, docs) in &self.topics {
            for (i, d) in docs.iter().enumerate() {
                writeln!(
                    out,
                    "{topic} Q0 {} {} {:.6} {}",
                    d.doc_id,
                    i + 1,
                    d.score,
                    self.tag
                )
                .unwrap();
            }
        }
        out
    }

    pub fn from_trec_str(text: &str, origin: &Path) -> Result<Self> {
        let mut run: Option<RankedRun> = None;
        let mut lists: BTreeMap<u32, (Vec<ScoredDoc>, HashSet<String>)> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let err = |m: String| Error::parse(origin, lineno, m);
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 6 {
                return Err(err(format!("expected 6 columns, found {}", cols.len())));
            }
            let topic: u32 = cols[0]
                .parse()
                .map_err(|_| err(format!("bad topic id {:?}", cols[0])))?;
            let doc_id = cols[2];
            let rank: usize = cols[3]
                .parse()
                .map_err(|_| err(format!("bad rank {:?}", cols[3])))?;
            let score: f64 = cols[4]
                .parse()
                .map_err(|_| err(format!("bad score {:?}", cols[4])))?;
            if score.is_nan() {
                return Err(err("score is NaN".into()));
            }
            let tag = cols[5];
            match &run {
                None => run = Some(RankedRun::new(tag)),
                Some(r) if r.tag != tag => {
                    return Err(err(format!("tag {tag:?} differs from {:?}", r.tag)))
                }
                Some(_) => {}
            }

            let (docs, seen) = lists.entry(topic).or_default();
            let expected = docs.len() + 1;
            if rank > expected {
                return Err(err(format!(
                    "rank gap at line {lineno}: expected rank {expected}, found {rank}"
                )));
            }
            if rank < expected {
                return Err(err(format!(
                    "rank out of order at line {lineno}: expected rank {expected}, found {rank}"
                )));
            }
            if let Some(prev) = docs.last() {
                if score > prev.score {
                    return Err(err(format!(
                        "score/rank disagreement at line {lineno}: {score} at rank {rank} exceeds {} at rank {}",
                        prev.score,
                        rank - 1
                    )));
                }
            }
            if !seen.insert(doc_id.to_string()) {
                return Err(err(format!(
                    "duplicate doc {doc_id} for topic {topic} at line {lineno}"
                )));
            }
            docs.push(ScoredDoc::new(doc_id, score));
        }
        let mut run = run.unwrap_or_default();
        run.topics = lists.into_iter().map(|(t, (d, _))| (t, d)).collect();
        Ok(run)
    }
}

fn check_ranking(docs: &[ScoredDoc]) -> std::result::Result<(), String> {
    let mut seen = HashSet::with_capacity(docs.len());
    for (i, d) in docs.iter().enumerate() {
        if d.score.is_nan() {
            return Err(format!("NaN score for {}", d.doc_id));
        }
        if i > 0 && d.score > docs[i - 1].score {
            return Err(format!("score increases at rank {}", i + 1));
        }
        if !seen.insert(d.doc_id.as_str()) {
            return Err(format!("duplicate doc {}", d.doc_id));
        }
    }
    Ok(())
}

/// Parses a TREC run file: `<topic> Q0 <doc> <rank> <score> <tag>`.
///
/// Ranks must run 1..n per topic in file order with non-increasing scores.
pub fn load_run(path: &Path) -> Result<RankedRun> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RankedRun::from_trec_str(&text, path)
}

pub fn write_run(run: &RankedRun, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, run.to_trec_string()).map_err(|e| Error::io(path, e))
}
