use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::index::InvertedIndex;
use crate::corpus::{tokenize, Topic};
use crate::error::{Error, Result};
use crate::par;
use crate::scorer_io::{rank_by_score, RankedRun, ScoredDoc};

/// First-stage retrieval depth per topic.
pub const DEFAULT_DEPTH: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 0.9, b: 0.4 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        if !(k1 >= 0.0 && k1.is_finite()) {
            return Err(Error::Invalid(format!(
                "k1 must be a finite value >= 0, got {k1}"
            )));
        }
        if !(0.0..=1.0).contains(&b) {
            return Err(Error::Invalid(format!("b must lie in [0,1], got {b}")));
        }
        Ok(Bm25Params { k1, b })
    }
}

/// `ln(1 + (N - df + 0.5) / (df + 0.5))`, never negative.
pub fn idf(num_docs: usize, doc_freq: usize) -> f64 {
    let n = num_docs as f64;
    let df = doc_freq as f64;
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

/// Query terms with their multiplicities, in term order.
///
/// Every scoring path walks terms in this order so that accumulated and
/// direct scores agree bit for bit.
fn query_terms(tokens: &[String]) -> Vec<(&str, f64)> {
    let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
    for t in tokens {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    counts.into_iter().map(|(t, c)| (t, c as f64)).collect()
}

struct Scorer<'a> {
    index: &'a InvertedIndex,
    params: Bm25Params,
}

impl Scorer<'_> {
    #[inline]
    fn term(&self, idf: f64, tf: u32, doc: u32) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let avg = self.index.avg_doc_length();
        let rel_len = if avg > 0.0 {
            self.index.length_of(doc) as f64 / avg
        } else {
            1.0
        };
        let tf = tf as f64;
        idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * rel_len))
    }

    /// Dense score vector over all documents.
    fn accumulate(&self, tokens: &[String]) -> Vec<f64> {
        let mut acc = vec![0.0; self.index.num_docs()];
        for (term, qtf) in query_terms(tokens) {
            let postings = self.index.postings(term);
            if postings.is_empty() {
                continue;
            }
            let w = idf(self.index.num_docs(), postings.len());
            for p in postings {
                acc[p.doc as usize] += qtf * self.term(w, p.tf, p.doc);
            }
        }
        acc
    }
}

/// BM25 score of one document. Repeated query tokens count once per
/// occurrence.
pub fn bm25_score(
    index: &InvertedIndex,
    params: Bm25Params,
    query_tokens: &[String],
    doc_id: &str,
) -> Result<f64> {
    let doc = index
        .doc_number(doc_id)
        .ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))?;
    let scorer = Scorer { index, params };
    let mut score = 0.0;
    for (term, qtf) in query_terms(query_tokens) {
        let tf = index.term_freq(term, doc);
        if tf == 0 {
            continue;
        }
        score += qtf * scorer.term(idf(index.num_docs(), index.doc_freq(term)), tf, doc);
    }
    Ok(score)
}

pub(crate) fn score_all(index: &InvertedIndex, params: Bm25Params, tokens: &[String]) -> Vec<f64> {
    Scorer { index, params }.accumulate(tokens)
}

/// Top `depth` documents for the topic's query + description text.
///
/// Zero-score documents are never returned; ties go to the smaller doc_id.
pub fn search(
    index: &InvertedIndex,
    params: Bm25Params,
    topic: &Topic,
    depth: usize,
) -> Vec<ScoredDoc> {
    let tokens = tokenize(&topic.text()).tokens;
    search_tokens(index, params, &tokens, depth)
}

pub(crate) fn search_tokens(
    index: &InvertedIndex,
    params: Bm25Params,
    tokens: &[String],
    depth: usize,
) -> Vec<ScoredDoc> {
    if depth == 0 {
        return Vec::new();
    }
    let acc = score_all(index, params, tokens);
    // doc numbers follow doc_id order, so comparing numbers breaks ties by id
    let mut hits: Vec<(u32, f64)> = acc
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 0.0)
        .map(|(d, &s)| (d as u32, s))
        .collect();
    let cmp = |a: &(u32, f64), b: &(u32, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    if hits.len() > depth {
        hits.select_nth_unstable_by(depth - 1, cmp);
        hits.truncate(depth);
    }
    hits.sort_unstable_by(cmp);
    let out: Vec<ScoredDoc> = hits
        .into_iter()
        .map(|(d, s)| ScoredDoc::new(index.doc_id(d), s))
        .collect();
    debug_assert_eq!(out, rank_by_score(out.clone()));
    out
}

/// Runs [`search`] for every topic, one topic per task.
pub fn search_topics(
    index: &InvertedIndex,
    params: Bm25Params,
    topics: &[Topic],
    depth: usize,
    tag: &str,
) -> RankedRun {
    let lists = par::map(topics, |t| (t.topic_id, search(index, params, t, depth)));
    let mut run = RankedRun::new(tag);
    for (topic, docs) in lists {
        run.set_topic(topic, docs).expect("search output is ranked");
    }
    run
}
