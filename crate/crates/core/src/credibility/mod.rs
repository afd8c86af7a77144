//! Page credibility: readability, PageRank and CSS features, a random
//! forest over them, and an additive boost for listed credible sites.

mod css;
pub mod forest;
pub mod pagerank;
mod readability;

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{normalize_domain, Document};
use crate::error::{Error, Result};
use crate::par;
use crate::scorer_io::{RankedRun, ScoredDoc};

pub use css::{count_css_rules, count_rule_blocks};
pub use forest::{ForestModel, ForestParams};
pub use pagerank::{PageRank, PageRankClient, PageRankConfig, PageRankError};
pub use readability::{is_polysyllable, smog_counts, smog_from_counts, smog_index, syllables};

pub const N_FEATURES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CredibilityFeatures {
    pub smog: f64,
    pub pagerank: f64,
    #[serde(default)]
    pub pagerank_missing: bool,
    pub css_rule_count: u32,
}

impl CredibilityFeatures {
    /// `[smog, pagerank, css_rule_count]`, the classifier's input order.
    pub fn to_vector(&self) -> [f64; N_FEATURES] {
        [self.smog, self.pagerank, self.css_rule_count as f64]
    }
}

/// Features of one page; the PageRank is looked up by the caller.
pub fn extract_features(doc: &Document, pagerank: PageRank) -> CredibilityFeatures {
    CredibilityFeatures {
        smog: smog_index(&doc.text),
        pagerank: pagerank.value,
        pagerank_missing: pagerank.missing,
        css_rule_count: count_css_rules(&doc.html) as u32,
    }
}

/// Features for many documents: one batched PageRank lookup, then
/// per-document extraction in parallel.
pub fn extract_all(
    docs: &[&Document],
    pagerank: &PageRankClient,
) -> Result<Vec<CredibilityFeatures>> {
    let domains: Vec<String> = docs.iter().map(|d| d.domain.clone()).collect();
    let ranks = pagerank.fetch_many(&domains)?;
    Ok(par::map(docs, |d| {
        extract_features(d, ranks[&normalize_domain(&d.domain)])
    }))
}

/// 1–5 credibility ratings become binary: 4 and 5 are credible.
pub fn binarize(raw_score: u8) -> Result<bool> {
    match raw_score {
        1..=3 => Ok(false),
        4 | 5 => Ok(true),
        other => Err(Error::Invalid(format!(
            "credibility score {other} outside 1-5"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPage {
    pub url: String,
    pub topic: String,
    pub features: CredibilityFeatures,
    pub raw_score: u8,
    pub label: bool,
}

impl LabeledPage {
    pub fn new(
        url: impl Into<String>,
        topic: impl Into<String>,
        features: CredibilityFeatures,
        raw_score: u8,
    ) -> Result<Self> {
        Ok(LabeledPage {
            url: url.into(),
            topic: topic.into(),
            features,
            raw_score,
            label: binarize(raw_score)?,
        })
    }
}

/// One row of a labelled credibility CSV (`url,topic,score`), optionally
/// with precomputed `smog,pagerank,css_rule_count` columns.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct LabeledRow {
    pub url: String,
    pub topic: String,
    pub score: u8,
    pub smog: Option<f64>,
    pub pagerank: Option<f64>,
    pub css_rule_count: Option<u32>,
}

impl LabeledRow {
    pub fn features(&self) -> Option<CredibilityFeatures> {
        Some(CredibilityFeatures {
            smog: self.smog?,
            pagerank: self.pagerank?,
            pagerank_missing: false,
            css_rule_count: self.css_rule_count?,
        })
    }
}

pub fn read_labeled_csv(path: &Path) -> Result<Vec<LabeledRow>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, rec) in reader.deserialize::<LabeledRow>().enumerate() {
        // header is line 1
        let row = rec.map_err(|e| Error::parse(path, i + 2, e.to_string()))?;
        binarize(row.score).map_err(|e| Error::parse(path, i + 2, e.to_string()))?;
        rows.push(row);
    }
    Ok(rows)
}

/// Trains the credibility forest on labelled pages.
pub fn train_forest(pages: &[LabeledPage], params: ForestParams, seed: u64) -> Result<ForestModel> {
    let x: Vec<Vec<f64>> = pages
        .iter()
        .map(|p| p.features.to_vector().to_vec())
        .collect();
    let y: Vec<bool> = pages.iter().map(|p| p.label).collect();
    forest::train(&x, &y, params, seed)
}

/// Probability-like credibility: the fraction of trees voting credible.
pub fn predict_credibility(model: &ForestModel, features: &CredibilityFeatures) -> f64 {
    model.predict(&features.to_vector())
}

/// Curated credible domains, normalized like document domains.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CredibleSiteList {
    domains: BTreeSet<String>,
}

impl CredibleSiteList {
    pub fn from_domains<I, S>(domains: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        CredibleSiteList {
            domains: domains
                .into_iter()
                .map(|d| normalize_domain(d.as_ref()))
                .filter(|d| !d.is_empty())
                .collect(),
        }
    }

    /// One domain per line; `#` starts a comment.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_domains(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or_default().trim()),
        ))
    }

    pub fn contains(&self, domain: &str) -> bool {
        self.domains.contains(&normalize_domain(domain))
    }

    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }
}

/// Adds 1 to the score of pages on listed sites.
pub fn boost_credible(score: f64, domain: &str, sites: &CredibleSiteList) -> f64 {
    if sites.contains(domain) {
        score + 1.0
    } else {
        score
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMode {
    /// Forest score only.
    ClassifierOnly,
    /// Forest score plus the credible-site boost.
    ClassifierPlusSites,
}

/// Re-orders each topic's candidates by credibility, descending, ties by
/// doc_id. In [`RankMode::ClassifierPlusSites`] listed pages come first.
///
/// `scores` maps doc_id to forest output and `domains` doc_id to domain;
/// every candidate must appear in both.
pub fn rank_credibility(
    candidates: &RankedRun,
    scores: &HashMap<String, f64>,
    domains: &HashMap<String, String>,
    sites: &CredibleSiteList,
    mode: RankMode,
    tag: &str,
) -> Result<RankedRun> {
    if mode == RankMode::ClassifierPlusSites && sites.is_empty() {
        return Err(Error::Invalid("credible-site list is empty".into()));
    }
    let mut run = RankedRun::new(tag);
    for (topic, docs) in candidates.iter() {
        let mut ranked = docs
            .iter()
            .map(|d| {
                let base = *scores
                    .get(&d.doc_id)
                    .ok_or_else(|| Error::UnknownDocument(d.doc_id.clone()))?;
                let listed = match mode {
                    RankMode::ClassifierOnly => false,
                    RankMode::ClassifierPlusSites => {
                        let domain = domains
                            .get(&d.doc_id)
                            .ok_or_else(|| Error::UnknownDocument(d.doc_id.clone()))?;
                        sites.contains(domain)
                    }
                };
                let score = if listed { base + 1.0 } else { base };
                Ok((listed, ScoredDoc::new(d.doc_id.clone(), score)))
            })
            .collect::<Result<Vec<_>>>()?;
        // A listed page scored 0 ties an unlisted page scored 1; listing wins.
        ranked.sort_by(|(la, a), (lb, b)| {
            lb.cmp(la)
                .then_with(|| b.score.total_cmp(&a.score))
                .then_with(|| a.doc_id.cmp(&b.doc_id))
        });
        run.set_topic(topic, ranked.into_iter().map(|(_, d)| d).collect())?;
    }
    Ok(run)
}
