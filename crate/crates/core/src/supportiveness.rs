//! Stance re-ranking from claim-check evidence.
//!
//! Each document's evidence verdicts collapse into one of five score classes:
//!
//! | evidence present            | label          | score                    |
//! |-----------------------------|----------------|--------------------------|
//! | supports (± neutral)        | `Supports`     | max supporting conf.     |
//! | dissuades (± neutral)       | `Dissuades`    | max dissuading conf.     |
//! | neutral only                | `NeutralOnly`  | 1 − mean neutral conf.   |
//! | supports and dissuades      | `Mixed`        | −2                       |
//! | nothing                     | `Void`         | −3                       |
//!
//! A per-topic majority vote over the top-k documents of a usefulness
//! ranking decides which side is correct; documents on the other side have
//! their score negated.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::credibility::CredibleSiteList;
use crate::error::{Error, Result};
use crate::par;
use crate::scorer_io::{
    group_by_document, rank_by_score, EvidenceJudgment, EvidenceLabel, RankedRun, ScoredDoc,
};

pub const MIXED_SCORE: f64 = -2.0;
pub const VOID_SCORE: f64 = -3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocLabel {
    Supports,
    Dissuades,
    NeutralOnly,
    Mixed,
    Void,
}

impl DocLabel {
    fn side(self) -> Option<Side> {
        match self {
            DocLabel::Supports => Some(Side::Supports),
            DocLabel::Dissuades => Some(Side::Dissuades),
            _ => None,
        }
    }
}

/// The two decidable stances of a treatment claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Supports,
    Dissuades,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Supports => Side::Dissuades,
            Side::Dissuades => Side::Supports,
        }
    }
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "supports" => Ok(Side::Supports),
            "dissuades" => Ok(Side::Dissuades),
            other => Err(Error::Invalid(format!("unknown stance {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocStance {
    pub topic_id: u32,
    pub doc_id: String,
    pub label: DocLabel,
    /// Unsigned class score.
    pub confidence: f64,
    /// Signed score used for ranking.
    pub ranking_score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicStance {
    pub topic_id: u32,
    pub decided: Side,
    pub support_votes: usize,
    pub dissuade_votes: usize,
    pub tie_broken_by_credible_sites: bool,
}

/// Collapses the evidence of one (topic, doc) pair into a [`DocStance`].
///
/// Neutral verdicts are ignored when deciding between supports, dissuades
/// and mixed; they only matter when nothing else is present.
pub fn aggregate_document(
    topic_id: u32,
    doc_id: &str,
    judgments: &[EvidenceJudgment],
) -> Result<DocStance> {
    if let Some(j) = judgments
        .iter()
        .find(|j| j.topic_id != topic_id || j.doc_id != doc_id)
    {
        return Err(Error::Invalid(format!(
            "judgment for ({}, {}) aggregated under ({topic_id}, {doc_id})",
            j.topic_id, j.doc_id
        )));
    }
    let max_of = |label| {
        judgments
            .iter()
            .filter(|j| j.label == label)
            .map(|j| j.confidence)
            .fold(None, |m: Option<f64>, c| Some(m.map_or(c, |m| m.max(c))))
    };
    let supports = max_of(EvidenceLabel::Supports);
    let dissuades = max_of(EvidenceLabel::Dissuades);
    let neutral: Vec<f64> = judgments
        .iter()
        .filter(|j| j.label == EvidenceLabel::Neutral)
        .map(|j| j.confidence)
        .collect();

    let (label, confidence) = match (supports, dissuades) {
        (Some(_), Some(_)) => (DocLabel::Mixed, MIXED_SCORE),
        (Some(s), None) => (DocLabel::Supports, s),
        (None, Some(d)) => (DocLabel::Dissuades, d),
        (None, None) if !neutral.is_empty() => {
            // sort first so the mean does not depend on input order
            let mut sorted = neutral;
            sorted.sort_by(f64::total_cmp);
            let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
            (DocLabel::NeutralOnly, 1.0 - mean)
        }
        (None, None) => (DocLabel::Void, VOID_SCORE),
    };
    Ok(DocStance {
        topic_id,
        doc_id: doc_id.to_string(),
        label,
        confidence,
        ranking_score: confidence,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteConfig {
    /// Number of top usefulness-ranked documents that vote.
    pub k: usize,
    /// Outcome when votes and credible-site recount are both tied.
    pub tie_default: Side,
}

impl Default for VoteConfig {
    fn default() -> Self {
        VoteConfig {
            k: 10,
            tie_default: Side::Dissuades,
        }
    }
}

/// Majority vote over the labelled documents among the top `k` of
/// `usefulness`.
///
/// A tie is recounted over documents on credible domains only; if that is
/// tied too, `tie_default` wins. When no top-k document carries a label the
/// vote falls back to every labelled document of the topic.
pub fn decide_topic_stance(
    topic_id: u32,
    doc_stances: &[DocStance],
    usefulness: &[ScoredDoc],
    config: VoteConfig,
    credible: &CredibleSiteList,
    doc_domains: &HashMap<String, String>,
) -> Result<TopicStance> {
    if config.k == 0 {
        return Err(Error::Invalid("vote k must be >= 1".into()));
    }
    let sides: HashMap<&str, Side> = doc_stances
        .iter()
        .filter_map(|d| d.label.side().map(|s| (d.doc_id.as_str(), s)))
        .collect();

    let mut pool: Vec<(&str, Side)> = usefulness
        .iter()
        .take(config.k)
        .filter_map(|d| {
            sides
                .get(d.doc_id.as_str())
                .map(|&s| (d.doc_id.as_str(), s))
        })
        .collect();
    if pool.is_empty() {
        pool = doc_stances
            .iter()
            .filter_map(|d| d.label.side().map(|s| (d.doc_id.as_str(), s)))
            .collect();
    }
    if pool.is_empty() {
        return Err(Error::StanceUndecidable(topic_id));
    }

    let count = |docs: &mut dyn Iterator<Item = Side>| {
        docs.fold((0, 0), |(s, d), side| match side {
            Side::Supports => (s + 1, d),
            Side::Dissuades => (s, d + 1),
        })
    };
    let (support_votes, dissuade_votes) = count(&mut pool.iter().map(|p| p.1));
    let mut tie_broken = false;
    let decided = if support_votes > dissuade_votes {
        Side::Supports
    } else if dissuade_votes > support_votes {
        Side::Dissuades
    } else {
        let on_credible = |id: &str| doc_domains.get(id).is_some_and(|d| credible.contains(d));
        let (cs, cd) = count(&mut pool.iter().filter(|p| on_credible(p.0)).map(|p| p.1));
        if cs != cd {
            tie_broken = true;
            if cs > cd {
                Side::Supports
            } else {
                Side::Dissuades
            }
        } else {
            config.tie_default
        }
    };
    Ok(TopicStance {
        topic_id,
        decided,
        support_votes,
        dissuade_votes,
        tie_broken_by_credible_sites: tie_broken,
    })
}

/// Negates the score of every document on the losing side.
pub fn apply_stance(doc_stances: &[DocStance], stance: &TopicStance) -> Vec<DocStance> {
    doc_stances
        .iter()
        .map(|d| {
            let mut d = d.clone();
            d.ranking_score = match d.label.side() {
                Some(side) if side == stance.decided => d.confidence,
                Some(_) => -d.confidence,
                None => d.confidence,
            };
            d
        })
        .collect()
}

/// Descending ranking score, ascending doc_id on ties.
pub fn rank_supportiveness(doc_stances: &[DocStance]) -> Vec<ScoredDoc> {
    rank_by_score(
        doc_stances
            .iter()
            .map(|d| ScoredDoc::new(d.doc_id.clone(), d.ranking_score))
            .collect(),
    )
}

/// Output of [`rerank_supportiveness`].
#[derive(Debug, Clone)]
pub struct SupportRerank {
    pub run: RankedRun,
    /// Decided stance per topic; topics without any labelled document are
    /// absent and their ranking keeps unsigned scores.
    pub stances: BTreeMap<u32, TopicStance>,
}

/// Full supportiveness stage for every topic.
///
/// The candidate set of a topic is every document in the usefulness run
/// plus every document with evidence; candidates without evidence are
/// `Void`.
pub fn rerank_supportiveness(
    judgments: &[EvidenceJudgment],
    usefulness: &RankedRun,
    doc_domains: &HashMap<String, String>,
    credible: &CredibleSiteList,
    config: VoteConfig,
    tag: &str,
) -> Result<SupportRerank> {
    let groups = group_by_document(judgments);
    let mut candidates: BTreeMap<u32, BTreeSet<String>> = BTreeMap::new();
    for (topic, docs) in usefulness.iter() {
        candidates
            .entry(topic)
            .or_default()
            .extend(docs.iter().map(|d| d.doc_id.clone()));
    }
    for (topic, doc) in groups.keys() {
        candidates.entry(*topic).or_default().insert(doc.clone());
    }
    let topics: Vec<(u32, Vec<String>)> = candidates
        .into_iter()
        .map(|(t, d)| (t, d.into_iter().collect()))
        .collect();

    let per_topic = par::try_map(&topics, |(topic, docs)| {
        let stances = docs
            .iter()
            .map(|doc| {
                let js = groups
                    .get(&(*topic, doc.clone()))
                    .map(Vec::as_slice)
                    .unwrap_or(&[]);
                aggregate_document(*topic, doc, js)
            })
            .collect::<Result<Vec<_>>>()?;
        let ranking = usefulness.topic(*topic).unwrap_or(&[]);
        let (finals, decided) =
            match decide_topic_stance(*topic, &stances, ranking, config, credible, doc_domains) {
                Ok(s) => (apply_stance(&stances, &s), Some(s)),
                Err(Error::StanceUndecidable(_)) => {
                    log::warn!(
                        "topic {topic}: no supporting or dissuading evidence, scores left unsigned"
                    );
                    (stances, None)
                }
                Err(e) => return Err(e),
            };
        Ok((*topic, rank_supportiveness(&finals), decided))
    })?;

    let mut run = RankedRun::new(tag);
    let mut stances = BTreeMap::new();
    for (topic, ranked, decided) in per_topic {
        run.set_topic(topic, ranked)?;
        if let Some(s) = decided {
            stances.insert(topic, s);
        }
    }
    Ok(SupportRerank { run, stances })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn j(doc: &str, idx: u32, label: EvidenceLabel, c: f64) -> EvidenceJudgment {
        EvidenceJudgment {
            topic_id: 1,
            doc_id: doc.into(),
            evidence_index: idx,
            label,
            confidence: c,
        }
    }
    use EvidenceLabel::{Dissuades as D, Neutral as N, Supports as S};

    fn stance(doc: &str, label: DocLabel, c: f64) -> DocStance {
        DocStance {
            topic_id: 1,
            doc_id: doc.into(),
            label,
            confidence: c,
            ranking_score: c,
        }
    }

    #[test]
    fn supports_takes_max_and_ignores_neutral() {
        let d = aggregate_document(
            1,
            "d",
            &[j("d", 1, S, 0.7), j("d", 2, S, 0.9), j("d", 3, N, 0.5)],
        )
        .unwrap();
        assert_eq!(d.label, DocLabel::Supports);
        assert_eq!(d.confidence, 0.9);
    }

    #[test]
    fn both_sides_is_mixed() {
        let d = aggregate_document(1, "d", &[j("d", 1, S, 0.8), j("d", 2, D, 0.6)]).unwrap();
        assert_eq!(
            (d.label, d.confidence, d.ranking_score),
            (DocLabel::Mixed, -2.0, -2.0)
        );
    }

    #[test]
    fn neutral_only_is_one_minus_mean() {
        let d = aggregate_document(1, "d", &[j("d", 1, N, 0.2), j("d", 2, N, 0.6)]).unwrap();
        assert_eq!(d.label, DocLabel::NeutralOnly);
        assert!((d.confidence - 0.6).abs() < 1e-12);
    }

    #[test]
    fn nothing_is_void() {
        let d = aggregate_document(1, "d", &[]).unwrap();
        assert_eq!((d.label, d.confidence), (DocLabel::Void, -3.0));
    }

    #[test]
    fn foreign_judgment_is_error() {
        assert!(aggregate_document(1, "d", &[j("e", 1, S, 0.5)]).is_err());
    }

    fn ranking(ids: &[&str]) -> Vec<ScoredDoc> {
        ids.iter()
            .enumerate()
            .map(|(i, d)| ScoredDoc::new(*d, -(i as f64)))
            .collect()
    }

    #[test]
    fn strict_majority() {
        let st = [
            stance("a", DocLabel::Supports, 0.5),
            stance("b", DocLabel::Supports, 0.5),
            stance("c", DocLabel::Dissuades, 0.5),
        ];
        let t = decide_topic_stance(
            1,
            &st,
            &ranking(&["a", "b", "c"]),
            VoteConfig::default(),
            &CredibleSiteList::default(),
            &HashMap::new(),
        )
        .unwrap();
        assert_eq!(
            (t.decided, t.support_votes, t.dissuade_votes),
            (Side::Supports, 2, 1)
        );
        assert!(!t.tie_broken_by_credible_sites);
    }

    #[test]
    fn tie_goes_to_credible_side() {
        let st = [
            stance("a", DocLabel::Supports, 0.5),
            stance("b", DocLabel::Dissuades, 0.5),
        ];
        let domains: HashMap<String, String> = [
            ("a".into(), "blog.net".into()),
            ("b".into(), "nih.gov".into()),
        ]
        .into();
        let sites = CredibleSiteList::from_domains(["nih.gov"]);
        let t = decide_topic_stance(
            1,
            &st,
            &ranking(&["a", "b"]),
            VoteConfig::default(),
            &sites,
            &domains,
        )
        .unwrap();
        assert_eq!(t.decided, Side::Dissuades);
        assert!(t.tie_broken_by_credible_sites);

        let swapped: HashMap<String, String> = [
            ("a".into(), "nih.gov".into()),
            ("b".into(), "blog.net".into()),
        ]
        .into();
        let t = decide_topic_stance(
            1,
            &st,
            &ranking(&["a", "b"]),
            VoteConfig::default(),
            &sites,
            &swapped,
        )
        .unwrap();
        assert_eq!(t.decided, Side::Supports);
        assert!(t.tie_broken_by_credible_sites);
    }

    #[test]
    fn uncredible_tie_defaults() {
        let st = [
            stance("a", DocLabel::Supports, 0.5),
            stance("b", DocLabel::Dissuades, 0.5),
        ];
        let empty = CredibleSiteList::default();
        let t = decide_topic_stance(
            1,
            &st,
            &ranking(&["a", "b"]),
            VoteConfig::default(),
            &empty,
            &HashMap::new(),
        )
        .unwrap();
        assert_eq!(t.decided, Side::Dissuades);
        assert!(!t.tie_broken_by_credible_sites);
        let cfg = VoteConfig {
            k: 10,
            tie_default: Side::Supports,
        };
        assert_eq!(
            decide_topic_stance(1, &st, &ranking(&["a", "b"]), cfg, &empty, &HashMap::new())
                .unwrap()
                .decided,
            Side::Supports
        );
    }

    #[test]
    fn only_top_k_vote_with_fallback() {
        let st = [
            stance("a", DocLabel::NeutralOnly, 0.5),
            stance("b", DocLabel::Dissuades, 0.5),
            stance("c", DocLabel::Supports, 0.5),
            stance("d", DocLabel::Supports, 0.5),
        ];
        let empty = CredibleSiteList::default();
        let cfg = VoteConfig {
            k: 2,
            tie_default: Side::Supports,
        };
        let t = decide_topic_stance(
            1,
            &st,
            &ranking(&["a", "b", "c", "d"]),
            cfg,
            &empty,
            &HashMap::new(),
        )
        .unwrap();
        assert_eq!(
            (t.decided, t.support_votes, t.dissuade_votes),
            (Side::Dissuades, 0, 1)
        );

        // nothing labelled in the top 1, so all labelled docs vote
        let cfg = VoteConfig {
            k: 1,
            tie_default: Side::Dissuades,
        };
        let t = decide_topic_stance(
            1,
            &st,
            &ranking(&["a", "b", "c", "d"]),
            cfg,
            &empty,
            &HashMap::new(),
        )
        .unwrap();
        assert_eq!(
            (t.decided, t.support_votes, t.dissuade_votes),
            (Side::Supports, 2, 1)
        );

        let none = [stance("a", DocLabel::Void, -3.0)];
        assert!(matches!(
            decide_topic_stance(1, &none, &ranking(&["a"]), cfg, &empty, &HashMap::new()),
            Err(Error::StanceUndecidable(1))
        ));
    }

    fn decided(side: Side) -> TopicStance {
        TopicStance {
            topic_id: 1,
            decided: side,
            support_votes: 0,
            dissuade_votes: 0,
            tie_broken_by_credible_sites: false,
        }
    }

    #[test]
    fn sign_flip() {
        let st = [
            stance("a", DocLabel::Dissuades, 0.8),
            stance("b", DocLabel::Supports, 0.8),
            stance("c", DocLabel::Mixed, -2.0),
        ];
        let out = apply_stance(&st, &decided(Side::Supports));
        assert_eq!(out[0].ranking_score, -0.8);
        assert_eq!(out[1].ranking_score, 0.8);
        let out = apply_stance(&st, &decided(Side::Dissuades));
        assert_eq!(out[2].ranking_score, -2.0);
    }

    #[test]
    fn five_classes_rank_in_order() {
        let st = [
            DocStance {
                ranking_score: -3.0,
                ..stance("v", DocLabel::Void, -3.0)
            },
            DocStance {
                ranking_score: -0.9,
                ..stance("x", DocLabel::Dissuades, 0.9)
            },
            stance("m", DocLabel::Mixed, -2.0),
            stance("s", DocLabel::Supports, 0.9),
            stance("n", DocLabel::NeutralOnly, 0.6),
        ];
        let scores: Vec<f64> = rank_supportiveness(&st).iter().map(|d| d.score).collect();
        assert_eq!(scores, [0.9, 0.6, -0.9, -2.0, -3.0]);
    }

    #[test]
    fn all_void_and_single_doc() {
        let st = [
            stance("b", DocLabel::Void, -3.0),
            stance("a", DocLabel::Void, -3.0),
        ];
        let ids: Vec<String> = rank_supportiveness(&st)
            .into_iter()
            .map(|d| d.doc_id)
            .collect();
        assert_eq!(ids, ["a", "b"]);
        assert_eq!(rank_supportiveness(&st[..1]).len(), 1);
    }

    #[test]
    fn pipeline_marks_candidates_without_evidence_void() {
        let mut useful = RankedRun::new("u");
        useful
            .set_topic(
                1,
                vec![
                    ScoredDoc::new("a", 3.0),
                    ScoredDoc::new("b", 2.0),
                    ScoredDoc::new("c", 1.0),
                ],
            )
            .unwrap();
        let js = [
            j("a", 1, S, 0.9),
            j("b", 1, D, 0.7),
            j("b", 2, D, 0.4),
            j("z", 1, S, 0.3),
        ];
        let out = rerank_supportiveness(
            &js,
            &useful,
            &HashMap::new(),
            &CredibleSiteList::default(),
            VoteConfig::default(),
            "support-x",
        )
        .unwrap();
        let got: Vec<(String, f64)> = out
            .run
            .topic(1)
            .unwrap()
            .iter()
            .map(|d| (d.doc_id.clone(), d.score))
            .collect();
        // votes: a=S, b=D, z=S (z outside the usefulness run does not vote) → tie → dissuades
        assert_eq!(out.stances[&1].decided, Side::Dissuades);
        assert_eq!(
            got,
            [
                ("b".into(), 0.7),
                ("z".into(), -0.3),
                ("a".into(), -0.9),
                ("c".into(), -3.0)
            ]
        );
    }

    fn arb_judgments() -> impl Strategy<Value = Vec<EvidenceJudgment>> {
        prop::collection::vec((0u8..3, 0.0f64..=1.0), 0..8).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (l, c))| j("d", i as u32 + 1, [S, D, N][l as usize], c))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn aggregation_is_permutation_invariant(js in arb_judgments(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = js.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(aggregate_document(1, "d", &js).unwrap(), aggregate_document(1, "d", &shuffled).unwrap());
        }

        #[test]
        fn flipping_decision_negates_only_sided_scores(js in prop::collection::vec(arb_judgments(), 1..6)) {
            let st: Vec<DocStance> = js
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    let id = format!("d{i}");
                    let g: Vec<_> = g.iter().cloned().map(|mut x| { x.doc_id = id.clone(); x }).collect();
                    aggregate_document(1, &id, &g).unwrap()
                })
                .collect();
            let a = apply_stance(&st, &decided(Side::Supports));
            let b = apply_stance(&st, &decided(Side::Dissuades));
            for (x, y) in a.iter().zip(&b) {
                match x.label {
                    DocLabel::Supports | DocLabel::Dissuades => prop_assert_eq!(x.ranking_score, -y.ranking_score),
                    _ => prop_assert_eq!(x.ranking_score, y.ranking_score),
                }
            }
        }
    }
}
