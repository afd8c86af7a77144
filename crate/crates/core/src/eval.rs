//! Compatibility evaluation against graded helpful/harmful judgments.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::scorer_io::RankedRun;

pub const DEFAULT_PERSISTENCE: f64 = 0.95;

/// Depth at which the residual weight `p^depth` falls below 1e-4.
pub fn default_depth(p: f64) -> usize {
    ((1e-4f64).ln() / p.ln()).ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Facet {
    Help,
    Harm,
}

impl std::str::FromStr for Facet {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "help" => Ok(Facet::Help),
            "harm" => Ok(Facet::Harm),
            other => Err(format!("unknown facet {other:?} (expected help or harm)")),
        }
    }
}

pub type Grades = BTreeMap<String, u32>;

/// Graded judgments per topic and facet. Ungraded documents have grade 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qrels {
    topics: BTreeMap<u32, [Grades; 2]>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        topic: u32,
        facet: Facet,
        doc_id: impl Into<String>,
        grade: u32,
    ) -> Option<u32> {
        self.topics.entry(topic).or_default()[facet as usize].insert(doc_id.into(), grade)
    }

    pub fn grades(&self, topic: u32, facet: Facet) -> Option<&Grades> {
        self.topics.get(&topic).map(|g| &g[facet as usize])
    }

    pub fn grade(&self, topic: u32, facet: Facet, doc_id: &str) -> u32 {
        self.grades(topic, facet)
            .and_then(|g| g.get(doc_id))
            .copied()
            .unwrap_or(0)
    }

    pub fn topic_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.topics.keys().copied()
    }

    pub fn num_topics(&self) -> usize {
        self.topics.len()
    }

    /// Parses `<topic> <help|harm> <doc> <grade>` lines.
    pub fn from_str_at(text: &str, origin: &Path) -> Result<Self> {
        let mut qrels = Qrels::new();
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [topic, facet, doc, grade] = fields[..] else {
                return Err(Error::parse(
                    origin,
                    n,
                    format!("expected 4 fields, found {}", fields.len()),
                ));
            };
            let topic: u32 = topic
                .parse()
                .map_err(|_| Error::parse(origin, n, format!("bad topic id {topic:?}")))?;
            let facet: Facet = facet
                .parse()
                .map_err(|e: String| Error::parse(origin, n, e))?;
            let grade: u32 = grade.parse().map_err(|_| {
                Error::parse(
                    origin,
                    n,
                    format!("grade must be a non-negative integer, got {grade:?}"),
                )
            })?;
            if qrels.insert(topic, facet, doc, grade).is_some() {
                return Err(Error::parse(
                    origin,
                    n,
                    format!("duplicate judgment for {doc} on topic {topic}"),
                ));
            }
        }
        Ok(qrels)
    }

    pub fn to_qrels_string(&self) -> String {
        let mut out = String::new();
        for (topic, facets) in &self.topics {
            for facet in [Facet::Help, Facet::Harm] {
                let name = if facet == Facet::Help { "help" } else { "harm" };
                for (doc, grade) in &facets[facet as usize] {
                    writeln!(out, "{topic} {name} {doc} {grade}").unwrap();
                }
            }
        }
        out
    }
}

pub fn load_qrels(path: &Path) -> Result<Qrels> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Qrels::from_str_at(&text, path)
}

/// `(1 − p) · Σ p^(i−1) · grade(d_i)` over the first `depth` documents.
pub fn rbp_weighted_overlap<'a>(
    ranking: impl IntoIterator<Item = &'a str>,
    grades: &Grades,
    p: f64,
    depth: usize,
) -> f64 {
    let mut weight = 1.0;
    let mut sum = 0.0;
    for doc in ranking.into_iter().take(depth) {
        if let Some(&g) = grades.get(doc) {
            sum += weight * g as f64;
        }
        weight *= p;
    }
    (1.0 - p) * sum
}

/// Graded documents by grade descending, then doc id.
pub fn ideal_ranking(grades: &Grades) -> Vec<&str> {
    let mut docs: Vec<(&str, u32)> = grades
        .iter()
        .filter(|(_, &g)| g > 0)
        .map(|(d, &g)| (d.as_str(), g))
        .collect();
    docs.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    docs.into_iter().map(|(d, _)| d).collect()
}

/// The run's weighted overlap relative to the ideal ranking; 0 when nothing is graded.
pub fn compatibility<'a>(
    ranking: impl IntoIterator<Item = &'a str>,
    grades: &Grades,
    p: f64,
    depth: usize,
) -> f64 {
    let ideal = rbp_weighted_overlap(ideal_ranking(grades), grades, p, depth);
    if ideal == 0.0 {
        return 0.0;
    }
    rbp_weighted_overlap(ranking, grades, p, depth) / ideal
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalParams {
    pub p: f64,
    pub depth: usize,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams {
            p: DEFAULT_PERSISTENCE,
            depth: default_depth(DEFAULT_PERSISTENCE),
        }
    }
}

impl EvalParams {
    pub fn new(p: f64, depth: Option<usize>) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Invalid(format!(
                "persistence must be in (0, 1), got {p}"
            )));
        }
        Ok(EvalParams {
            p,
            depth: depth.unwrap_or_else(|| default_depth(p)),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Compatibility {
    pub help: f64,
    pub harm: f64,
    pub help_minus_harm: f64,
}

impl Compatibility {
    pub fn new(help: f64, harm: f64) -> Self {
        Compatibility {
            help,
            harm,
            help_minus_harm: help - harm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicCompatibility {
    pub topic_id: u32,
    #[serde(flatten)]
    pub scores: Compatibility,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub run: String,
    pub params: EvalParams,
    pub topics: Vec<TopicCompatibility>,
    pub mean: Compatibility,
}

impl CompatibilityReport {
    pub fn to_summary_tsv(&self) -> String {
        format!(
            "run\thelp\tharm\thelp_minus_harm\n{}\t{:.4}\t{:.4}\t{:.4}\n",
            self.run, self.mean.help, self.mean.harm, self.mean.help_minus_harm
        )
    }

    pub fn to_topic_tsv(&self) -> String {
        let mut out = String::from("topic\thelp\tharm\thelp_minus_harm\n");
        for t in &self.topics {
            let s = t.scores;
            writeln!(
                out,
                "{}\t{:.4}\t{:.4}\t{:.4}",
                t.topic_id, s.help, s.harm, s.help_minus_harm
            )
            .unwrap();
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Per-topic help and harm compatibility averaged over topics judged in
/// `qrels` and present in `run`.
pub fn help_harm_report(
    run: &RankedRun,
    qrels: &Qrels,
    params: EvalParams,
) -> Result<CompatibilityReport> {
    let shared: Vec<u32> = qrels
        .topic_ids()
        .filter(|t| run.topic(*t).is_some())
        .collect();
    if shared.is_empty() {
        return Err(Error::Invalid(format!(
            "run {:?} shares no topics with the qrels",
            run.tag
        )));
    }
    let topics = par::map(&shared, |&topic| {
        let docs = run.topic(topic).unwrap_or(&[]);
        let score = |facet| {
            let grades = qrels.grades(topic, facet).expect("shared topic");
            compatibility(
                docs.iter().map(|d| d.doc_id.as_str()),
                grades,
                params.p,
                params.depth,
            )
        };
        TopicCompatibility {
            topic_id: topic,
            scores: Compatibility::new(score(Facet::Help), score(Facet::Harm)),
        }
    });
    let n = topics.len() as f64;
    let help = topics.iter().map(|t| t.scores.help).sum::<f64>() / n;
    let harm = topics.iter().map(|t| t.scores.harm).sum::<f64>() / n;
    Ok(CompatibilityReport {
        run: run.tag.clone(),
        params,
        topics,
        mean: Compatibility::new(help, harm),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorer_io::ScoredDoc;
    use proptest::prelude::*;

    fn grades(pairs: &[(&str, u32)]) -> Grades {
        pairs.iter().map(|(d, g)| (d.to_string(), *g)).collect()
    }

    #[test]
    fn depth_for_default_persistence() {
        assert_eq!(default_depth(0.95), 180);
        assert_eq!(EvalParams::default().depth, 180);
        assert!(EvalParams::new(1.0, None).is_err());
    }

    #[test]
    fn rbp_hand_values() {
        let g = grades(&[("a", 2), ("b", 1)]);
        assert_eq!(rbp_weighted_overlap([], &g, 0.95, 180), 0.0);
        assert!(
            (rbp_weighted_overlap(["b"], &grades(&[("b", 1)]), 0.95, 180) - 0.05).abs() < 1e-12
        );
        assert!((rbp_weighted_overlap(["a", "b"], &g, 0.95, 180) - 0.1475).abs() < 1e-12);
        assert_eq!(rbp_weighted_overlap(["x", "a"], &g, 0.95, 1), 0.0);
    }

    #[test]
    fn compatibility_hand_values() {
        let g = grades(&[("b", 1)]);
        assert!((compatibility(["b", "a", "c"], &g, 0.95, 180) - 1.0).abs() < 1e-12);
        assert!((compatibility(["a", "b", "c"], &g, 0.95, 180) - 0.95).abs() < 1e-12);
        assert_eq!(compatibility(["a", "c"], &g, 0.95, 180), 0.0);
        assert_eq!(compatibility(["a"], &grades(&[("a", 0)]), 0.95, 180), 0.0);
        assert_eq!(compatibility(["a"], &Grades::new(), 0.95, 180), 0.0);
    }

    #[test]
    fn ideal_orders_by_grade_then_id() {
        let g = grades(&[("c", 1), ("a", 1), ("b", 3), ("z", 0)]);
        assert_eq!(ideal_ranking(&g), ["b", "a", "c"]);
    }

    #[test]
    fn qrels_parse_and_errors() {
        let text = "101 help d1 2\n101 harm d2 1\n# note\n\n102 help d3 1\n";
        let q = Qrels::from_str_at(text, Path::new("q")).unwrap();
        assert_eq!(q.num_topics(), 2);
        assert_eq!(q.grade(101, Facet::Help, "d1"), 2);
        assert_eq!(q.grade(101, Facet::Help, "d2"), 0);
        assert_eq!(q.grades(102, Facet::Harm).unwrap().len(), 0);
        assert_eq!(
            Qrels::from_str_at(&q.to_qrels_string(), Path::new("q")).unwrap(),
            q
        );

        for (bad, msg) in [
            ("1 help d1\n", "q:1: expected 4 fields, found 3"),
            (
                "1 helpful d1 1\n",
                "q:1: unknown facet \"helpful\" (expected help or harm)",
            ),
            (
                "1 help d1 -1\n",
                "q:1: grade must be a non-negative integer, got \"-1\"",
            ),
            (
                "1 help d1 1\n1 help d1 2\n",
                "q:2: duplicate judgment for d1 on topic 1",
            ),
        ] {
            assert_eq!(
                Qrels::from_str_at(bad, Path::new("q"))
                    .unwrap_err()
                    .to_string(),
                msg
            );
        }
    }

    fn run_of(topics: &[(u32, &[&str])]) -> RankedRun {
        let mut r = RankedRun::new("r");
        for (t, docs) in topics {
            r.set_topic(
                *t,
                docs.iter()
                    .enumerate()
                    .map(|(i, d)| ScoredDoc::new(*d, -(i as f64)))
                    .collect(),
            )
            .unwrap();
        }
        r
    }

    #[test]
    fn report_over_shared_topics() {
        let mut q = Qrels::new();
        q.insert(1, Facet::Help, "a", 1);
        q.insert(1, Facet::Harm, "b", 1);
        q.insert(2, Facet::Help, "c", 1);
        q.insert(3, Facet::Help, "x", 1);
        let run = run_of(&[(1, &["a", "b"]), (2, &["z", "c"]), (9, &["a"])]);
        let rep = help_harm_report(&run, &q, EvalParams::default()).unwrap();
        assert_eq!(
            rep.topics.iter().map(|t| t.topic_id).collect::<Vec<_>>(),
            [1, 2]
        );
        assert!((rep.topics[0].scores.harm - 0.95).abs() < 1e-12);
        assert_eq!(rep.topics[1].scores.harm, 0.0);
        assert!((rep.mean.help - 0.975).abs() < 1e-12);
        assert!((rep.mean.harm - 0.475).abs() < 1e-12);
        assert_eq!(rep.mean.help_minus_harm, rep.mean.help - rep.mean.harm);
        assert_eq!(
            CompatibilityReport::from_json(&rep.to_json().unwrap()).unwrap(),
            rep
        );
        assert!(rep
            .to_summary_tsv()
            .starts_with("run\thelp\tharm\thelp_minus_harm\nr\t0.9750\t0.4750\t0.5000\n"));
        assert_eq!(rep.to_topic_tsv().lines().count(), 3);

        let other = run_of(&[(7, &["a"])]);
        assert!(help_harm_report(&other, &q, EvalParams::default()).is_err());
    }

    proptest! {
        #[test]
        fn compatibility_in_unit_range(gs in proptest::collection::vec(0u32..4, 1..12), perm in any::<u64>()) {
            let ids: Vec<String> = (0..gs.len()).map(|i| format!("d{i}")).collect();
            let g: Grades = ids.iter().cloned().zip(gs.iter().copied()).collect();
            let mut order: Vec<&str> = ids.iter().map(String::as_str).collect();
            let n = order.len();
            for i in 0..n {
                order.swap(i, (perm as usize).wrapping_add(i * 31) % n);
            }
            let c = compatibility(order.iter().copied(), &g, 0.95, 180);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&c));
            if gs.iter().any(|&x| x > 0) {
                prop_assert!((compatibility(ideal_ranking(&g), &g, 0.95, 180) - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn rank_shift_multiplies_by_p(r in 1usize..60, p in 0.5f64..0.99) {
            let g = grades(&[("t", 1)]);
            let mk = |pos: usize| -> Vec<String> {
                (0..=pos).map(|i| if i == pos - 1 { "t".into() } else { format!("f{i}") }).collect()
            };
            let at_r = mk(r);
            let at_r1 = mk(r + 1);
            let a = compatibility(at_r.iter().map(String::as_str), &g, p, 1000);
            let b = compatibility(at_r1.iter().map(String::as_str), &g, p, 1000);
            prop_assert!((b - a * p).abs() < 1e-12);
        }

        #[test]
        fn promoting_graded_doc_never_hurts(gs in proptest::collection::vec(0u32..3, 2..10), i in 0usize..10, j in 0usize..10) {
            let n = gs.len();
            let (i, j) = (i % n, j % n);
            let ids: Vec<String> = (0..n).map(|k| format!("d{k}")).collect();
            let g: Grades = ids.iter().cloned().zip(gs.iter().copied()).collect();
            let (lo, hi) = (i.min(j), i.max(j));
            let mut swapped = ids.clone();
            swapped.swap(lo, hi);
            let before = compatibility(ids.iter().map(String::as_str), &g, 0.95, 180);
            let after = compatibility(swapped.iter().map(String::as_str), &g, 0.95, 180);
            if gs[hi] >= gs[lo] {
                prop_assert!(after >= before - 1e-12);
            }
        }
    }
}
