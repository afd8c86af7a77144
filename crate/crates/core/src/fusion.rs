//! Reciprocal Rank Fusion and the model/run compositions built from it.
//!
//! Model ids follow the pipeline's M-numbering. Leaves are individual
//! ranked runs; composite models are RRF fusions of other models:
//!
//! | id    | definition                                   |
//! |-------|----------------------------------------------|
//! | `M1`  | `bm25`                                       |
//! | `M2`  | RRF(`M1`, `bm25_tuned`)                      |
//! | `M3`  | RRF(`bert_base`, `monobert`, `electra`)      |
//! | `M4`  | RRF(`M1`, `M3`)                              |
//! | `M5`  | `roberta_large`                              |
//! | `M6`  | RRF(`roberta_large`, `biomed_roberta`, `scibert`) |
//! | `M7`  | `rf`                                         |
//! | `M9`  | `rf_sites`                                   |
//! | `M10` | RRF(`M4`, `M6`, `M9`)                        |
//!
//! `M8`, the credible-site list, is an input to `M9` rather than a ranking.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::scorer_io::{rank_by_score, RankedRun, ScoredDoc};

pub const DEFAULT_FUSION_DEPTH: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrfConfig {
    pub k: f64,
}

impl Default for RrfConfig {
    fn default() -> Self {
        RrfConfig { k: 60.0 }
    }
}

impl RrfConfig {
    pub fn new(k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Invalid(format!("RRF k must be positive, got {k}")));
        }
        Ok(RrfConfig { k })
    }
}

/// Fuses runs topic by topic: `score(d) = Σ 1 / (k + rank(d))` over the
/// runs that contain `d`.
///
/// Each document's terms are summed in ascending rank order, so the result
/// does not depend on the order of `runs`. Output is cut to `depth`.
pub fn rrf_fuse(
    runs: &[&RankedRun],
    config: RrfConfig,
    depth: usize,
    tag: &str,
) -> Result<RankedRun> {
    if runs.is_empty() {
        return Err(Error::Invalid("rrf_fuse needs at least one run".into()));
    }
    RrfConfig::new(config.k)?;
    let topics: Vec<u32> = runs
        .iter()
        .flat_map(|r| r.topic_ids())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let fused = par::map(&topics, |&topic| {
        let mut ranks: HashMap<&str, Vec<usize>> = HashMap::new();
        for run in runs {
            for (i, d) in run.topic(topic).unwrap_or(&[]).iter().enumerate() {
                ranks.entry(d.doc_id.as_str()).or_default().push(i + 1);
            }
        }
        let docs: Vec<ScoredDoc> = ranks
            .into_iter()
            .map(|(doc, mut rs)| {
                rs.sort_unstable();
                let score = rs.iter().map(|&r| 1.0 / (config.k + r as f64)).sum();
                ScoredDoc::new(doc, score)
            })
            .collect();
        let mut ranked = rank_by_score(docs);
        ranked.truncate(depth);
        (topic, ranked)
    });

    let mut out = RankedRun::new(tag);
    for (topic, docs) in fused {
        out.set_topic(topic, docs)?;
    }
    Ok(out)
}

/// Individual models a composition bottoms out in.
pub const USEFULNESS_MODELS: [&str; 5] = ["bm25", "bm25_tuned", "bert_base", "monobert", "electra"];
pub const SUPPORT_MODELS: [&str; 3] = ["roberta_large", "biomed_roberta", "scibert"];
pub const CREDIBILITY_MODELS: [&str; 2] = ["rf", "rf_sites"];

/// How a model id is obtained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Definition {
    /// Supplied from outside (a run file or an earlier stage).
    Leaf,
    /// Another name for a model.
    Alias(&'static str),
    Fusion(Vec<&'static str>),
}

pub fn definition(model: &str) -> Option<Definition> {
    use Definition::*;
    let def = match model {
        "M1" => Alias("bm25"),
        "M2" => Fusion(vec!["M1", "bm25_tuned"]),
        "M3" => Fusion(vec!["bert_base", "monobert", "electra"]),
        "M4" => Fusion(vec!["M1", "M3"]),
        "M5" => Alias("roberta_large"),
        "M6" => Fusion(vec!["roberta_large", "biomed_roberta", "scibert"]),
        "M7" => Alias("rf"),
        "M9" => Alias("rf_sites"),
        "M10" => Fusion(vec!["M4", "M6", "M9"]),
        m if USEFULNESS_MODELS.contains(&m)
            || SUPPORT_MODELS.contains(&m)
            || CREDIBILITY_MODELS.contains(&m) =>
        {
            Leaf
        }
        _ => return None,
    };
    Some(def)
}

/// A named set of models fused into one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preset {
    pub id: String,
    pub components: Vec<String>,
}

impl Preset {
    pub fn new(id: impl Into<String>, components: &[&str]) -> Self {
        Preset {
            id: id.into(),
            components: components.iter().map(|c| c.to_string()).collect(),
        }
    }

    /// The seven submitted runs, `run1` … `run7`.
    pub fn builtin(id: &str) -> Option<Preset> {
        let components: Vec<&str> = match id {
            "run1" => vec!["M1", "M5", "M7"],
            "run2" => vec!["M2", "M6", "M9"],
            "run3" => vec!["M3", "M6", "M9"],
            "run4" => vec!["M4", "M5", "M9"],
            "run5" => vec!["M4", "M6", "M7"],
            "run6" => vec!["M4", "M6", "M9"],
            "run7" => USEFULNESS_MODELS
                .iter()
                .chain(&SUPPORT_MODELS)
                .chain(&CREDIBILITY_MODELS)
                .copied()
                .collect(),
            _ => return None,
        };
        Some(Preset::new(id, &components))
    }

    pub fn all_builtin() -> Vec<Preset> {
        (1..=7)
            .map(|i| Preset::builtin(&format!("run{i}")).expect("builtin preset"))
            .collect()
    }
}

/// Resolves model ids to runs, fusing composites bottom-up and caching
/// each intermediate result.
pub struct Resolver<'a> {
    available: &'a HashMap<String, RankedRun>,
    config: RrfConfig,
    cache: HashMap<String, RankedRun>,
}

impl<'a> Resolver<'a> {
    pub fn new(available: &'a HashMap<String, RankedRun>, config: RrfConfig) -> Self {
        Resolver {
            available,
            config,
            cache: HashMap::new(),
        }
    }

    /// A supplied run wins over a definition, so a precomputed `M6` can
    /// stand in for its three constituents.
    pub fn resolve(&mut self, model: &str) -> Result<RankedRun> {
        if let Some(run) = self.available.get(model) {
            return Ok(run.clone());
        }
        if let Some(run) = self.cache.get(model) {
            return Ok(run.clone());
        }
        let run = match definition(model) {
            Some(Definition::Alias(target)) => self.resolve(target).map_err(|e| needs(model, e))?,
            Some(Definition::Fusion(parts)) => {
                let runs = parts
                    .iter()
                    .map(|p| self.resolve(p))
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| needs(model, e))?;
                let refs: Vec<&RankedRun> = runs.iter().collect();
                rrf_fuse(&refs, self.config, usize::MAX, model)?
            }
            Some(Definition::Leaf) | None => return Err(Error::MissingModel(model.to_string())),
        };
        self.cache.insert(model.to_string(), run.clone());
        Ok(run)
    }
}

fn needs(model: &str, err: Error) -> Error {
    match err {
        Error::MissingModel(inner) => {
            let leaf = inner
                .rsplit("needs ")
                .next()
                .unwrap_or(&inner)
                .trim_end_matches(')');
            Error::MissingModel(format!("{model} (needs {leaf})"))
        }
        other => other,
    }
}

/// Fuses the preset's components into one run tagged with the preset id.
pub fn compose_preset(
    preset: &Preset,
    available: &HashMap<String, RankedRun>,
    config: RrfConfig,
    depth: usize,
) -> Result<RankedRun> {
    if preset.components.is_empty() {
        return Err(Error::Invalid(format!(
            "preset {} has no components",
            preset.id
        )));
    }
    let mut resolver = Resolver::new(available, config);
    let runs = preset
        .components
        .iter()
        .map(|c| resolver.resolve(c))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&RankedRun> = runs.iter().collect();
    rrf_fuse(&refs, config, depth, &preset.id)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(tag: &str, topic: u32, ids: &[&str]) -> RankedRun {
        let mut r = RankedRun::new(tag);
        r.set_topic(
            topic,
            ids.iter()
                .enumerate()
                .map(|(i, d)| ScoredDoc::new(*d, (ids.len() - i) as f64))
                .collect(),
        )
        .unwrap();
        r
    }

    fn ids(r: &RankedRun, topic: u32) -> Vec<&str> {
        r.topic(topic)
            .unwrap()
            .iter()
            .map(|d| d.doc_id.as_str())
            .collect()
    }

    #[test]
    fn single_run_keeps_order() {
        let a = run("a", 1, &["x", "y", "z"]);
        let f = rrf_fuse(&[&a], RrfConfig::default(), 100, "f").unwrap();
        assert_eq!(ids(&f, 1), ["x", "y", "z"]);
        assert_eq!(f.topic(1).unwrap()[1].score, 1.0 / 62.0);
    }

    #[test]
    fn agreement_beats_single_vote() {
        let a = run("a", 1, &["p", "q"]);
        let b = run("b", 1, &["p", "r"]);
        let c = run("c", 1, &["s"]);
        let f = rrf_fuse(&[&a, &b, &c], RrfConfig::default(), 100, "f").unwrap();
        let top = &f.topic(1).unwrap()[0];
        assert_eq!(top.doc_id, "p");
        assert!((top.score - 0.032787).abs() < 1e-6);
        assert!((f.rank_of(1, "s").unwrap().1 - 0.016393).abs() < 1e-6);
    }

    #[test]
    fn ranks_one_and_three() {
        let a = run("a", 1, &["d", "e", "f"]);
        let b = run("b", 1, &["e", "g", "d"]);
        let f = rrf_fuse(&[&a, &b], RrfConfig::default(), 100, "f").unwrap();
        assert_eq!(f.rank_of(1, "d").unwrap().1, 1.0 / 61.0 + 1.0 / 63.0);
    }

    #[test]
    fn disjoint_topics_union_and_depth() {
        let a = run("a", 1, &["x", "y"]);
        let b = run("b", 2, &["z"]);
        let f = rrf_fuse(&[&a, &b], RrfConfig::default(), 1, "f").unwrap();
        assert_eq!(f.topic_ids().collect::<Vec<_>>(), [1, 2]);
        assert_eq!(ids(&f, 1), ["x"]);
        assert!(rrf_fuse(&[], RrfConfig::default(), 1, "f").is_err());
        assert!(RrfConfig::new(0.0).is_err());
    }

    #[test]
    fn larger_k_never_swaps_single_run_pair() {
        let a = run("a", 1, &["x", "y"]);
        for k in [1.0, 10.0, 60.0, 1000.0] {
            let f = rrf_fuse(&[&a], RrfConfig { k }, 10, "f").unwrap();
            assert_eq!(ids(&f, 1), ["x", "y"]);
        }
    }

    fn leaves() -> HashMap<String, RankedRun> {
        let names = USEFULNESS_MODELS
            .iter()
            .chain(&SUPPORT_MODELS)
            .chain(&CREDIBILITY_MODELS);
        names
            .enumerate()
            .map(|(i, n)| {
                let docs: Vec<String> = (0..6)
                    .map(|j| format!("d{}", (i * 7 + j * 3) % 10))
                    .collect();
                let refs: Vec<&str> = docs.iter().map(String::as_str).collect();
                (n.to_string(), run(n, 1, &refs))
            })
            .collect()
    }

    #[test]
    fn run1_is_three_way_fusion() {
        let avail = leaves();
        let got = compose_preset(
            &Preset::builtin("run1").unwrap(),
            &avail,
            RrfConfig::default(),
            1000,
        )
        .unwrap();
        let want = rrf_fuse(
            &[&avail["bm25"], &avail["roberta_large"], &avail["rf"]],
            RrfConfig::default(),
            1000,
            "run1",
        )
        .unwrap();
        assert_eq!(got, want);
        assert_eq!(got.tag, "run1");
    }

    #[test]
    fn run7_is_flat_ten_way_fusion() {
        let avail = leaves();
        let preset = Preset::builtin("run7").unwrap();
        assert_eq!(preset.components.len(), 10);
        let got = compose_preset(&preset, &avail, RrfConfig::default(), 1000).unwrap();
        let all: Vec<&RankedRun> = preset.components.iter().map(|c| &avail[c]).collect();
        assert_eq!(
            got,
            rrf_fuse(&all, RrfConfig::default(), 1000, "run7").unwrap()
        );
    }

    #[test]
    fn nested_components_fuse_bottom_up() {
        let avail = leaves();
        let got = compose_preset(
            &Preset::builtin("run4").unwrap(),
            &avail,
            RrfConfig::default(),
            1000,
        )
        .unwrap();
        let cfg = RrfConfig::default();
        let m3 = rrf_fuse(
            &[&avail["bert_base"], &avail["monobert"], &avail["electra"]],
            cfg,
            usize::MAX,
            "M3",
        )
        .unwrap();
        let m4 = rrf_fuse(&[&avail["bm25"], &m3], cfg, usize::MAX, "M4").unwrap();
        let want = rrf_fuse(
            &[&m4, &avail["roberta_large"], &avail["rf_sites"]],
            cfg,
            1000,
            "run4",
        )
        .unwrap();
        assert_eq!(got, want);
    }

    #[test]
    fn missing_component_is_named() {
        let mut avail = leaves();
        avail.remove("scibert");
        let err = compose_preset(
            &Preset::builtin("run2").unwrap(),
            &avail,
            RrfConfig::default(),
            1000,
        )
        .unwrap_err();
        assert_eq!(err.to_string(), "missing model M6 (needs scibert)");
        // a supplied M6 satisfies the preset without its constituents
        let m6 = run("M6", 1, &["d1"]);
        avail.insert("M6".into(), m6);
        assert!(compose_preset(
            &Preset::builtin("run2").unwrap(),
            &avail,
            RrfConfig::default(),
            1000
        )
        .is_ok());
        let err = compose_preset(
            &Preset::new("x", &["nope"]),
            &avail,
            RrfConfig::default(),
            10,
        )
        .unwrap_err();
        assert_eq!(err.to_string(), "missing model nope");
    }

    #[test]
    fn builtin_components() {
        let comps = |id: &str| Preset::builtin(id).unwrap().components;
        assert_eq!(comps("run1"), ["M1", "M5", "M7"]);
        assert_eq!(comps("run2"), ["M2", "M6", "M9"]);
        assert_eq!(comps("run3"), ["M3", "M6", "M9"]);
        assert_eq!(comps("run4"), ["M4", "M5", "M9"]);
        assert_eq!(comps("run5"), ["M4", "M6", "M7"]);
        assert_eq!(comps("run6"), ["M4", "M6", "M9"]);
        assert!(Preset::builtin("run8").is_none());
    }
}
