//! Pipeline configuration file. Relative paths resolve against the
//! directory holding the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

use healthrank::corpus::SourceFormat;
use healthrank::credibility::{ForestParams, PageRankConfig};
use healthrank::eval::DEFAULT_PERSISTENCE;
use healthrank::fusion::DEFAULT_FUSION_DEPTH;
use healthrank::retrieval::{default_grid, Bm25Params, DEFAULT_DEPTH};
use healthrank::supportiveness::{Side, VoteConfig};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    /// Index, corpus store, generated runs and reports live here.
    #[serde(default = "default_work_dir")]
    pub work_dir: PathBuf,
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub bm25: Bm25Config,
    /// Externally produced runs by model id.
    #[serde(default)]
    pub runs: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub support: SupportConfig,
    #[serde(default)]
    pub credibility: CredibilityConfig,
    #[serde(default)]
    pub fusion: FusionConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_work_dir() -> PathBuf {
    PathBuf::from("work")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub documents: PathBuf,
    #[serde(default = "default_format")]
    pub format: String,
    pub topics: PathBuf,
}

fn default_format() -> String {
    "jsonl".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bm25Config {
    pub k1: f64,
    pub b: f64,
    pub depth: usize,
    pub silver: Option<PathBuf>,
    /// Tuning grid; both axes default to the built-in grid.
    pub grid_k1: Option<Vec<f64>>,
    pub grid_b: Option<Vec<f64>>,
}

impl Default for Bm25Config {
    fn default() -> Self {
        Bm25Config {
            k1: 0.9,
            b: 0.4,
            depth: DEFAULT_DEPTH,
            silver: None,
            grid_k1: None,
            grid_b: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SupportConfig {
    pub k: usize,
    /// Model id whose ranking supplies the voting pool.
    pub usefulness: String,
    pub tie_default: Side,
    /// Evidence judgments by support model id.
    pub evidence: BTreeMap<String, PathBuf>,
}

impl Default for SupportConfig {
    fn default() -> Self {
        SupportConfig {
            k: 10,
            usefulness: "M3".into(),
            tie_default: VoteConfig::default().tie_default,
            evidence: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CredibilityConfig {
    pub sites: Option<PathBuf>,
    /// Labelled CSV with feature columns, used when `model` is unset.
    pub training: Option<PathBuf>,
    /// A saved forest, used instead of training.
    pub model: Option<PathBuf>,
    /// Model id whose documents are re-ranked.
    pub candidates: String,
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub pagerank: Option<PageRankConfig>,
}

impl Default for CredibilityConfig {
    fn default() -> Self {
        let forest = ForestParams::default();
        CredibilityConfig {
            sites: None,
            training: None,
            model: None,
            candidates: "bm25".into(),
            n_trees: forest.n_trees,
            max_depth: forest.max_depth,
            min_leaf: forest.min_leaf,
            pagerank: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    pub k: f64,
    pub depth: usize,
    /// Extra presets by name; built-in run1..run7 need no entry.
    pub presets: BTreeMap<String, Vec<String>>,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            k: 60.0,
            depth: DEFAULT_FUSION_DEPTH,
            presets: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub qrels: Option<PathBuf>,
    pub p: f64,
    pub depth: Option<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            qrels: None,
            p: DEFAULT_PERSISTENCE,
            depth: None,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config: PipelineConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn work(&self) -> PathBuf {
        self.resolve(&self.work_dir)
    }

    pub fn index_dir(&self) -> PathBuf {
        self.work().join("index")
    }

    pub fn store_dir(&self) -> PathBuf {
        self.work().join("corpus")
    }

    pub fn runs_dir(&self) -> PathBuf {
        self.work().join("runs")
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.work().join("reports")
    }

    pub fn tuned_path(&self) -> PathBuf {
        self.work().join("tuned.json")
    }

    pub fn forest_path(&self) -> PathBuf {
        self.work().join("forest.json")
    }

    pub fn run_path(&self, model: &str) -> PathBuf {
        self.runs_dir().join(format!("{model}.run"))
    }

    pub fn source_format(&self) -> Result<SourceFormat> {
        Ok(self.corpus.format.parse()?)
    }

    /// The configured grid in k1-major order.
    pub fn grid(&self) -> Result<Vec<Bm25Params>> {
        let (k1s, bs) = match (&self.bm25.grid_k1, &self.bm25.grid_b) {
            (None, None) => return Ok(default_grid()),
            (k1s, bs) => {
                let defaults = default_grid();
                let mut dk: Vec<f64> = defaults.iter().map(|p| p.k1).collect();
                dk.dedup();
                let mut db: Vec<f64> = defaults.iter().map(|p| p.b).collect();
                db.sort_by(f64::total_cmp);
                db.dedup();
                (k1s.clone().unwrap_or(dk), bs.clone().unwrap_or(db))
            }
        };
        let mut grid = Vec::with_capacity(k1s.len() * bs.len());
        for &k1 in &k1s {
            for &b in &bs {
                grid.push(Bm25Params::new(k1, b)?);
            }
        }
        if grid.is_empty() {
            anyhow::bail!("bm25 tuning grid is empty");
        }
        Ok(grid)
    }

    pub fn forest_params(&self) -> ForestParams {
        ForestParams {
            n_trees: self.credibility.n_trees,
            max_depth: self.credibility.max_depth,
            min_leaf: self.credibility.min_leaf,
            max_features: None,
        }
    }

    /// PageRank config with a fixture path made absolute.
    pub fn pagerank(&self) -> Option<PageRankConfig> {
        self.credibility.pagerank.clone().map(|c| match c {
            PageRankConfig::Fixture { path } => PageRankConfig::Fixture {
                path: self
                    .resolve(Path::new(&path))
                    .to_string_lossy()
                    .into_owned(),
            },
            live => live,
        })
    }
}
