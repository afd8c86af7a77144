//! Random forest of Gini-split binary decision trees.
//!
//! Each tree sees a bootstrap sample and considers a random subset of
//! features at every node. Tree `i` draws all of its randomness from a
//! ChaCha stream `i` keyed by the master seed, so trees can be grown in
//! parallel and the model is reproducible bit for bit.

use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

const MODEL_FORMAT: &str = "healthrank-forest/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features tried per split; `None` means ⌈√features⌉.
    pub max_features: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            min_leaf: 1,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        class: u8,
    },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> u8 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[feature] <= threshold { left } else { right } as usize;
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, left as usize).max(walk(nodes, right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    format: String,
    pub seed: u64,
    pub params: ForestParams,
    pub n_features: usize,
    pub trees: Vec<Tree>,
}

impl ForestModel {
    /// Per-tree votes for `x`.
    pub fn votes(&self, x: &[f64]) -> Vec<u8> {
        self.trees.iter().map(|t| t.predict(x)).collect()
    }

    /// Fraction of trees voting for class 1.
    pub fn predict(&self, x: &[f64]) -> f64 {
        if self.trees.is_empty() {
            return 0.0;
        }
        let ones = self.trees.iter().filter(|t| t.predict(x) == 1).count();
        ones as f64 / self.trees.len() as f64
    }

    pub fn from_trees(trees: Vec<Tree>, n_features: usize) -> Self {
        ForestModel {
            format: MODEL_FORMAT.to_string(),
            seed: 0,
            params: ForestParams {
                n_trees: trees.len(),
                ..Default::default()
            },
            n_features,
            trees,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(path, serde_json::to_vec(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let model: ForestModel = serde_json::from_slice(&bytes)?;
        if model.format != MODEL_FORMAT {
            return Err(Error::Format {
                found: model.format,
                expected: MODEL_FORMAT.to_string(),
            });
        }
        Ok(model)
    }
}

/// Trains a forest on rows `x` with binary labels `y`.
pub fn train(x: &[Vec<f64>], y: &[bool], params: ForestParams, seed: u64) -> Result<ForestModel> {
    if x.len() != y.len() {
        return Err(Error::Invalid(format!(
            "{} rows but {} labels",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Invalid("need at least 2 training rows".into()));
    }
    if y.iter().all(|&l| l) || y.iter().all(|&l| !l) {
        return Err(Error::Invalid(
            "training labels contain a single class".into(),
        ));
    }
    let n_features = x[0].len();
    if n_features == 0 || x.iter().any(|r| r.len() != n_features) {
        return Err(Error::Invalid("ragged or empty feature rows".into()));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("non-finite feature value".into()));
    }
    if params.n_trees == 0 || params.min_leaf == 0 {
        return Err(Error::Invalid("n_trees and min_leaf must be >= 1".into()));
    }
    let max_features = params
        .max_features
        .unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize)
        .clamp(1, n_features);

    let data = TrainData { x, y };
    let trees = par::map_range(params.n_trees, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let rows: Vec<usize> = (0..x.len()).map(|_| rng.random_range(0..x.len())).collect();
        let mut builder = TreeBuilder {
            data: &data,
            params,
            max_features,
            rng,
            nodes: Vec::new(),
        };
        builder.grow(rows, 0);
        Tree {
            nodes: builder.nodes,
        }
    });

    Ok(ForestModel {
        format: MODEL_FORMAT.to_string(),
        seed,
        params,
        n_features,
        trees,
    })
}

struct TrainData<'a> {
    x: &'a [Vec<f64>],
    y: &'a [bool],
}

struct TreeBuilder<'a> {
    data: &'a TrainData<'a>,
    params: ForestParams,
    max_features: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

struct Candidate {
    impurity: f64,
    feature: usize,
    threshold: f64,
}

fn gini(ones: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = ones as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

impl TreeBuilder<'_> {
    /// Appends the subtree for `rows` and returns its root index.
    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> u32 {
        let id = self.nodes.len() as u32;
        let ones = rows.iter().filter(|&&r| self.data.y[r]).count();
        let majority = u8::from(2 * ones > rows.len());
        let pure = ones == 0 || ones == rows.len();
        let depth_capped = self.params.max_depth.is_some_and(|m| depth >= m);
        if pure || depth_capped || rows.len() < 2 * self.params.min_leaf {
            self.nodes.push(Node::Leaf { class: majority });
            return id;
        }
        let Some(best) = self.best_split(&rows) else {
            self.nodes.push(Node::Leaf { class: majority });
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.data.x[r][best.feature] <= best.threshold);
        self.nodes.push(Node::Leaf { class: majority });
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id as usize] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    /// Lowest weighted Gini over a random feature subset. If every sampled
    /// feature is constant on `rows`, the remaining features are tried too.
    fn best_split(&mut self, rows: &[usize]) -> Option<Candidate> {
        let n_features = self.data.x[0].len();
        let mut order: Vec<usize> = sample(&mut self.rng, n_features, n_features).into_vec();
        let (tried, rest) = order.split_at_mut(self.max_features);
        let mut best = None;
        for &f in tried.iter() {
            self.consider(rows, f, &mut best);
        }
        if best.is_none() {
            for &f in rest.iter() {
                self.consider(rows, f, &mut best);
            }
        }
        best
    }

    fn consider(&self, rows: &[usize], feature: usize, best: &mut Option<Candidate>) {
        let mut vals: Vec<(f64, bool)> = rows
            .iter()
            .map(|&r| (self.data.x[r][feature], self.data.y[r]))
            .collect();
        vals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = vals.len();
        let total_ones = vals.iter().filter(|v| v.1).count();
        let min_leaf = self.params.min_leaf;
        let mut left_ones = 0;
        for i in 0..n - 1 {
            left_ones += usize::from(vals[i].1);
            let left_n = i + 1;
            if vals[i].0 == vals[i + 1].0 || left_n < min_leaf || n - left_n < min_leaf {
                continue;
            }
            let right_n = n - left_n;
            let impurity = (left_n as f64 * gini(left_ones, left_n)
                + right_n as f64 * gini(total_ones - left_ones, right_n))
                / n as f64;
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                let (lo, hi) = (vals[i].0, vals[i + 1].0);
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                *best = Some(Candidate {
                    impurity,
                    feature,
                    threshold,
                });
            }
        }
    }
}
